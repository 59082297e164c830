#include "relau/appearance.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace relau {

namespace {

// ---------------------------------------------------------------------------
// FFT plumbing. FFTW plan creation is not thread-safe; plans are cached per
// transform size behind a mutex and executed with the new-array interface,
// which is safe to call concurrently.

struct FftPlans {
    fftw_plan forward;
    fftw_plan backward;
};

class FftPlanCache {
public:
    static FftPlanCache& instance() {
        static FftPlanCache cache;
        return cache;
    }

    FftPlans get(int rows, int cols) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto key = std::make_pair(rows, cols);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;

        std::vector<std::complex<double>> buf(
            static_cast<std::size_t>(rows) * cols);
        auto* raw = reinterpret_cast<fftw_complex*>(buf.data());
        FftPlans plans;
        // FFTW_UNALIGNED lets the plan run on any caller buffer.
        plans.forward = fftw_plan_dft_2d(rows, cols, raw, raw, FFTW_FORWARD,
                                         FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans.backward = fftw_plan_dft_2d(rows, cols, raw, raw, FFTW_BACKWARD,
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_[key] = plans;
        return plans;
    }

private:
    std::mutex mutex_;
    std::map<std::pair<int, int>, FftPlans> plans_;
};

void fft_inplace(const fftw_plan& plan, std::vector<std::complex<double>>& buf) {
    auto* raw = reinterpret_cast<fftw_complex*>(buf.data());
    fftw_execute_dft(plan, raw, raw);
}

int reflect_index(int i, int n) {
    // Reflect without repeating the border sample (OpenCV BORDER_REFLECT_101
    // style would skip it; here the border sample repeats, matching a plain
    // mirror: -1 -> 0, -2 -> 1, n -> n-1).
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

} // namespace

// ---------------------------------------------------------------------------
// GaborBank

struct GaborBank::FrequencyPlan {
    int height = 0, width = 0;     // patch size
    int pad = 0;                   // reflect padding on each side
    int fft_rows = 0, fft_cols = 0;
    // One spectrum per filter, scale-major order, each fft_rows*fft_cols.
    std::vector<std::vector<std::complex<double>>> kernel_spectra;
};

GaborBank GaborBank::standard() {
    std::vector<double> scales, orientations;
    for (int s = 0; s < 5; ++s)
        scales.push_back(std::numbers::pi / 2.0 * std::pow(2.0, -s / 2.0));
    for (int o = 0; o < 6; ++o)
        orientations.push_back(o * std::numbers::pi / 6.0);
    return GaborBank(std::move(scales), std::move(orientations), std::numbers::pi);
}

GaborBank::GaborBank(std::vector<double> scales, std::vector<double> orientations,
                     double sigma)
    : scales_(std::move(scales)),
      orientations_(std::move(orientations)),
      sigma_(sigma) {
    if (sigma_ <= 0.0) throw ValidationError("Gabor sigma must be positive");
    if (scales_.empty() || orientations_.empty())
        throw ValidationError("Gabor bank needs at least one scale and orientation");
    for (double b : scales_)
        if (b <= 0.0) throw ValidationError("Gabor scale must be positive");
}

int GaborBank::support(int scale_idx, int max_side) const {
    const double beta = scales_[static_cast<std::size_t>(scale_idx)];
    int s = static_cast<int>(std::ceil(8.0 * sigma_ / beta));
    if (s % 2 == 0) ++s;
    int cap = max_side;
    if (cap % 2 == 0) --cap;
    if (cap < 3) cap = 3;
    return std::min(s, cap);
}

Eigen::MatrixXcd GaborBank::kernel(int scale_idx, int orient_idx,
                                   int max_side) const {
    const double beta = scales_[static_cast<std::size_t>(scale_idx)];
    const double theta = orientations_[static_cast<std::size_t>(orient_idx)];
    const double kx = beta * std::cos(theta);
    const double ky = beta * std::sin(theta);
    const int s = support(scale_idx, max_side);
    const int c = (s - 1) / 2;
    const double amp = beta * beta / (sigma_ * sigma_);

    Eigen::MatrixXd envelope(s, s), carrier_cos(s, s), carrier_sin(s, s);
    double env_sum = 0.0, cos_sum = 0.0;
    for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x) {
            const double u = x - c, v = y - c;
            const double env =
                std::exp(-(u * u + v * v) * beta * beta / (2.0 * sigma_ * sigma_));
            const double phase = kx * u + ky * v;
            envelope(y, x) = env;
            carrier_cos(y, x) = env * std::cos(phase);
            carrier_sin(y, x) = env * std::sin(phase);
            env_sum += env;
            cos_sum += env * std::cos(phase);
        }
    }
    // Discrete analogue of the exp(-sigma^2/2) DC-removal term: subtract the
    // exact envelope-weighted mean so the truncated real part sums to zero.
    const double dc = cos_sum / env_sum;

    Eigen::MatrixXcd kern(s, s);
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x)
            kern(y, x) = std::complex<double>(
                amp * (carrier_cos(y, x) - dc * envelope(y, x)),
                amp * carrier_sin(y, x));
    return kern;
}

std::shared_ptr<const GaborBank::FrequencyPlan> GaborBank::plan_for(
    int height, int width) const {
    {
        std::lock_guard<std::mutex> lock(cache_->mutex);
        auto it = cache_->plans.find({height, width});
        if (it != cache_->plans.end()) return it->second;
    }

    const int max_side = std::min(height, width);
    int max_support = 3;
    for (std::size_t s = 0; s < scales_.size(); ++s)
        max_support = std::max(max_support, support(static_cast<int>(s), max_side));

    auto plan = std::make_shared<FrequencyPlan>();
    plan->height = height;
    plan->width = width;
    plan->pad = (max_support - 1) / 2;
    plan->fft_rows = height + max_support - 1;
    plan->fft_cols = width + max_support - 1;

    const auto fft = FftPlanCache::instance().get(plan->fft_rows, plan->fft_cols);
    const std::size_t n =
        static_cast<std::size_t>(plan->fft_rows) * plan->fft_cols;

    for (std::size_t si = 0; si < scales_.size(); ++si) {
        for (std::size_t oi = 0; oi < orientations_.size(); ++oi) {
            const Eigen::MatrixXcd k =
                kernel(static_cast<int>(si), static_cast<int>(oi), max_side);
            const int s = static_cast<int>(k.rows());
            const int off = (max_support - s) / 2;  // center-align all supports

            // Correlation out(q) = sum_m K(m) P(q+m) becomes a circular
            // convolution with the index-reversed kernel.
            std::vector<std::complex<double>> spec(n, {0.0, 0.0});
            for (int y = 0; y < s; ++y) {
                for (int x = 0; x < s; ++x) {
                    const int my = (plan->fft_rows - (y + off)) % plan->fft_rows;
                    const int mx = (plan->fft_cols - (x + off)) % plan->fft_cols;
                    spec[static_cast<std::size_t>(my) * plan->fft_cols + mx] =
                        k(y, x);
                }
            }
            fft_inplace(fft.forward, spec);
            plan->kernel_spectra.push_back(std::move(spec));
        }
    }

    std::lock_guard<std::mutex> lock(cache_->mutex);
    auto [it, inserted] = cache_->plans.emplace(std::make_pair(height, width), plan);
    (void)inserted;
    return it->second;
}

std::vector<Eigen::ArrayXXd> gabor_responses(const Patch& patch,
                                             const GaborBank& bank) {
    const int h = patch.height, w = patch.width;
    if (h < 3 || w < 3)
        throw ValidationError("patch smaller than 3x3 in gabor_responses");

    auto plan = bank.plan_for(h, w);
    const int rows = plan->fft_rows, cols = plan->fft_cols, pad = plan->pad;
    const std::size_t n = static_cast<std::size_t>(rows) * cols;
    const auto fft = FftPlanCache::instance().get(rows, cols);

    // Reflect-padded patch, then its spectrum.
    std::vector<std::complex<double>> image(n);
    for (int y = 0; y < rows; ++y) {
        const int sy = reflect_index(y - pad, h);
        for (int x = 0; x < cols; ++x) {
            const int sx = reflect_index(x - pad, w);
            image[static_cast<std::size_t>(y) * cols + x] =
                static_cast<double>(patch.at(sx, sy));
        }
    }
    fft_inplace(fft.forward, image);

    std::vector<Eigen::ArrayXXd> maps;
    maps.reserve(plan->kernel_spectra.size());
    std::vector<std::complex<double>> work(n);
    const double scale = 1.0 / static_cast<double>(n);
    for (const auto& spec : plan->kernel_spectra) {
        for (std::size_t i = 0; i < n; ++i) work[i] = image[i] * spec[i];
        fft_inplace(fft.backward, work);
        Eigen::ArrayXXd mag(h, w);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                mag(y, x) =
                    std::abs(work[static_cast<std::size_t>(y) * cols + x]) * scale;
        maps.push_back(std::move(mag));
    }
    return maps;
}

Eigen::VectorXd lbp_histogram(const Eigen::ArrayXXd& map) {
    const int h = static_cast<int>(map.rows());
    const int w = static_cast<int>(map.cols());
    if (h < 3 || w < 3) throw ValidationError("map smaller than 3x3 in lbp_histogram");

    // (dx, dy) in bit order: E, NE, N, NW, W, SW, S, SE; y grows downward.
    static constexpr int dx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
    static constexpr int dy[8] = {0, -1, -1, -1, 0, 1, 1, 1};

    Eigen::VectorXd hist = Eigen::VectorXd::Zero(kLbpBins);
    for (int y = 1; y + 1 < h; ++y) {
        for (int x = 1; x + 1 < w; ++x) {
            const double center = map(y, x);
            unsigned code = 0;
            for (int b = 0; b < 8; ++b)
                if (map(y + dy[b], x + dx[b]) >= center) code |= 1u << b;
            hist[static_cast<Eigen::Index>(code)] += 1.0;
        }
    }
    return hist;
}

Eigen::VectorXd appearance_vector(const Frame& frame,
                                  const std::vector<PatchSpec>& specs,
                                  const GaborBank& bank) {
    const int per_patch = bank.filter_count() * kLbpBins;
    Eigen::VectorXd out(static_cast<Eigen::Index>(specs.size()) * per_patch);
    Eigen::Index offset = 0;
    for (const auto& spec : specs) {
        auto it = frame.patches.find(spec.patch_id);
        if (it == frame.patches.end())
            throw ValidationError("frame " + std::to_string(frame.index) +
                                  " is missing patch '" + spec.patch_id + "'");
        const auto maps = gabor_responses(it->second, bank);
        for (const auto& map : maps) {
            out.segment(offset, kLbpBins) = lbp_histogram(map);
            offset += kLbpBins;
        }
    }
    return out;
}

Eigen::VectorXd pair_appearance(const Eigen::VectorXd& first,
                                const Eigen::VectorXd& second) {
    if (first.size() != second.size())
        throw ValidationError("appearance feature length mismatch");
    return second - first;
}

Patch warp_patch(const std::array<Eigen::Vector2d, 4>& quad,
                 const Patch& source, const PatchSpec& spec) {
    const int w = spec.width, h = spec.height;
    if (w < 8 || h < 8) throw ValidationError("patch output size must be >= 8x8");

    auto signed_area = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                          const Eigen::Vector2d& c) {
        return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) -
                      (c.x() - a.x()) * (b.y() - a.y()));
    };
    // Split along the (v0, v2) diagonal.
    if (std::abs(signed_area(quad[0], quad[1], quad[2])) < 1e-12 ||
        std::abs(signed_area(quad[0], quad[2], quad[3])) < 1e-12)
        throw ValidationError("degenerate warp triangle");

    auto sample = [&source](double sx, double sy) {
        const int x0 = static_cast<int>(std::floor(sx));
        const int y0 = static_cast<int>(std::floor(sy));
        const double fx = sx - x0, fy = sy - y0;
        auto clamp_px = [&source](int x, int y) {
            x = std::clamp(x, 0, source.width - 1);
            y = std::clamp(y, 0, source.height - 1);
            return static_cast<double>(source.at(x, y));
        };
        const double top = clamp_px(x0, y0) * (1 - fx) + clamp_px(x0 + 1, y0) * fx;
        const double bot =
            clamp_px(x0, y0 + 1) * (1 - fx) + clamp_px(x0 + 1, y0 + 1) * fx;
        return top * (1 - fy) + bot * fy;
    };

    Patch out;
    out.patch_id = spec.patch_id;
    out.width = w;
    out.height = h;
    out.pixels.resize(static_cast<std::size_t>(w) * h);

    // Unit-square corners map to quad corners: (0,0)->v0, (1,0)->v1,
    // (1,1)->v2, (0,1)->v3; the square splits along the (0,0)-(1,1) diagonal.
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double u = (x + 0.5) / w;
            const double v = (y + 0.5) / h;
            Eigen::Vector2d src;
            if (u >= v) {
                // Triangle {(0,0),(1,0),(1,1)} -> (v0, v1, v2).
                const double l1 = u - v, l2 = v, l0 = 1.0 - u;
                src = l0 * quad[0] + l1 * quad[1] + l2 * quad[2];
            } else {
                // Triangle {(0,0),(1,1),(0,1)} -> (v0, v2, v3).
                const double l1 = u, l2 = v - u, l0 = 1.0 - v;
                src = l0 * quad[0] + l1 * quad[2] + l2 * quad[3];
            }
            const double value = sample(src.x(), src.y());
            out.at(x, y) = static_cast<std::uint8_t>(
                std::clamp<long>(std::lround(value), 0, 255));
        }
    }
    return out;
}

std::vector<PatchSpec> load_patch_specs(const std::string& path, int au_id) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open patch spec config: " + path);
    std::vector<PatchSpec> specs;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string tok;
        std::vector<std::string> cols;
        while (std::getline(ss, tok, ',')) cols.push_back(tok);
        if (cols.size() != 7)
            throw FormatError("expected 'patch_id,i0,i1,i2,i3,W,H' rows in " + path);
        PatchSpec spec;
        spec.patch_id = cols[0];
        spec.au_id = au_id;
        for (int i = 0; i < 4; ++i)
            spec.quad[static_cast<std::size_t>(i)] = std::stoi(cols[static_cast<std::size_t>(i) + 1]);
        spec.width = std::stoi(cols[5]);
        spec.height = std::stoi(cols[6]);
        if (spec.width < 8 || spec.height < 8)
            throw FormatError("patch size must be >= 8 in " + path);
        std::set<int> distinct(spec.quad.begin(), spec.quad.end());
        if (distinct.size() != 4)
            throw FormatError("patch quad indices must be distinct in " + path);
        specs.push_back(std::move(spec));
    }
    return specs;
}

} // namespace relau
