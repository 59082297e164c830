#pragma once

#include <Eigen/Core>
#include <array>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "relau/seqmodel.hpp"

namespace relau {

/// Source quadrilateral (4 landmark indices) and fixed output size for one
/// texture patch.
struct PatchSpec {
    std::string patch_id;
    int au_id = 0;
    std::array<int, 4> quad{0, 1, 2, 3};
    int width = 32;
    int height = 32;
};

/// LBP histogram bin count; plain 8-neighbor codes.
inline constexpr int kLbpBins = 256;

/// 5 scales x 6 orientations Gabor filter bank.
///
/// Filters follow the DC-free real / odd imaginary construction: the
/// envelope-weighted cosine has the discrete envelope mean subtracted so
/// the real part sums to zero exactly on any truncated support.
class GaborBank {
public:
    /// Default bank: beta_s = (pi/2) * 2^(-s/2) for s = 0..4,
    /// theta_o = o*pi/6 for o = 0..5, sigma = pi.
    static GaborBank standard();

    GaborBank(std::vector<double> scales, std::vector<double> orientations,
              double sigma);

    const std::vector<double>& scales() const { return scales_; }
    const std::vector<double>& orientations() const { return orientations_; }
    double sigma() const { return sigma_; }
    int filter_count() const {
        return static_cast<int>(scales_.size() * orientations_.size());
    }

    /// Spatial-domain complex kernel (real = f1, imag = f2) for filter
    /// (scale_idx, orient_idx) at the support implied by a max_side-pixel
    /// patch. Row-major, odd square support.
    Eigen::MatrixXcd kernel(int scale_idx, int orient_idx, int max_side) const;

    /// Side length of the square support for a given scale on a patch whose
    /// smaller side is max_side: smallest odd integer >= 8*sigma/beta,
    /// capped at the largest odd value <= max_side.
    int support(int scale_idx, int max_side) const;

    struct FrequencyPlan;  // per-patch-size precomputed kernel spectra

    /// Precomputes kernel spectra for a patch size; thread-safe and cached.
    std::shared_ptr<const FrequencyPlan> plan_for(int height, int width) const;

private:
    std::vector<double> scales_;
    std::vector<double> orientations_;
    double sigma_;

    // Shared across copies (plans depend only on the filter parameters),
    // which keeps the bank copyable despite the mutex.
    struct PlanCache {
        std::mutex mutex;
        std::map<std::pair<int, int>, std::shared_ptr<const FrequencyPlan>>
            plans;
    };
    std::shared_ptr<PlanCache> cache_ = std::make_shared<PlanCache>();
};

/// 30 Gabor magnitude maps (scale-major order: scale*6 + orientation) from
/// correlating the patch with each complex filter, same-size output,
/// reflect padding. Throws ValidationError for patches smaller than 3x3.
std::vector<Eigen::ArrayXXd> gabor_responses(const Patch& patch,
                                             const GaborBank& bank);

/// 256-bin LBP histogram over the interior pixels of a real-valued map.
/// Neighbor order east, NE, N, NW, W, SW, S, SE (bit 0 = east), bit set
/// iff neighbor >= center.
Eigen::VectorXd lbp_histogram(const Eigen::ArrayXXd& map);

/// Concatenated LGBP histograms: per patch 30 Gabor maps -> 30 histograms,
/// patches in spec order; total length 30 * n_patches * 256.
Eigen::VectorXd appearance_vector(const Frame& frame,
                                  const std::vector<PatchSpec>& specs,
                                  const GaborBank& bank);

/// Pairwise appearance difference a = a_second - a_first.
Eigen::VectorXd pair_appearance(const Eigen::VectorXd& first,
                                const Eigen::VectorXd& second);

/// Warps the quadrilateral (projected image-plane points, order matching
/// PatchSpec::quad) from the source image onto a W x H patch. The quad is
/// split along the (v0, v2) diagonal; each output pixel maps to the source
/// via barycentric coordinates of its triangle, bilinear sampling, border
/// clamp. Throws ValidationError when either triangle is degenerate.
Patch warp_patch(const std::array<Eigen::Vector2d, 4>& quad,
                 const Patch& source, const PatchSpec& spec);

/// Reads `config/patches/<au_id>.csv` rows (patch_id,i0,i1,i2,i3,W,H).
std::vector<PatchSpec> load_patch_specs(const std::string& path, int au_id);

} // namespace relau
