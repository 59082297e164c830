#include "relau/pipeline.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "relau/au_defaults.hpp"
#include "relau/hash.hpp"

namespace relau {

namespace {

/// Mean squared pairwise distance of the rows; the divisor that turns the
/// relative gamma widths into absolute RBF gammas.
double mean_sq_dist(const Eigen::MatrixXd& rows) {
    const Eigen::Index n = rows.rows();
    if (n < 2) return 1.0;
    const Eigen::VectorXd mean = rows.colwise().mean();
    const double mean_sq_norm = rows.rowwise().squaredNorm().mean();
    const double msd = 2.0 * (mean_sq_norm - mean.squaredNorm());
    return msd > 1e-12 ? msd : 1.0;
}

std::uint64_t mix_seed(std::uint64_t seed, int au_id, const char* tag) {
    std::uint64_t h = fnv1a64(&seed, sizeof(seed));
    h = fnv1a64(&au_id, sizeof(au_id), h);
    return fnv1a64(tag, std::strlen(tag), h);
}

/// Deterministic cap: seeded shuffle, keep the first `cap`, restore order.
std::vector<std::size_t> capped_indices(std::size_t n, std::size_t cap,
                                        std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (n <= cap) return idx;
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    return idx;
}

/// Ground-truth relative labels of one bundle from its annotation track.
std::vector<RelativeLabel> truth_relative(const SequenceBundle& bundle,
                                          int au_id, const WindowConfig& window,
                                          IntensityMode mode) {
    const AUAnnotation* annotation = bundle.find_annotation(au_id);
    if (annotation == nullptr)
        throw ValidationError("bundle " + bundle.sequence_id +
                              " lacks annotations for AU " +
                              std::to_string(au_id));
    std::vector<double> intensity;
    intensity.reserve(annotation->levels.size());
    for (const auto& entry : annotation->levels)
        intensity.push_back(intensity_value(entry, mode));
    return relative_labels_from_intensity(intensity, window);
}

struct PairMatrices {
    Eigen::MatrixXd geometric;   // n x 2k
    Eigen::MatrixXd appearance;  // n x app_dim (differences)
    Eigen::VectorXd targets;
};

/// Pair samples for one AU across several sequences, class-balanced and
/// capped, with feature rows filled from the extracted per-frame matrices.
PairMatrices collect_pairs(const std::vector<const SequenceBundle*>& bundles,
                           const std::vector<const SequenceFeatures*>& features,
                           int au_id, const TrainOptions& options) {
    struct Ref {
        std::size_t seq;
        int first, second;
        double target;
        int category;
    };
    std::vector<Ref> refs;
    for (std::size_t b = 0; b < bundles.size(); ++b) {
        const auto samples = sample_pairs(*bundles[b], au_id,
                                          options.border_margin, options.mode);
        for (const auto& s : samples)
            refs.push_back({b, s.first, s.second, s.target, s.category});
    }
    if (refs.empty())
        throw ValidationError("no training pairs for AU " +
                              std::to_string(au_id));

    std::vector<int> categories;
    categories.reserve(refs.size());
    for (const auto& r : refs) categories.push_back(r.category);
    const auto balanced = balance_zero_class(
        categories, options.zero_class_ratio,
        mix_seed(options.seed, au_id, "balance"));

    std::vector<Ref> kept;
    kept.reserve(balanced.size());
    for (std::size_t i : balanced) kept.push_back(refs[i]);
    const auto capped = capped_indices(
        kept.size(), static_cast<std::size_t>(options.max_train_pairs),
        mix_seed(options.seed, au_id, "pair-cap"));

    const Eigen::Index geo_dim = features.front()->geometric.cols();
    const Eigen::Index app_dim = features.front()->appearance.cols();
    PairMatrices out;
    out.geometric.resize(static_cast<Eigen::Index>(capped.size()), 2 * geo_dim);
    out.appearance.resize(static_cast<Eigen::Index>(capped.size()), app_dim);
    out.targets.resize(static_cast<Eigen::Index>(capped.size()));
    for (std::size_t row = 0; row < capped.size(); ++row) {
        const Ref& r = kept[capped[row]];
        const SequenceFeatures& f = *features[r.seq];
        const Eigen::Index e = static_cast<Eigen::Index>(row);
        out.geometric.row(e) << f.geometric.row(r.first),
            f.geometric.row(r.second);
        out.appearance.row(e) =
            f.appearance.row(r.second) - f.appearance.row(r.first);
        out.targets(e) = r.target;
    }
    return out;
}

std::vector<PairFeature> to_pair_features(const Eigen::MatrixXd& z1,
                                          const Eigen::MatrixXd& z2) {
    std::vector<PairFeature> out(static_cast<std::size_t>(z1.rows()));
    for (Eigen::Index i = 0; i < z1.rows(); ++i) {
        out[static_cast<std::size_t>(i)].z1 = z1.row(i).transpose();
        out[static_cast<std::size_t>(i)].z2 = z2.row(i).transpose();
    }
    return out;
}

/// Fits Isomap + KCCA + SVR on two raw views; the shared trunk of the
/// relative and baseline stacks.
void fit_stack(const Eigen::MatrixXd& view_geo, const Eigen::MatrixXd& view_app,
               const Eigen::VectorXd& targets, const TrainOptions& options,
               IsomapModel& isomap, KccaModel& kcca, SvrModel& svr) {
    isomap = isomap_fit(view_app, options.isomap_dim, options.isomap_k,
                        options.workers);
    const Eigen::MatrixXd& reduced = isomap.embedding;

    const double g1 = options.gamma1 / mean_sq_dist(view_geo);
    const double g2 = options.gamma2 / mean_sq_dist(reduced);
    kcca = kcca_fit(view_geo, reduced, g1, g2, options.kcca_kappa,
                    options.kcca_components);

    const auto [z1, z2] = kcca_project_batch(kcca, view_geo, reduced);
    TwoViewKernel kernel;
    kernel.gamma1 = options.gamma1 / mean_sq_dist(z1);
    kernel.gamma2 = options.gamma2 / mean_sq_dist(z2);
    svr = svr_train(to_pair_features(z1, z2), targets, options.svr_c,
                    options.svr_epsilon, kernel);
}

/// Projects raw (geo, app) rows through a fitted stack into SVR inputs.
std::vector<PairFeature> project_rows(const IsomapModel& isomap,
                                      const KccaModel& kcca,
                                      const Eigen::MatrixXd& geo,
                                      const Eigen::MatrixXd& app) {
    const Eigen::MatrixXd reduced = isomap_transform_batch(isomap, app);
    const auto [z1, z2] = kcca_project_batch(kcca, geo, reduced);
    return to_pair_features(z1, z2);
}

} // namespace

void validate_train_options(const TrainOptions& options) {
    validate_window(options.window);
    if (options.border_margin < 0)
        throw ValidationError("border_margin must be >= 0");
    if (options.zero_class_ratio <= 0.0)
        throw ValidationError("zero_class_ratio must be > 0");
    if (options.max_train_pairs < 2 || options.max_baseline_frames < 2)
        throw ValidationError("sample caps must be >= 2");
    if (options.isomap_dim < 1 || options.isomap_k < 1)
        throw ValidationError("isomap_dim and isomap_k must be >= 1");
    if (options.kcca_components < 1)
        throw ValidationError("kcca_components must be >= 1");
    if (options.kcca_kappa <= 0.0 || options.kcca_kappa > 1.0)
        throw ValidationError("kcca_kappa must be in (0, 1]");
    if (options.svr_c <= 0.0) throw ValidationError("svr_c must be > 0");
    if (options.svr_epsilon < 0.0)
        throw ValidationError("svr_epsilon must be >= 0");
    if (options.gamma1 <= 0.0 || options.gamma2 <= 0.0)
        throw ValidationError("gamma widths must be > 0");
}

FeatureConfig default_feature_config(int au_id) {
    FeatureConfig config;
    config.pairs = default_distance_pairs(au_id);
    config.specs = default_patch_specs(au_id);
    return config;
}

GaborBank TrainedModel::bank() const {
    return GaborBank(gabor_scales, gabor_orientations, gabor_sigma);
}

TrainedModel train_au(const std::vector<const SequenceBundle*>& bundles,
                      const std::vector<const SequenceFeatures*>& features,
                      const FeatureConfig& config, const TrainOptions& options) {
    validate_train_options(options);
    if (bundles.empty() || bundles.size() != features.size())
        throw ValidationError("train_au: bundles/features size mismatch");
    const int au_id = config.pairs.au_id;
    for (std::size_t i = 0; i < bundles.size(); ++i) {
        if (features[i]->au_id != au_id ||
            features[i]->sequence_id != bundles[i]->sequence_id)
            throw ValidationError("train_au: features do not match bundles");
        if (features[i]->geometric.rows() !=
            static_cast<Eigen::Index>(bundles[i]->frames.size()))
            throw ValidationError("train_au: feature row count mismatch for " +
                                  bundles[i]->sequence_id);
    }

    TrainedModel model;
    model.au_id = au_id;
    model.mode = options.mode;
    model.window = options.window;
    model.distance_pairs = config.pairs;
    model.patch_specs = config.specs;
    model.gabor_scales = config.bank.scales();
    model.gabor_orientations = config.bank.orientations();
    model.gabor_sigma = config.bank.sigma();
    model.feature_hash =
        feature_config_hash(config.pairs, config.specs, config.bank);
    model.seed = options.seed;

    const PairMatrices pairs = collect_pairs(bundles, features, au_id, options);
    fit_stack(pairs.geometric, pairs.appearance, pairs.targets, options,
              model.isomap, model.kcca, model.svr);

    if (options.train_baseline) {
        // Per-frame samples over the same eligible frames.
        std::vector<Eigen::Index> rows_per_seq;
        std::vector<std::pair<std::size_t, int>> frames;
        std::vector<double> targets;
        for (std::size_t b = 0; b < bundles.size(); ++b) {
            const AUAnnotation* annotation = bundles[b]->find_annotation(au_id);
            const auto eligible =
                eligible_frames(*annotation, options.border_margin);
            for (std::size_t t = 0; t < eligible.size(); ++t) {
                if (!eligible[t]) continue;
                frames.emplace_back(b, static_cast<int>(t));
                targets.push_back(
                    intensity_value(annotation->levels[t], options.mode));
            }
        }
        if (frames.size() < 2)
            throw ValidationError("baseline: not enough eligible frames");
        const auto capped = capped_indices(
            frames.size(), static_cast<std::size_t>(options.max_baseline_frames),
            mix_seed(options.seed, au_id, "frame-cap"));
        Eigen::MatrixXd geo(static_cast<Eigen::Index>(capped.size()),
                            features.front()->geometric.cols());
        Eigen::MatrixXd app(static_cast<Eigen::Index>(capped.size()),
                            features.front()->appearance.cols());
        Eigen::VectorXd y(static_cast<Eigen::Index>(capped.size()));
        for (std::size_t i = 0; i < capped.size(); ++i) {
            const auto& [b, t] = frames[capped[i]];
            const Eigen::Index e = static_cast<Eigen::Index>(i);
            geo.row(e) = features[b]->geometric.row(t);
            app.row(e) = features[b]->appearance.row(t);
            y(e) = targets[capped[i]];
        }
        fit_stack(geo, app, y, options, model.baseline.isomap,
                  model.baseline.kcca, model.baseline.svr);
        model.has_baseline = true;
    }
    return model;
}

std::vector<RelativeLabel> predict_sequence(const TrainedModel& model,
                                            const SequenceFeatures& features,
                                            const WindowConfig& window) {
    validate_window(window);
    if (features.au_id != model.au_id)
        throw ValidationError("predict_sequence: AU mismatch");
    const int n = static_cast<int>(features.geometric.rows());
    const int h = window.window / 2;

    // Every (t-i, t+j) pair any frame will ask for, evaluated once.
    std::map<std::pair<int, int>, double> cache;
    for (int t = 0; t < n; ++t)
        for (int i = 1; i <= h; ++i)
            for (int j = 1; j <= h; ++j) {
                const int u = t - i, v = t + j;
                if (u >= 0 && v < n) cache.emplace(std::make_pair(u, v), 0.0);
            }
    if (!cache.empty()) {
        const Eigen::Index m = static_cast<Eigen::Index>(cache.size());
        Eigen::MatrixXd geo(m, 2 * features.geometric.cols());
        Eigen::MatrixXd app(m, features.appearance.cols());
        Eigen::Index row = 0;
        for (const auto& [key, unused] : cache) {
            (void)unused;
            geo.row(row) << features.geometric.row(key.first),
                features.geometric.row(key.second);
            app.row(row) =
                features.appearance.row(key.second) -
                features.appearance.row(key.first);
            ++row;
        }
        const auto points = project_rows(model.isomap, model.kcca, geo, app);
        row = 0;
        for (auto& [key, score] : cache) {
            (void)key;
            score = svr_predict(model.svr, points[static_cast<std::size_t>(row)]);
            ++row;
        }
    }

    std::vector<RelativeLabel> labels(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t)
        labels[static_cast<std::size_t>(t)] = aggregate_relative(
            [&cache](int u, int v) { return cache.at({u, v}); }, t, window, n);
    return labels;
}

BaselinePrediction baseline_predict(const TrainedModel& model,
                                    const SequenceFeatures& features,
                                    const WindowConfig& window) {
    validate_window(window);
    if (!model.has_baseline)
        throw ValidationError("model has no baseline stack");
    if (features.au_id != model.au_id)
        throw ValidationError("baseline_predict: AU mismatch");

    const int n = static_cast<int>(features.geometric.rows());
    const auto points =
        project_rows(model.baseline.isomap, model.baseline.kcca,
                     features.geometric, features.appearance);
    BaselinePrediction out;
    out.intensity.resize(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t)
        out.intensity[static_cast<std::size_t>(t)] = std::clamp(
            svr_predict_raw(model.baseline.svr,
                            points[static_cast<std::size_t>(t)]),
            0.0, 1.0);

    // Pair score = difference of per-frame estimates (the pair target applied to
    // predictions), aggregated exactly like the relative path.
    out.labels.resize(static_cast<std::size_t>(n));
    const auto score = [&out](int u, int v) {
        return out.intensity[static_cast<std::size_t>(v)] -
               out.intensity[static_cast<std::size_t>(u)];
    };
    for (int t = 0; t < n; ++t)
        out.labels[static_cast<std::size_t>(t)] =
            aggregate_relative(score, t, window, n);
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr const char* kModelMagic = "relau-model";
constexpr int kModelVersion = 1;

void put_matrix(std::string& blob, const Eigen::MatrixXd& m) {
    const std::int64_t dims[2] = {m.rows(), m.cols()};
    blob.append(reinterpret_cast<const char*>(dims), sizeof(dims));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const double v = m(r, c);
            blob.append(reinterpret_cast<const char*>(&v), sizeof(v));
        }
}

void put_vector(std::string& blob, const Eigen::VectorXd& v) {
    put_matrix(blob, v);
}

struct BlobReader {
    const char* p;
    const char* end;

    void need(std::size_t bytes) const {
        if (static_cast<std::size_t>(end - p) < bytes)
            throw FormatError("model file truncated");
    }
    Eigen::MatrixXd matrix() {
        need(2 * sizeof(std::int64_t));
        std::int64_t dims[2];
        std::memcpy(dims, p, sizeof(dims));
        p += sizeof(dims);
        if (dims[0] < 0 || dims[1] < 0)
            throw FormatError("model file has negative matrix dims");
        Eigen::MatrixXd m(dims[0], dims[1]);
        need(static_cast<std::size_t>(dims[0]) *
             static_cast<std::size_t>(dims[1]) * sizeof(double));
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                std::memcpy(&m(r, c), p, sizeof(double));
                p += sizeof(double);
            }
        return m;
    }
    Eigen::VectorXd vector() {
        Eigen::MatrixXd m = matrix();
        if (m.cols() != 1 && m.size() != 0)
            throw FormatError("model file: expected a column vector");
        return Eigen::VectorXd(m.reshaped());
    }
};

void put_isomap(std::string& blob, const IsomapModel& m) {
    put_matrix(blob, m.training_points);
    put_matrix(blob, m.geodesic);
    put_matrix(blob, m.embedding);
    put_matrix(blob, m.eigenvectors);
    put_vector(blob, m.eigenvalues);
    put_vector(blob, m.mean_sq_geodesic);
}

void get_isomap(BlobReader& in, IsomapModel& m) {
    m.training_points = in.matrix();
    m.geodesic = in.matrix();
    m.embedding = in.matrix();
    m.eigenvectors = in.matrix();
    m.eigenvalues = in.vector();
    m.mean_sq_geodesic = in.vector();
}

void put_kcca(std::string& blob, const KccaModel& m) {
    put_matrix(blob, m.view1);
    put_matrix(blob, m.view2);
    put_matrix(blob, m.alpha1);
    put_matrix(blob, m.alpha2);
    put_vector(blob, m.correlations);
    put_vector(blob, m.row_mean1);
    put_vector(blob, m.row_mean2);
    put_vector(blob, m.proj_std1);
    put_vector(blob, m.proj_std2);
}

void get_kcca(BlobReader& in, KccaModel& m) {
    m.view1 = in.matrix();
    m.view2 = in.matrix();
    m.alpha1 = in.matrix();
    m.alpha2 = in.matrix();
    m.correlations = in.vector();
    m.row_mean1 = in.vector();
    m.row_mean2 = in.vector();
    m.proj_std1 = in.vector();
    m.proj_std2 = in.vector();
}

void put_svr(std::string& blob, const SvrModel& m) {
    Eigen::MatrixXd z1(static_cast<Eigen::Index>(m.points.size()),
                       m.points.empty() ? 0 : m.points.front().z1.size());
    Eigen::MatrixXd z2(static_cast<Eigen::Index>(m.points.size()),
                       m.points.empty() ? 0 : m.points.front().z2.size());
    for (std::size_t i = 0; i < m.points.size(); ++i) {
        z1.row(static_cast<Eigen::Index>(i)) = m.points[i].z1.transpose();
        z2.row(static_cast<Eigen::Index>(i)) = m.points[i].z2.transpose();
    }
    put_matrix(blob, z1);
    put_matrix(blob, z2);
    put_vector(blob, m.beta);
}

void get_svr(BlobReader& in, SvrModel& m) {
    const Eigen::MatrixXd z1 = in.matrix();
    const Eigen::MatrixXd z2 = in.matrix();
    m.beta = in.vector();
    if (z1.rows() != z2.rows() || z1.rows() != m.beta.size())
        throw FormatError("model file: SVR point/coefficient mismatch");
    m.points = to_pair_features(z1, z2);
}

nlohmann::json isomap_meta(const IsomapModel& m) {
    return {{"k", m.k}, {"dim", m.dim}};
}

nlohmann::json kcca_meta(const KccaModel& m) {
    return {{"gamma1", m.gamma1},
            {"gamma2", m.gamma2},
            {"kappa", m.kappa},
            {"components", m.components},
            {"total_mean1", m.total_mean1},
            {"total_mean2", m.total_mean2}};
}

nlohmann::json svr_meta(const SvrModel& m) {
    return {{"bias", m.bias},
            {"C", m.C},
            {"epsilon", m.epsilon},
            {"kernel_gamma1", m.kernel.gamma1},
            {"kernel_gamma2", m.kernel.gamma2},
            {"dual_objective", m.dual_objective},
            {"kkt_residual", m.kkt_residual}};
}

void apply_isomap_meta(const nlohmann::json& j, IsomapModel& m) {
    m.k = j.at("k").get<int>();
    m.dim = j.at("dim").get<int>();
}

void apply_kcca_meta(const nlohmann::json& j, KccaModel& m) {
    m.gamma1 = j.at("gamma1").get<double>();
    m.gamma2 = j.at("gamma2").get<double>();
    m.kappa = j.at("kappa").get<double>();
    m.components = j.at("components").get<int>();
    m.total_mean1 = j.at("total_mean1").get<double>();
    m.total_mean2 = j.at("total_mean2").get<double>();
}

void apply_svr_meta(const nlohmann::json& j, SvrModel& m) {
    m.bias = j.at("bias").get<double>();
    m.C = j.at("C").get<double>();
    m.epsilon = j.at("epsilon").get<double>();
    m.kernel.gamma1 = j.at("kernel_gamma1").get<double>();
    m.kernel.gamma2 = j.at("kernel_gamma2").get<double>();
    m.dual_objective = j.at("dual_objective").get<double>();
    m.kkt_residual = j.at("kkt_residual").get<double>();
}

} // namespace

void save_model(const TrainedModel& model, const std::string& path) {
    std::string blob;
    put_isomap(blob, model.isomap);
    put_kcca(blob, model.kcca);
    put_svr(blob, model.svr);
    if (model.has_baseline) {
        put_isomap(blob, model.baseline.isomap);
        put_kcca(blob, model.baseline.kcca);
        put_svr(blob, model.baseline.svr);
    }

    nlohmann::json header;
    header["magic"] = kModelMagic;
    header["version"] = kModelVersion;
    header["au_id"] = model.au_id;
    header["mode"] =
        model.mode == IntensityMode::Continuous ? "continuous" : "discrete";
    header["window"] = model.window.window;
    header["threshold"] = model.window.threshold;
    header["seed"] = model.seed;
    header["feature_hash"] = hash_hex(model.feature_hash);
    header["distance_pairs"] = nlohmann::json::array();
    for (const auto& [i, j] : model.distance_pairs.pairs)
        header["distance_pairs"].push_back({i, j});
    header["patch_specs"] = nlohmann::json::array();
    for (const auto& spec : model.patch_specs)
        header["patch_specs"].push_back({{"patch_id", spec.patch_id},
                                         {"quad", spec.quad},
                                         {"width", spec.width},
                                         {"height", spec.height}});
    header["gabor"] = {{"scales", model.gabor_scales},
                       {"orientations", model.gabor_orientations},
                       {"sigma", model.gabor_sigma}};
    header["isomap"] = isomap_meta(model.isomap);
    header["kcca"] = kcca_meta(model.kcca);
    header["svr"] = svr_meta(model.svr);
    header["has_baseline"] = model.has_baseline;
    if (model.has_baseline) {
        header["baseline_isomap"] = isomap_meta(model.baseline.isomap);
        header["baseline_kcca"] = kcca_meta(model.baseline.kcca);
        header["baseline_svr"] = svr_meta(model.baseline.svr);
    }
    header["checksum"] = hash_hex(fnv1a64(blob.data(), blob.size()));

    std::ofstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot write model file: " + path);
    file << header.dump() << "\n";
    file.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!file) throw IoError("short write on model file: " + path);
}

TrainedModel load_model(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open model file: " + path);
    std::string header_line;
    if (!std::getline(file, header_line))
        throw FormatError("model file has no header: " + path);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_line);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad model header in " + path + ": " + e.what());
    }
    if (header.value("magic", "") != kModelMagic)
        throw FormatError("not a model file: " + path);
    if (header.value("version", -1) != kModelVersion)
        throw FormatError("unsupported model version in " + path);

    std::string blob((std::istreambuf_iterator<char>(file)),
                     std::istreambuf_iterator<char>());
    if (hash_hex(fnv1a64(blob.data(), blob.size())) !=
        header.value("checksum", ""))
        throw FormatError("model checksum mismatch in " + path);

    TrainedModel model;
    try {
        model.au_id = header.at("au_id").get<int>();
        model.mode = header.at("mode").get<std::string>() == "discrete"
                         ? IntensityMode::Discrete
                         : IntensityMode::Continuous;
        model.window.window = header.at("window").get<int>();
        model.window.threshold = header.at("threshold").get<double>();
        model.seed = header.at("seed").get<std::uint64_t>();
        model.feature_hash =
            std::stoull(header.at("feature_hash").get<std::string>(), nullptr, 16);
        model.distance_pairs.au_id = model.au_id;
        for (const auto& p : header.at("distance_pairs"))
            model.distance_pairs.pairs.emplace_back(p.at(0).get<int>(),
                                                    p.at(1).get<int>());
        for (const auto& s : header.at("patch_specs")) {
            PatchSpec spec;
            spec.patch_id = s.at("patch_id").get<std::string>();
            spec.au_id = model.au_id;
            const auto quad = s.at("quad").get<std::vector<int>>();
            if (quad.size() != 4)
                throw FormatError("model patch spec quad must have 4 indices");
            std::copy(quad.begin(), quad.end(), spec.quad.begin());
            spec.width = s.at("width").get<int>();
            spec.height = s.at("height").get<int>();
            model.patch_specs.push_back(spec);
        }
        model.gabor_scales =
            header.at("gabor").at("scales").get<std::vector<double>>();
        model.gabor_orientations =
            header.at("gabor").at("orientations").get<std::vector<double>>();
        model.gabor_sigma = header.at("gabor").at("sigma").get<double>();

        BlobReader in{blob.data(), blob.data() + blob.size()};
        get_isomap(in, model.isomap);
        apply_isomap_meta(header.at("isomap"), model.isomap);
        get_kcca(in, model.kcca);
        apply_kcca_meta(header.at("kcca"), model.kcca);
        get_svr(in, model.svr);
        apply_svr_meta(header.at("svr"), model.svr);
        model.has_baseline = header.at("has_baseline").get<bool>();
        if (model.has_baseline) {
            get_isomap(in, model.baseline.isomap);
            apply_isomap_meta(header.at("baseline_isomap"),
                              model.baseline.isomap);
            get_kcca(in, model.baseline.kcca);
            apply_kcca_meta(header.at("baseline_kcca"), model.baseline.kcca);
            get_svr(in, model.baseline.svr);
            apply_svr_meta(header.at("baseline_svr"), model.baseline.svr);
        }
        if (in.p != in.end)
            throw FormatError("model file has trailing bytes: " + path);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad model metadata in " + path + ": " + e.what());
    }
    return model;
}

// ---------------------------------------------------------------------------
// Grid search and LOSO evaluation

namespace {

/// Pools a prediction/truth pair into a confusion matrix; boundary frames
/// optionally skipped (their label is forced no-change on both sides).
void pool_confusion(Confusion3& confusion,
                    const std::vector<RelativeLabel>& truth,
                    const std::vector<RelativeLabel>& pred,
                    bool skip_boundary) {
    if (truth.size() != pred.size())
        throw ValidationError("confusion pooling: length mismatch");
    for (std::size_t t = 0; t < truth.size(); ++t) {
        if (skip_boundary && (truth[t].boundary || pred[t].boundary)) continue;
        confusion[static_cast<std::size_t>(label_index(truth[t].label))]
                 [static_cast<std::size_t>(label_index(pred[t].label))]++;
    }
}

std::vector<std::string> sorted_subjects(
    const std::vector<const SequenceBundle*>& bundles) {
    std::vector<std::string> subjects;
    for (const auto* b : bundles) subjects.push_back(b->subject_id);
    std::sort(subjects.begin(), subjects.end());
    subjects.erase(std::unique(subjects.begin(), subjects.end()),
                   subjects.end());
    return subjects;
}

} // namespace

GridResult grid_search(const std::vector<const SequenceBundle*>& bundles,
                       const std::vector<const SequenceFeatures*>& features,
                       const FeatureConfig& config, const HyperGrid& grid,
                       const TrainOptions& options) {
    if (grid.c_values.empty() || grid.gamma1_values.empty() ||
        grid.gamma2_values.empty())
        throw ValidationError("grid_search: empty hyperparameter grid");
    for (double c : grid.c_values)
        if (c <= 0.0) throw ValidationError("grid_search: C must be > 0");
    for (double g : grid.gamma1_values)
        if (g <= 0.0) throw ValidationError("grid_search: gamma1 must be > 0");
    for (double g : grid.gamma2_values)
        if (g <= 0.0) throw ValidationError("grid_search: gamma2 must be > 0");

    const auto subjects = sorted_subjects(bundles);
    if (subjects.size() < 2)
        throw ValidationError(
            "grid_search: need >= 2 subjects for a subject-disjoint split");
    const std::size_t n_val = std::max<std::size_t>(1, subjects.size() / 4);
    const std::size_t val_start = subjects.size() - n_val;

    std::vector<const SequenceBundle*> train_b, val_b;
    std::vector<const SequenceFeatures*> train_f, val_f;
    for (std::size_t i = 0; i < bundles.size(); ++i) {
        const auto it = std::lower_bound(subjects.begin(), subjects.end(),
                                         bundles[i]->subject_id);
        const bool in_val = static_cast<std::size_t>(
                                std::distance(subjects.begin(), it)) >= val_start;
        if (in_val) {
            val_b.push_back(bundles[i]);
            val_f.push_back(features[i]);
        } else {
            train_b.push_back(bundles[i]);
            train_f.push_back(features[i]);
        }
    }

    GridResult best;
    bool have_best = false;
    const int au_id = config.pairs.au_id;
    for (double c : grid.c_values) {
        for (double g1 : grid.gamma1_values) {
            for (double g2 : grid.gamma2_values) {
                TrainOptions cell = options;
                cell.svr_c = c;
                cell.gamma1 = g1;
                cell.gamma2 = g2;
                cell.train_baseline = false;
                const TrainedModel model =
                    train_au(train_b, train_f, config, cell);
                Confusion3 confusion{};
                for (std::size_t i = 0; i < val_b.size(); ++i) {
                    const auto pred =
                        predict_sequence(model, *val_f[i], options.window);
                    const auto truth = truth_relative(
                        *val_b[i], au_id, options.window, options.mode);
                    pool_confusion(confusion, truth, pred, true);
                }
                const double f1 = macro_f1(confusion);
                if (!have_best || f1 > best.validation_f1) {
                    best.c = c;
                    best.gamma1 = g1;
                    best.gamma2 = g2;
                    best.validation_f1 = f1;
                    have_best = true;
                }
            }
        }
    }

    // Refit the winning cell on all data (train + validation subjects).
    TrainOptions winner = options;
    winner.svr_c = best.c;
    winner.gamma1 = best.gamma1;
    winner.gamma2 = best.gamma2;
    best.model = train_au(bundles, features, config, winner);
    return best;
}

EvalReport loso_cv(const std::vector<SequenceBundle>& bundles,
                   const LosoOptions& options) {
    validate_train_options(options.train);
    if (options.configs.empty())
        throw ValidationError("loso_cv: no AU configs given");
    if (bundles.size() < 2)
        throw ValidationError("loso_cv: need >= 2 subjects");

    std::vector<const SequenceBundle*> refs;
    for (const auto& b : bundles) refs.push_back(&b);
    const auto subjects = sorted_subjects(refs);
    if (subjects.size() < 2)
        throw ValidationError("loso_cv: need >= 2 distinct subjects");

    EvalReport report;
    for (const auto& config : options.configs) {
        const int au_id = config.pairs.au_id;

        // Features depend only on the config, never on the split: extract
        // once per sequence and share across folds.
        std::vector<SequenceFeatures> features;
        features.reserve(bundles.size());
        for (const auto& bundle : bundles)
            features.push_back(extract_sequence(bundle, config.pairs,
                                                config.specs, config.bank,
                                                options.train.workers));

        Confusion3 conf_rel{}, conf_base{};
        std::vector<double> auc_scores_rel, auc_scores_base;
        std::vector<bool> auc_truth;
        for (const auto& held_out : subjects) {
            std::vector<const SequenceBundle*> train_b;
            std::vector<const SequenceFeatures*> train_f;
            std::vector<std::size_t> test_idx;
            for (std::size_t i = 0; i < bundles.size(); ++i) {
                if (bundles[i].subject_id == held_out) {
                    test_idx.push_back(i);
                } else {
                    train_b.push_back(&bundles[i]);
                    train_f.push_back(&features[i]);
                }
            }
            const TrainedModel model =
                train_au(train_b, train_f, config, options.train);
            for (std::size_t i : test_idx) {
                const auto truth = truth_relative(bundles[i], au_id,
                                                  options.train.window,
                                                  options.train.mode);
                const auto pred = predict_sequence(model, features[i],
                                                   options.train.window);
                const auto base = baseline_predict(model, features[i],
                                                   options.train.window);
                pool_confusion(conf_rel, truth, pred, options.skip_boundary);
                pool_confusion(conf_base, truth, base.labels,
                               options.skip_boundary);
                for (std::size_t t = 0; t < truth.size(); ++t) {
                    if (options.skip_boundary && truth[t].boundary) continue;
                    auc_truth.push_back(truth[t].label != 0);
                    auc_scores_rel.push_back(std::abs(pred[t].score));
                    auc_scores_base.push_back(std::abs(base.labels[t].score));
                }
            }
        }

        EvalAuRow row;
        row.au_id = au_id;
        row.f1_relative = macro_f1(conf_rel);
        row.f1_baseline = macro_f1(conf_base);
        row.accuracy_relative = accuracy(conf_rel);
        row.accuracy_baseline = accuracy(conf_base);
        try {
            row.auc_relative = roc_auc(auc_scores_rel, auc_truth);
            row.auc_baseline = roc_auc(auc_scores_base, auc_truth);
            row.auc_defined = true;
        } catch (const NumericError&) {
            report.warnings.push_back(
                "AU " + std::to_string(au_id) +
                ": AUC undefined (single-class ground truth)");
        }
        report.rows.push_back(row);
    }

    nlohmann::json snapshot;
    snapshot["window"] = options.train.window.window;
    snapshot["threshold"] = options.train.window.threshold;
    snapshot["mode"] = options.train.mode == IntensityMode::Continuous
                           ? "continuous"
                           : "discrete";
    snapshot["seed"] = options.train.seed;
    snapshot["border_margin"] = options.train.border_margin;
    snapshot["skip_boundary"] = options.skip_boundary;
    std::vector<int> au_ids;
    for (const auto& config : options.configs)
        au_ids.push_back(config.pairs.au_id);
    snapshot["au_ids"] = au_ids;
    report.config_snapshot = snapshot.dump();

    report.finalize();
    return report;
}

void write_predictions_csv(const std::string& path, int au_id,
                           const std::vector<RelativeLabel>& labels,
                           const std::string& comment) {
    std::ostringstream out;
    if (!comment.empty()) out << "# " << comment << "\n";
    out << "frame,au_id,s,label,comparisons_used,boundary_flag\n";
    for (std::size_t t = 0; t < labels.size(); ++t) {
        const RelativeLabel& l = labels[t];
        const char* name = l.label > 0 ? "inc" : (l.label < 0 ? "dec" : "same");
        out << t << "," << au_id << "," << format_g9(l.score) << "," << name
            << "," << l.comparisons_used << "," << (l.boundary ? 1 : 0) << "\n";
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot write predictions: " + path);
    file << out.str();
}

} // namespace relau
