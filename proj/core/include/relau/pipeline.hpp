#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relau/evalkit.hpp"
#include "relau/feature_store.hpp"
#include "relau/fusion.hpp"
#include "relau/learner.hpp"
#include "relau/manifold.hpp"
#include "relau/relabel.hpp"

namespace relau {

/// Hyperparameter candidates for grid search. Gammas are relative widths:
/// the effective RBF gamma for a view is the listed value divided by the
/// mean squared pairwise distance of that view's training rows, so 1.0
/// means "median-scale kernel" regardless of feature dimensionality.
struct HyperGrid {
    std::vector<double> c_values;
    std::vector<double> gamma1_values;
    std::vector<double> gamma2_values;
};

struct TrainOptions {
    IntensityMode mode = IntensityMode::Continuous;
    WindowConfig window{};
    int border_margin = 2;
    double zero_class_ratio = 1.5;
    int max_train_pairs = 600;     // pair cap after class balancing
    int max_baseline_frames = 600; // frame cap for the baseline stack
    int isomap_dim = 40;
    int isomap_k = 8;
    int kcca_components = 20;
    double kcca_kappa = 1e-3;
    double svr_c = 1.0;
    double svr_epsilon = 0.1;
    double gamma1 = 1.0;  // relative width, geometric view
    double gamma2 = 1.0;  // relative width, appearance view
    std::uint64_t seed = 1;
    unsigned workers = 0;
    bool train_baseline = true;
};

void validate_train_options(const TrainOptions& options);

/// Feature configuration for one AU: which landmark distances, which
/// patches, which filter bank.
struct FeatureConfig {
    DistancePairConfig pairs;
    std::vector<PatchSpec> specs;
    GaborBank bank = GaborBank::standard();
};

/// Built-in configuration (same content as the config/ CSVs).
FeatureConfig default_feature_config(int au_id);

/// Single-frame regression stack used by the frame-based baseline:
/// Isomap on a_t, KCCA over (g_t, reduced a_t), SVR on intensity.
struct FrameStack {
    IsomapModel isomap;
    KccaModel kcca;
    SvrModel svr;
};

/// Everything needed to score new sequences for one AU: the pairwise
/// change scorer (Isomap on appearance differences, KCCA over the two pair
/// views, epsilon-SVR) plus, optionally, the baseline stack trained on the
/// same data. Immutable once trained.
struct TrainedModel {
    int au_id = 0;
    IntensityMode mode = IntensityMode::Continuous;
    WindowConfig window{};
    DistancePairConfig distance_pairs;
    std::vector<PatchSpec> patch_specs;
    std::vector<double> gabor_scales;
    std::vector<double> gabor_orientations;
    double gabor_sigma = 0.0;
    std::uint64_t feature_hash = 0;
    std::uint64_t seed = 0;

    IsomapModel isomap;
    KccaModel kcca;
    SvrModel svr;

    bool has_baseline = false;
    FrameStack baseline;

    GaborBank bank() const;
};

/// Trains the relative pipeline (and baseline, unless disabled) for one AU
/// from pre-extracted per-sequence features. `bundles` and `features` are
/// parallel arrays; features must have been extracted under `config`.
TrainedModel train_au(const std::vector<const SequenceBundle*>& bundles,
                      const std::vector<const SequenceFeatures*>& features,
                      const FeatureConfig& config, const TrainOptions& options);

/// Per-frame relative labels: pair scores c(t-i, t+j) from the SVR (each
/// unique pair evaluated once), aggregated per frame.
std::vector<RelativeLabel> predict_sequence(const TrainedModel& model,
                                            const SequenceFeatures& features,
                                            const WindowConfig& window);

struct BaselinePrediction {
    std::vector<double> intensity;       // per-frame, clipped to [0, 1]
    std::vector<RelativeLabel> labels;   // same aggregation as the relative path
};

/// Frame-based comparison path: per-frame intensity estimates; pair scores
/// are differences of estimates, run through the same aggregation.
BaselinePrediction baseline_predict(const TrainedModel& model,
                                    const SequenceFeatures& features,
                                    const WindowConfig& window);

/// Versioned single-file model serialization (JSON header + binary
/// matrices). load_model validates magic, version, and hashes.
void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

struct GridResult {
    double c = 0.0;
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double validation_f1 = 0.0;
    TrainedModel model;  // refit on all training data at the winning cell
};

/// Exhaustive search over the grid; validation split is subject-disjoint
/// (last quarter of subjects by sorted id, at least one). Selected by
/// macro-F1 of relative labels on the validation subjects; ties broken by
/// smaller C, then gamma1, then gamma2.
GridResult grid_search(const std::vector<const SequenceBundle*>& bundles,
                       const std::vector<const SequenceFeatures*>& features,
                       const FeatureConfig& config, const HyperGrid& grid,
                       const TrainOptions& options);

struct LosoOptions {
    TrainOptions train;
    std::vector<FeatureConfig> configs;  // one per evaluated AU
    bool skip_boundary = true;  // drop forced no-change boundary frames
                                // from the metrics
};

/// Leave-one-subject-out evaluation comparing the relative pipeline with
/// the frame-based baseline per AU. Feature extraction happens once per
/// (sequence, AU); folds run in a fixed order so the report is identical
/// at any worker count.
EvalReport loso_cv(const std::vector<SequenceBundle>& bundles,
                   const LosoOptions& options);

/// predictions.csv rows: frame, au_id, s, label in {inc, dec, same},
/// comparisons_used, boundary_flag. A non-empty `comment` is written as a
/// leading '#' line (run provenance: seed, config hash).
void write_predictions_csv(const std::string& path, int au_id,
                           const std::vector<RelativeLabel>& labels,
                           const std::string& comment = "");

} // namespace relau
