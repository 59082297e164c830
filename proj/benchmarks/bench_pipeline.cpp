#include <benchmark/benchmark.h>

#include "relau/pipeline.hpp"
#include "relau/synth.hpp"

using namespace relau;

namespace {

constexpr int kAu = 12;

const std::vector<SequenceBundle>& corpus() {
    static const std::vector<SequenceBundle> bundles = [] {
        SynthConfig cfg;
        cfg.seed = 5;
        cfg.n_subjects = 3;
        cfg.frames_per_sequence = 40;
        cfg.au_ids = {kAu};
        cfg.patch_size = 32;
        return generate(cfg);
    }();
    return bundles;
}

const FeatureConfig& feature_config() {
    static const FeatureConfig cfg = default_feature_config(kAu);
    return cfg;
}

const std::vector<SequenceFeatures>& corpus_features() {
    static const std::vector<SequenceFeatures> features = [] {
        std::vector<SequenceFeatures> out;
        for (const auto& b : corpus())
            out.push_back(extract_sequence(b, feature_config().pairs,
                                           feature_config().specs,
                                           feature_config().bank));
        return out;
    }();
    return features;
}

const TrainedModel& model() {
    static const TrainedModel m = [] {
        std::vector<const SequenceBundle*> bundles;
        for (const auto& b : corpus()) bundles.push_back(&b);
        std::vector<const SequenceFeatures*> features;
        for (const auto& f : corpus_features()) features.push_back(&f);
        TrainOptions options;
        options.window = {10, 0.15};
        options.isomap_dim = 8;
        options.isomap_k = 8;
        options.kcca_components = 4;
        options.max_train_pairs = 200;
        return train_au(bundles, features, feature_config(), options);
    }();
    return m;
}

} // namespace

/// Feature extraction cost per frame: normalization, distances, warps,
/// filter bank, histograms for two 32x32 patches.
static void BM_ExtractSequence(benchmark::State& state) {
    const auto& bundle = corpus()[0];
    for (auto _ : state) {
        const SequenceFeatures f =
            extract_sequence(bundle, feature_config().pairs,
                             feature_config().specs, feature_config().bank,
                             static_cast<unsigned>(state.range(0)));
        benchmark::DoNotOptimize(f.appearance.data());
    }
    state.counters["frames_per_sec"] = benchmark::Counter(
        static_cast<double>(state.iterations()) *
            static_cast<double>(corpus()[0].frames.size()),
        benchmark::Counter::kIsRate);
}
BENCHMARK(BM_ExtractSequence)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

/// Full prediction path on pre-extracted features: pair projection, SVR
/// scoring, windowed aggregation.
static void BM_PredictSequence(benchmark::State& state) {
    const TrainedModel& m = model();
    const SequenceFeatures& f = corpus_features()[0];
    for (auto _ : state) {
        const auto labels = predict_sequence(m, f, m.window);
        benchmark::DoNotOptimize(labels.data());
    }
    state.counters["frames_per_sec"] = benchmark::Counter(
        static_cast<double>(state.iterations()) *
            static_cast<double>(f.geometric.rows()),
        benchmark::Counter::kIsRate);
}
BENCHMARK(BM_PredictSequence)->Unit(benchmark::kMillisecond);

/// Baseline comparison path on the same features.
static void BM_BaselinePredict(benchmark::State& state) {
    const TrainedModel& m = model();
    const SequenceFeatures& f = corpus_features()[0];
    for (auto _ : state) {
        const auto out = baseline_predict(m, f, m.window);
        benchmark::DoNotOptimize(out.intensity.data());
    }
}
BENCHMARK(BM_BaselinePredict)->Unit(benchmark::kMillisecond);

/// One end-to-end training call at reduced sizes, to track regressions in
/// the Isomap/KCCA/SVR stack.
static void BM_TrainAu(benchmark::State& state) {
    std::vector<const SequenceBundle*> bundles;
    for (const auto& b : corpus()) bundles.push_back(&b);
    std::vector<const SequenceFeatures*> features;
    for (const auto& f : corpus_features()) features.push_back(&f);
    TrainOptions options;
    options.window = {10, 0.15};
    options.isomap_dim = 8;
    options.isomap_k = 8;
    options.kcca_components = 4;
    options.max_train_pairs = 150;
    options.train_baseline = false;
    for (auto _ : state) {
        const TrainedModel m =
            train_au(bundles, features, feature_config(), options);
        benchmark::DoNotOptimize(m.svr.beta.data());
    }
}
BENCHMARK(BM_TrainAu)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
