// relau: relative facial action unit detection from the command line.
//
// Subcommands: synth, extract, pairs, train, predict, evaluate, gridsearch.
// All state flows through a single JSON run config; individual flags
// override config keys. Outputs carry the seed and config hash so runs
// are attributable and reproducible.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>

#include "relau/hash.hpp"
#include "relau/runconfig.hpp"

namespace fs = std::filesystem;
using namespace relau;

namespace {

// Distinct exit code per error class; scripts can branch on them.
constexpr int kExitConfig = 2;
constexpr int kExitValidation = 3;
constexpr int kExitFormat = 4;
constexpr int kExitIo = 5;
constexpr int kExitNumeric = 6;
constexpr int kExitOther = 1;

struct Flags {
    std::string config_path;
    std::string out;
    std::vector<int> au_ids;
    std::optional<int> window;
    std::optional<double> threshold;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::optional<std::string> mode;
};

void add_common_flags(CLI::App* cmd, Flags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON run config file");
    cmd->add_option("--au", flags.au_ids, "AU ids to process (overrides config)");
    cmd->add_option("--window", flags.window, "aggregation window w (even)");
    cmd->add_option("--threshold", flags.threshold, "label threshold T");
    cmd->add_option("--seed", flags.seed, "RNG seed");
    cmd->add_option("--workers", flags.workers, "worker threads (0 = hardware)");
    cmd->add_option("--mode", flags.mode, "intensity mode")
        ->check(CLI::IsMember({"discrete", "continuous"}));
    cmd->add_option("--out", flags.out, "output directory override");
}

RunConfig resolve_config(const Flags& flags) {
    RunConfig config;
    if (!flags.config_path.empty()) {
        config = load_run_config(flags.config_path);
    } else {
        const auto base = fs::absolute(".");
        config.data_dir = (base / config.data_dir).string();
        config.feature_dir = (base / config.feature_dir).string();
        config.model_dir = (base / config.model_dir).string();
        config.output_dir = (base / config.output_dir).string();
    }
    if (!flags.au_ids.empty()) config.au_ids = flags.au_ids;
    if (flags.window) config.train.window.window = *flags.window;
    if (flags.threshold) config.train.window.threshold = *flags.threshold;
    if (flags.seed) {
        config.train.seed = *flags.seed;
        config.synth.seed = *flags.seed;
    }
    if (flags.workers) config.train.workers = *flags.workers;
    if (flags.mode) {
        config.train.mode = *flags.mode == "discrete" ? IntensityMode::Discrete
                                                      : IntensityMode::Continuous;
        config.synth.discrete_annotations = *flags.mode == "discrete";
    }
    if (!flags.out.empty()) config.output_dir = fs::absolute(flags.out).string();
    validate_train_options(config.train);
    validate_synth_config(config.synth);
    return config;
}

std::string provenance(const RunConfig& config) {
    return "seed=" + std::to_string(config.train.seed) +
           " config_hash=" + hash_hex(run_config_hash(config));
}

std::vector<SequenceBundle> load_bundles(const RunConfig& config) {
    if (!fs::is_directory(config.data_dir))
        throw IoError("data directory not found: " + config.data_dir);
    std::vector<std::string> dirs;
    for (const auto& entry : fs::directory_iterator(config.data_dir))
        if (entry.is_directory() && fs::exists(entry.path() / "manifest.json"))
            dirs.push_back(entry.path().string());
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty())
        throw IoError("no sequence bundles under " + config.data_dir);
    std::vector<SequenceBundle> bundles;
    bundles.reserve(dirs.size());
    for (const auto& dir : dirs) bundles.push_back(load_bundle(dir));
    return bundles;
}

/// Features for every (bundle, AU id) through the on-disk store.
std::vector<SequenceFeatures> ensure_all_features(
    const RunConfig& config, const std::vector<SequenceBundle>& bundles,
    const FeatureConfig& fc, bool* any_recomputed = nullptr) {
    std::vector<SequenceFeatures> features;
    features.reserve(bundles.size());
    for (const auto& bundle : bundles) {
        auto result = ensure_features(bundle, fc.pairs, fc.specs, fc.bank,
                                      config.feature_dir, config.train.workers);
        if (any_recomputed && result.recomputed) *any_recomputed = true;
        features.push_back(std::move(result.features));
    }
    return features;
}

std::string model_path(const RunConfig& config, int au_id) {
    return (fs::path(config.model_dir) / (std::to_string(au_id) + ".model"))
        .string();
}

void write_run_meta(const RunConfig& config) {
    fs::create_directories(config.output_dir);
    nlohmann::json meta;
    meta["seed"] = config.train.seed;
    meta["config_hash"] = hash_hex(run_config_hash(config));
    meta["config"] = nlohmann::json::parse(run_config_json(config));
    std::ofstream file(fs::path(config.output_dir) / "run_meta.json");
    if (!file) throw IoError("cannot write run_meta.json");
    file << meta.dump(2) << "\n";
}

int cmd_synth(const Flags& flags) {
    const RunConfig config = resolve_config(flags);
    const std::string out =
        flags.out.empty() ? config.data_dir : fs::absolute(flags.out).string();
    const auto bundles = generate(config.synth);
    fs::create_directories(out);
    for (const auto& bundle : bundles)
        save_bundle(bundle, (fs::path(out) / bundle.sequence_id).string());
    std::cout << "wrote " << bundles.size() << " sequence bundles to " << out
              << " (" << provenance(config) << ")\n";
    return 0;
}

int cmd_extract(const Flags& flags) {
    const RunConfig config = resolve_config(flags);
    const auto bundles = load_bundles(config);
    std::size_t recomputed = 0, total = 0;
    for (int au_id : config.au_ids) {
        const auto fc = feature_config_for(config, au_id);
        for (const auto& bundle : bundles) {
            auto result = ensure_features(bundle, fc.pairs, fc.specs, fc.bank,
                                          config.feature_dir,
                                          config.train.workers);
            recomputed += result.recomputed ? 1 : 0;
            ++total;
        }
    }
    std::cout << "feature store up to date: " << total << " entries, "
              << recomputed << " recomputed (" << provenance(config) << ")\n";
    return 0;
}

int cmd_pairs(const Flags& flags) {
    const RunConfig config = resolve_config(flags);
    const auto bundles = load_bundles(config);
    fs::create_directories(config.output_dir);
    for (int au_id : config.au_ids) {
        const auto path =
            fs::path(config.output_dir) / ("pairs_au" + std::to_string(au_id) +
                                           ".csv");
        std::ofstream file(path);
        if (!file) throw IoError("cannot write " + path.string());
        file << "# " << provenance(config) << "\n";
        file << "subject_id,sequence_id,first,second,target,category\n";
        std::size_t count = 0;
        for (const auto& bundle : bundles) {
            const auto samples = sample_pairs(bundle, au_id,
                                              config.train.border_margin,
                                              config.train.mode);
            for (const auto& s : samples) {
                file << s.subject_id << "," << s.sequence_id << "," << s.first
                     << "," << s.second << "," << format_g9(s.target) << ","
                     << s.category << "\n";
                ++count;
            }
        }
        std::cout << "AU " << au_id << ": " << count << " pairs -> "
                  << path.string() << "\n";
    }
    return 0;
}

int cmd_train(const Flags& flags) {
    const RunConfig config = resolve_config(flags);
    const auto bundles = load_bundles(config);
    fs::create_directories(config.model_dir);
    for (int au_id : config.au_ids) {
        const auto fc = feature_config_for(config, au_id);
        const auto features = ensure_all_features(config, bundles, fc);
        std::vector<const SequenceBundle*> bp;
        std::vector<const SequenceFeatures*> fp;
        for (std::size_t i = 0; i < bundles.size(); ++i) {
            bp.push_back(&bundles[i]);
            fp.push_back(&features[i]);
        }
        const TrainedModel model = train_au(bp, fp, fc, config.train);
        save_model(model, model_path(config, au_id));
        std::cout << "AU " << au_id << ": model written to "
                  << model_path(config, au_id) << " (support size "
                  << model.svr.points.size() << ")\n";
    }
    std::cout << provenance(config) << "\n";
    return 0;
}

int cmd_predict(const Flags& flags) {
    const RunConfig config = resolve_config(flags);
    const auto bundles = load_bundles(config);
    fs::create_directories(config.output_dir);
    for (int au_id : config.au_ids) {
        const TrainedModel model = load_model(model_path(config, au_id));
        const auto fc = feature_config_for(config, au_id);
        const std::uint64_t hash =
            feature_config_hash(fc.pairs, fc.specs, fc.bank);
        if (hash != model.feature_hash)
            throw ConfigError(
                "model " + model_path(config, au_id) +
                " was trained under a different feature config (model hash " +
                hash_hex(model.feature_hash) + ", current " + hash_hex(hash) +
                "); retrain or restore the original config");
        const auto features = ensure_all_features(config, bundles, fc);
        for (std::size_t i = 0; i < bundles.size(); ++i) {
            const auto labels =
                predict_sequence(model, features[i], config.train.window);
            const auto path = fs::path(config.output_dir) /
                              ("predictions_" + bundles[i].sequence_id + "_au" +
                               std::to_string(au_id) + ".csv");
            write_predictions_csv(path.string(), au_id, labels,
                                  provenance(config));
        }
        std::cout << "AU " << au_id << ": predictions for " << bundles.size()
                  << " sequences -> " << config.output_dir << "\n";
    }
    return 0;
}

int cmd_evaluate(const Flags& flags) {
    const RunConfig config = resolve_config(flags);
    const auto bundles = load_bundles(config);

    LosoOptions options;
    options.train = config.train;
    options.skip_boundary = config.skip_boundary;
    for (int au_id : config.au_ids)
        options.configs.push_back(feature_config_for(config, au_id));

    EvalReport report = loso_cv(bundles, options);
    nlohmann::json snapshot = nlohmann::json::parse(report.config_snapshot);
    snapshot["config_hash"] = hash_hex(run_config_hash(config));
    report.config_snapshot = snapshot.dump();

    fs::create_directories(config.output_dir);
    write_report_csv(report,
                     (fs::path(config.output_dir) / "report.csv").string());
    write_report_json(report,
                      (fs::path(config.output_dir) / "report.json").string());
    write_run_meta(config);
    std::cout << format_report_table(report);
    return 0;
}

int cmd_gridsearch(const Flags& flags) {
    const RunConfig config = resolve_config(flags);
    const auto bundles = load_bundles(config);
    fs::create_directories(config.model_dir);
    for (int au_id : config.au_ids) {
        const auto fc = feature_config_for(config, au_id);
        const auto features = ensure_all_features(config, bundles, fc);
        std::vector<const SequenceBundle*> bp;
        std::vector<const SequenceFeatures*> fp;
        for (std::size_t i = 0; i < bundles.size(); ++i) {
            bp.push_back(&bundles[i]);
            fp.push_back(&features[i]);
        }
        const GridResult result =
            grid_search(bp, fp, fc, config.grid, config.train);
        save_model(result.model, model_path(config, au_id));
        std::cout << "AU " << au_id << ": best C=" << result.c
                  << " gamma1=" << result.gamma1 << " gamma2=" << result.gamma2
                  << " (validation F1 " << result.validation_f1 << ") -> "
                  << model_path(config, au_id) << "\n";
    }
    std::cout << provenance(config) << "\n";
    return 0;
}

void report_error(const char* error_class, const std::exception& e) {
    nlohmann::json diag;
    diag["error_class"] = error_class;
    diag["message"] = e.what();
    std::cerr << diag.dump() << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"relative facial action unit detection"};
    app.require_subcommand(1);

    Flags flags;
    struct Sub {
        const char* name;
        const char* help;
        int (*run)(const Flags&);
    };
    const Sub subs[] = {
        {"synth", "generate a synthetic sequence corpus", cmd_synth},
        {"extract", "extract per-frame features into the store", cmd_extract},
        {"pairs", "sample training pairs and write them as CSV", cmd_pairs},
        {"train", "train one model per AU", cmd_train},
        {"predict", "write per-frame relative labels", cmd_predict},
        {"evaluate", "leave-one-subject-out comparison vs the baseline",
         cmd_evaluate},
        {"gridsearch", "hyperparameter search, then refit and save",
         cmd_gridsearch},
    };
    std::map<const CLI::App*, int (*)(const Flags&)> runners;
    for (const auto& sub : subs) {
        CLI::App* cmd = app.add_subcommand(sub.name, sub.help);
        add_common_flags(cmd, flags);
        runners[cmd] = sub.run;
    }

    CLI11_PARSE(app, argc, argv);

    try {
        for (const auto* cmd : app.get_subcommands())
            return runners.at(cmd)(flags);
        return kExitOther;
    } catch (const ConfigError& e) {
        report_error("config", e);
        return kExitConfig;
    } catch (const ValidationError& e) {
        report_error("validation", e);
        return kExitValidation;
    } catch (const FormatError& e) {
        report_error("format", e);
        return kExitFormat;
    } catch (const IoError& e) {
        report_error("io", e);
        return kExitIo;
    } catch (const NumericError& e) {
        report_error("numeric", e);
        return kExitNumeric;
    } catch (const std::exception& e) {
        report_error("internal", e);
        return kExitOther;
    }
}
