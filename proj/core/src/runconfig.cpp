#include "relau/runconfig.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>

#include "relau/hash.hpp"

namespace relau {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& scope) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!known.contains(key))
            throw ConfigError("unknown config key '" + key + "' in " + scope);
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for config key '") + key +
                          "': " + e.what());
    }
}

void read_mode(const json& obj, const char* key, IntensityMode& out) {
    if (!obj.contains(key)) return;
    const std::string text = obj.at(key).get<std::string>();
    if (text == "continuous")
        out = IntensityMode::Continuous;
    else if (text == "discrete")
        out = IntensityMode::Discrete;
    else
        throw ConfigError("mode must be 'continuous' or 'discrete', got '" +
                          text + "'");
}

void parse_train(const json& obj, TrainOptions& train) {
    reject_unknown(obj,
                   {"mode", "window", "threshold", "border_margin",
                    "zero_class_ratio", "max_train_pairs",
                    "max_baseline_frames", "isomap_dim", "isomap_k",
                    "kcca_components", "kcca_kappa", "svr_c", "svr_epsilon",
                    "gamma1", "gamma2", "seed", "workers", "train_baseline"},
                   "train");
    read_mode(obj, "mode", train.mode);
    read(obj, "window", train.window.window);
    read(obj, "threshold", train.window.threshold);
    read(obj, "border_margin", train.border_margin);
    read(obj, "zero_class_ratio", train.zero_class_ratio);
    read(obj, "max_train_pairs", train.max_train_pairs);
    read(obj, "max_baseline_frames", train.max_baseline_frames);
    read(obj, "isomap_dim", train.isomap_dim);
    read(obj, "isomap_k", train.isomap_k);
    read(obj, "kcca_components", train.kcca_components);
    read(obj, "kcca_kappa", train.kcca_kappa);
    read(obj, "svr_c", train.svr_c);
    read(obj, "svr_epsilon", train.svr_epsilon);
    read(obj, "gamma1", train.gamma1);
    read(obj, "gamma2", train.gamma2);
    read(obj, "seed", train.seed);
    read(obj, "workers", train.workers);
    read(obj, "train_baseline", train.train_baseline);
}

void parse_grid(const json& obj, HyperGrid& grid) {
    reject_unknown(obj, {"c", "gamma1", "gamma2"}, "grid");
    read(obj, "c", grid.c_values);
    read(obj, "gamma1", grid.gamma1_values);
    read(obj, "gamma2", grid.gamma2_values);
}

void parse_synth(const json& obj, SynthConfig& synth) {
    reject_unknown(obj,
                   {"seed", "n_subjects", "frames_per_sequence", "au_ids",
                    "onset_len", "apex_len", "offset_len", "peak_level",
                    "shape_scale_jitter", "permanent_wrinkle_amp",
                    "head_translation_amp", "head_rotation_amp",
                    "landmark_jitter", "pixel_noise", "au_landmark_amp",
                    "au_wrinkle_amp", "patch_size", "discrete_annotations"},
                   "synth");
    read(obj, "seed", synth.seed);
    read(obj, "n_subjects", synth.n_subjects);
    read(obj, "frames_per_sequence", synth.frames_per_sequence);
    read(obj, "au_ids", synth.au_ids);
    read(obj, "onset_len", synth.onset_len);
    read(obj, "apex_len", synth.apex_len);
    read(obj, "offset_len", synth.offset_len);
    read(obj, "peak_level", synth.peak_level);
    read(obj, "shape_scale_jitter", synth.shape_scale_jitter);
    read(obj, "permanent_wrinkle_amp", synth.permanent_wrinkle_amp);
    read(obj, "head_translation_amp", synth.head_translation_amp);
    read(obj, "head_rotation_amp", synth.head_rotation_amp);
    read(obj, "landmark_jitter", synth.landmark_jitter);
    read(obj, "pixel_noise", synth.pixel_noise);
    read(obj, "au_landmark_amp", synth.au_landmark_amp);
    read(obj, "au_wrinkle_amp", synth.au_wrinkle_amp);
    read(obj, "patch_size", synth.patch_size);
    read(obj, "discrete_annotations", synth.discrete_annotations);
}

std::string resolve(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) return p;
    const std::filesystem::path path(p);
    return path.is_absolute() ? path.string() : (base / path).string();
}

json train_json(const TrainOptions& t) {
    return {{"mode", t.mode == IntensityMode::Continuous ? "continuous"
                                                         : "discrete"},
            {"window", t.window.window},
            {"threshold", t.window.threshold},
            {"border_margin", t.border_margin},
            {"zero_class_ratio", t.zero_class_ratio},
            {"max_train_pairs", t.max_train_pairs},
            {"max_baseline_frames", t.max_baseline_frames},
            {"isomap_dim", t.isomap_dim},
            {"isomap_k", t.isomap_k},
            {"kcca_components", t.kcca_components},
            {"kcca_kappa", t.kcca_kappa},
            {"svr_c", t.svr_c},
            {"svr_epsilon", t.svr_epsilon},
            {"gamma1", t.gamma1},
            {"gamma2", t.gamma2},
            {"seed", t.seed},
            {"workers", t.workers},
            {"train_baseline", t.train_baseline}};
}

json synth_json(const SynthConfig& s) {
    return {{"seed", s.seed},
            {"n_subjects", s.n_subjects},
            {"frames_per_sequence", s.frames_per_sequence},
            {"au_ids", s.au_ids},
            {"onset_len", s.onset_len},
            {"apex_len", s.apex_len},
            {"offset_len", s.offset_len},
            {"peak_level", s.peak_level},
            {"shape_scale_jitter", s.shape_scale_jitter},
            {"permanent_wrinkle_amp", s.permanent_wrinkle_amp},
            {"head_translation_amp", s.head_translation_amp},
            {"head_rotation_amp", s.head_rotation_amp},
            {"landmark_jitter", s.landmark_jitter},
            {"pixel_noise", s.pixel_noise},
            {"au_landmark_amp", s.au_landmark_amp},
            {"au_wrinkle_amp", s.au_wrinkle_amp},
            {"patch_size", s.patch_size},
            {"discrete_annotations", s.discrete_annotations}};
}

} // namespace

RunConfig load_run_config(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw IoError("cannot open config file: " + path);
    json root;
    try {
        root = json::parse(file);
    } catch (const json::exception& e) {
        throw FormatError("malformed config JSON in " + path + ": " + e.what());
    }
    if (!root.is_object())
        throw FormatError("config root must be a JSON object: " + path);
    reject_unknown(root,
                   {"data_dir", "feature_dir", "model_dir", "output_dir",
                    "config_dir", "au_ids", "train", "grid", "skip_boundary",
                    "synth"},
                   "config root");

    RunConfig config;
    read(root, "data_dir", config.data_dir);
    read(root, "feature_dir", config.feature_dir);
    read(root, "model_dir", config.model_dir);
    read(root, "output_dir", config.output_dir);
    read(root, "config_dir", config.config_dir);
    read(root, "au_ids", config.au_ids);
    read(root, "skip_boundary", config.skip_boundary);
    if (root.contains("train")) parse_train(root.at("train"), config.train);
    if (root.contains("grid")) parse_grid(root.at("grid"), config.grid);
    if (root.contains("synth")) parse_synth(root.at("synth"), config.synth);

    const auto base = std::filesystem::absolute(path).parent_path();
    config.data_dir = resolve(base, config.data_dir);
    config.feature_dir = resolve(base, config.feature_dir);
    config.model_dir = resolve(base, config.model_dir);
    config.output_dir = resolve(base, config.output_dir);
    config.config_dir = resolve(base, config.config_dir);

    if (config.au_ids.empty())
        throw ValidationError("config: au_ids must be non-empty");
    validate_train_options(config.train);
    validate_synth_config(config.synth);
    return config;
}

std::string run_config_json(const RunConfig& config) {
    json root;
    root["data_dir"] = config.data_dir;
    root["feature_dir"] = config.feature_dir;
    root["model_dir"] = config.model_dir;
    root["output_dir"] = config.output_dir;
    root["config_dir"] = config.config_dir;
    root["au_ids"] = config.au_ids;
    root["skip_boundary"] = config.skip_boundary;
    root["train"] = train_json(config.train);
    root["grid"] = {{"c", config.grid.c_values},
                    {"gamma1", config.grid.gamma1_values},
                    {"gamma2", config.grid.gamma2_values}};
    root["synth"] = synth_json(config.synth);
    return root.dump(2);
}

std::uint64_t run_config_hash(const RunConfig& config) {
    return fnv1a64(run_config_json(config));
}

void save_run_config(const RunConfig& config, const std::string& path) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot write config file: " + path);
    file << run_config_json(config) << "\n";
}

FeatureConfig feature_config_for(const RunConfig& config, int au_id) {
    if (config.config_dir.empty()) return default_feature_config(au_id);
    namespace fs = std::filesystem;
    FeatureConfig fc;
    const auto geo = fs::path(config.config_dir) / "geometry" /
                     (std::to_string(au_id) + ".csv");
    const auto patches = fs::path(config.config_dir) / "patches" /
                         (std::to_string(au_id) + ".csv");
    fc.pairs = load_distance_pairs(geo.string(), au_id);
    fc.specs = load_patch_specs(patches.string(), au_id);
    return fc;
}

} // namespace relau
