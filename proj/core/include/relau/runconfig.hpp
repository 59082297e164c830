#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relau/pipeline.hpp"
#include "relau/synth.hpp"

namespace relau {

/// One run's full configuration: paths, AU list, training knobs, grid, and
/// the synthetic-generator block. Loaded from a single JSON file; CLI
/// flags override individual keys. Unknown keys are rejected.
struct RunConfig {
    // Paths (relative paths resolve against the config file's directory).
    std::string data_dir = "data";        // bundle directories live here
    std::string feature_dir = "features";
    std::string model_dir = "models";
    std::string output_dir = "out";
    std::string config_dir;               // per-AU CSVs; empty = built-ins

    std::vector<int> au_ids = {1, 2, 4, 6, 12, 15};
    TrainOptions train;
    HyperGrid grid{{0.125, 1.0, 8.0, 128.0},
                   {0.25, 1.0, 4.0},
                   {0.25, 1.0, 4.0}};
    bool skip_boundary = true;

    SynthConfig synth;
};

/// Parses and validates a config file. Throws ConfigError for unknown
/// keys, FormatError for malformed JSON, ValidationError for bad values.
RunConfig load_run_config(const std::string& path);

/// Canonical JSON snapshot (sorted keys, round-trip floats); two configs
/// with the same snapshot behave identically. Basis of the run hash.
std::string run_config_json(const RunConfig& config);

/// FNV-1a hash of the canonical snapshot.
std::uint64_t run_config_hash(const RunConfig& config);

void save_run_config(const RunConfig& config, const std::string& path);

/// Feature configuration for one AU: CSVs from config_dir when set,
/// otherwise the built-in defaults.
FeatureConfig feature_config_for(const RunConfig& config, int au_id);

} // namespace relau
