#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "relau/runconfig.hpp"

using namespace relau;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / "relau_runconfig_test") {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }

    std::string write(const std::string& name, const std::string& text) const {
        const fs::path p = path / name;
        std::ofstream(p) << text;
        return p.string();
    }
};

} // namespace

TEST_CASE("defaults load from an empty object and keys take effect") {
    TempDir dir;
    const std::string path = dir.write("empty.json", "{}");
    const RunConfig config = load_run_config(path);
    CHECK(config.au_ids == std::vector<int>{1, 2, 4, 6, 12, 15});
    CHECK(config.train.window.window == 10);
    CHECK(config.skip_boundary);

    const std::string full = dir.write("full.json", R"({
        "au_ids": [4, 12],
        "skip_boundary": false,
        "train": {"window": 6, "threshold": 0.2, "svr_c": 8.0,
                  "mode": "discrete", "seed": 99},
        "grid": {"c": [1.0, 2.0], "gamma1": [0.5], "gamma2": [0.5]},
        "synth": {"n_subjects": 4, "frames_per_sequence": 50}
    })");
    const RunConfig loaded = load_run_config(full);
    CHECK(loaded.au_ids == std::vector<int>{4, 12});
    CHECK_FALSE(loaded.skip_boundary);
    CHECK(loaded.train.window.window == 6);
    CHECK(loaded.train.window.threshold == 0.2);
    CHECK(loaded.train.svr_c == 8.0);
    CHECK(loaded.train.mode == IntensityMode::Discrete);
    CHECK(loaded.train.seed == 99);
    CHECK(loaded.grid.c_values == std::vector<double>{1.0, 2.0});
    CHECK(loaded.synth.n_subjects == 4);
}

TEST_CASE("unknown keys are rejected at every scope") {
    TempDir dir;
    CHECK_THROWS_AS(
        load_run_config(dir.write("a.json", R"({"data_dirr": "x"})")),
        ConfigError);
    CHECK_THROWS_AS(
        load_run_config(dir.write("b.json", R"({"train": {"widnow": 10}})")),
        ConfigError);
    CHECK_THROWS_AS(
        load_run_config(dir.write("c.json", R"({"grid": {"cc": [1]}})")),
        ConfigError);
    CHECK_THROWS_AS(
        load_run_config(dir.write("d.json", R"({"synth": {"subjects": 3}})")),
        ConfigError);
}

TEST_CASE("malformed files and bad values map to the right errors") {
    TempDir dir;
    CHECK_THROWS_AS(load_run_config(dir.write("bad.json", "{ not json")),
                    FormatError);
    CHECK_THROWS_AS(load_run_config(dir.write("arr.json", "[1, 2]")),
                    FormatError);
    CHECK_THROWS_AS(load_run_config((dir.path / "missing.json").string()),
                    IoError);
    // Wrong type for a known key.
    CHECK_THROWS_AS(
        load_run_config(dir.write("type.json", R"({"au_ids": "4"})")),
        ConfigError);
    // Known key, invalid value.
    CHECK_THROWS_AS(
        load_run_config(dir.write("odd.json", R"({"train": {"window": 7}})")),
        ValidationError);
    CHECK_THROWS_AS(
        load_run_config(dir.write("mode.json",
                                  R"({"train": {"mode": "fuzzy"}})")),
        ConfigError);
    CHECK_THROWS_AS(
        load_run_config(dir.write("empty_aus.json", R"({"au_ids": []})")),
        ValidationError);
}

TEST_CASE("relative paths resolve against the config directory") {
    TempDir dir;
    const std::string path =
        dir.write("paths.json", R"({"data_dir": "corpus",
                                    "model_dir": "/abs/models"})");
    const RunConfig config = load_run_config(path);
    CHECK(config.data_dir == (dir.path / "corpus").string());
    CHECK(config.model_dir == "/abs/models");
    CHECK(config.config_dir.empty());  // stays empty, meaning built-ins
}

TEST_CASE("snapshot and hash are stable across save/load round trips") {
    TempDir dir;
    const RunConfig a = load_run_config(dir.write("a.json", "{}"));
    const std::uint64_t hash = run_config_hash(a);
    CHECK(hash == run_config_hash(a));  // deterministic

    const std::string saved = (dir.path / "saved.json").string();
    save_run_config(a, saved);
    const RunConfig b = load_run_config(saved);
    CHECK(run_config_json(b) == run_config_json(a));
    CHECK(run_config_hash(b) == hash);

    // Any semantic change moves the hash.
    RunConfig c = a;
    c.train.svr_c = 2.0;
    CHECK(run_config_hash(c) != hash);
}

TEST_CASE("per-AU feature configs come from CSVs or built-ins") {
    RunConfig config;
    const FeatureConfig builtin = feature_config_for(config, 12);
    CHECK_FALSE(builtin.pairs.pairs.empty());
    CHECK(builtin.specs.size() == 2);

    TempDir dir;
    fs::create_directories(dir.path / "geometry");
    fs::create_directories(dir.path / "patches");
    std::ofstream(dir.path / "geometry" / "12.csv")
        << "# custom\n48,54\n51,57\n";
    std::ofstream(dir.path / "patches" / "12.csv")
        << "p0,48,54,57,51,16,16\n";
    config.config_dir = dir.path.string();
    const FeatureConfig custom = feature_config_for(config, 12);
    CHECK(custom.pairs.pairs.size() == 2);
    REQUIRE(custom.specs.size() == 1);
    CHECK(custom.specs[0].patch_id == "p0");
    CHECK(custom.specs[0].width == 16);

    CHECK_THROWS_AS(feature_config_for(config, 6), IoError);
}
