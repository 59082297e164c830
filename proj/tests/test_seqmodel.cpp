#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include "relau/seqmodel.hpp"
#include "relau/synth.hpp"

using namespace relau;
namespace fs = std::filesystem;

namespace {

SequenceBundle tiny_bundle() {
    SynthConfig cfg;
    cfg.n_subjects = 2;
    cfg.frames_per_sequence = 30;
    cfg.au_ids = {12};
    cfg.patch_size = 16;
    return generate(cfg).front();
}

} // namespace

TEST_CASE("intensity map follows the FACS level values") {
    CHECK(intensity_value({IntensityLevel::Absent, 0.0}) == doctest::Approx(0.0));
    CHECK(intensity_value({IntensityLevel::A, 0.0}) == doctest::Approx(0.580));
    CHECK(intensity_value({IntensityLevel::B, 0.0}) == doctest::Approx(0.685));
    CHECK(intensity_value({IntensityLevel::C, 0.0}) == doctest::Approx(0.790));
    CHECK(intensity_value({IntensityLevel::D, 0.0}) == doctest::Approx(0.895));
    CHECK(intensity_value({IntensityLevel::E, 0.0}) == doctest::Approx(1.0));
    CHECK(intensity_value({IntensityLevel::Continuous, 0.37}) ==
          doctest::Approx(0.37));
}

TEST_CASE("discrete mode collapses presence to 0/1") {
    CHECK(intensity_value({IntensityLevel::B, 0.0}, IntensityMode::Discrete) ==
          doctest::Approx(1.0));
    CHECK(intensity_value({IntensityLevel::Absent, 0.0},
                          IntensityMode::Discrete) == doctest::Approx(0.0));
    CHECK(intensity_value({IntensityLevel::Continuous, 0.4},
                          IntensityMode::Discrete) == doctest::Approx(1.0));
    CHECK(intensity_value({IntensityLevel::Continuous, 0.0},
                          IntensityMode::Discrete) == doctest::Approx(0.0));
}

TEST_CASE("intensity text round-trips through parse/format") {
    for (const char* text : {"absent", "A", "B", "C", "D", "E"}) {
        const auto entry = parse_intensity(text);
        CHECK(format_intensity(entry) == text);
    }
    const auto cont = parse_intensity("0.3725");
    CHECK(cont.level == IntensityLevel::Continuous);
    CHECK(cont.value == doctest::Approx(0.3725));
    CHECK_THROWS_AS(parse_intensity("F"), FormatError);
    CHECK_THROWS_AS(parse_intensity("1.5"), FormatError);
    CHECK_THROWS_AS(parse_intensity(""), FormatError);
}

TEST_CASE("format_g9 survives a decimal round trip") {
    for (double v : {0.1, -3.14159265358979, 1e-12, 123456.789, 0.0,
                     0.6950000000001}) {
        const double back = std::strtod(format_g9(v).c_str(), nullptr);
        CHECK(back == std::strtod(format_g9(back).c_str(), nullptr));
    }
}

TEST_CASE("validate_bundle rejects broken invariants") {
    SequenceBundle bundle = tiny_bundle();
    CHECK_NOTHROW(validate_bundle(bundle));

    SUBCASE("empty frame list") {
        bundle.frames.clear();
        CHECK_THROWS_AS(validate_bundle(bundle), ValidationError);
    }
    SUBCASE("landmark behind the camera") {
        bundle.frames[3].landmarks.points[5].z() = -1.0;
        CHECK_THROWS_AS(validate_bundle(bundle), ValidationError);
    }
    SUBCASE("non-finite coordinate") {
        bundle.frames[0].landmarks.points[0].x() =
            std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(validate_bundle(bundle), ValidationError);
    }
    SUBCASE("landmark count changes mid-sequence") {
        bundle.frames[4].landmarks.points.pop_back();
        CHECK_THROWS_AS(validate_bundle(bundle), ValidationError);
    }
    SUBCASE("frame indices not strictly increasing") {
        bundle.frames[2].index = bundle.frames[1].index;
        CHECK_THROWS_AS(validate_bundle(bundle), ValidationError);
    }
    SUBCASE("annotation length mismatch") {
        bundle.annotations[0].levels.pop_back();
        CHECK_THROWS_AS(validate_bundle(bundle), ValidationError);
    }
}

TEST_CASE("bundle save/load round trip preserves every value") {
    const SequenceBundle original = tiny_bundle();
    const auto dir = fs::temp_directory_path() / "relau_test_bundle";
    fs::remove_all(dir);
    save_bundle(original, dir.string());
    const SequenceBundle loaded = load_bundle(dir.string());

    CHECK(loaded.subject_id == original.subject_id);
    CHECK(loaded.sequence_id == original.sequence_id);
    CHECK(loaded.intrinsics.f == original.intrinsics.f);
    REQUIRE(loaded.frames.size() == original.frames.size());
    for (std::size_t t = 0; t < original.frames.size(); ++t) {
        const Frame& a = original.frames[t];
        const Frame& b = loaded.frames[t];
        CHECK(a.index == b.index);
        REQUIRE(a.landmarks.count() == b.landmarks.count());
        for (std::size_t i = 0; i < a.landmarks.count(); ++i)
            CHECK(a.landmarks.points[i] == b.landmarks.points[i]);
        CHECK(a.pose.translation == b.pose.translation);
        CHECK(a.pose.rotation == b.pose.rotation);
        REQUIRE(a.patches.size() == b.patches.size());
        for (const auto& [id, patch] : a.patches) {
            REQUIRE(b.patches.count(id) == 1);
            CHECK(b.patches.at(id).pixels == patch.pixels);
        }
    }
    REQUIRE(loaded.annotations.size() == original.annotations.size());
    for (std::size_t a = 0; a < original.annotations.size(); ++a) {
        CHECK(loaded.annotations[a].au_id == original.annotations[a].au_id);
        CHECK(loaded.annotations[a].levels == original.annotations[a].levels);
    }
    fs::remove_all(dir);
}

TEST_CASE("pgm io round trip and diagnostics") {
    Patch patch;
    patch.patch_id = "p";
    patch.width = 5;
    patch.height = 3;
    patch.pixels = {0, 1, 2, 3, 4, 250, 251, 252, 253, 254, 9, 8, 7, 6, 5};
    const auto path = fs::temp_directory_path() / "relau_test.pgm";
    save_pgm(patch, path.string());
    const Patch back = load_pgm(path.string(), "p");
    CHECK(back.width == 5);
    CHECK(back.height == 3);
    CHECK(back.pixels == patch.pixels);
    fs::remove(path);
    CHECK_THROWS_AS(load_pgm(path.string(), "p"), IoError);
}
