#include <doctest.h>

#include <sstream>

#include "relau/seqmodel.hpp"
#include "relau/synth.hpp"

using namespace relau;

namespace {

SynthConfig small_config() {
    SynthConfig cfg;
    cfg.seed = 7;
    cfg.n_subjects = 3;
    cfg.frames_per_sequence = 40;
    cfg.au_ids = {4, 12};
    cfg.patch_size = 16;
    return cfg;
}

std::string bundle_digest(const std::vector<SequenceBundle>& bundles) {
    std::ostringstream out;
    for (const auto& b : bundles) {
        for (const auto& f : b.frames) {
            for (const auto& p : f.landmarks.points)
                out << format_g9(p.x()) << "," << format_g9(p.y()) << ","
                    << format_g9(p.z()) << "\n";
            out << format_g9(f.pose.translation.x()) << ","
                << format_g9(f.pose.rotation.z()) << "\n";
            for (const auto& [id, patch] : f.patches) {
                out << id << ":";
                out.write(reinterpret_cast<const char*>(patch.pixels.data()),
                          static_cast<std::streamsize>(patch.pixels.size()));
                out << "\n";
            }
        }
        for (const auto& annotation : b.annotations)
            for (const auto& entry : annotation.levels)
                out << format_intensity(entry) << "\n";
    }
    return out.str();
}

} // namespace

TEST_CASE("generation is byte-identical for the same seed") {
    const SynthConfig cfg = small_config();
    const auto a = generate(cfg);
    const auto b = generate(cfg);
    REQUIRE(a.size() == 3);
    CHECK(bundle_digest(a) == bundle_digest(b));

    SynthConfig other = cfg;
    other.seed = 8;
    CHECK(bundle_digest(generate(other)) != bundle_digest(a));
}

TEST_CASE("generated bundles pass validation and carry annotations") {
    const auto bundles = generate(small_config());
    for (const auto& b : bundles) {
        CHECK_NOTHROW(validate_bundle(b));
        CHECK(b.frames.size() == 40);
        REQUIRE(b.annotations.size() == 2);
        for (const auto& annotation : b.annotations)
            CHECK(annotation.levels.size() == b.frames.size());
        // Two patches per AU.
        CHECK(b.frames[0].patches.size() == 4);
    }
    // Distinct subjects get distinct data.
    CHECK(bundles[0].subject_id != bundles[1].subject_id);
    CHECK(bundles[0].frames[5].landmarks.points[0] !=
          bundles[1].frames[5].landmarks.points[0]);
}

TEST_CASE("zero motion amplitudes freeze the head pose") {
    SynthConfig cfg = small_config();
    cfg.head_translation_amp = 0.0;
    cfg.head_rotation_amp = 0.0;
    const auto bundles = generate(cfg);
    for (const auto& b : bundles)
        for (const auto& f : b.frames) {
            CHECK(f.pose.translation.norm() == 0.0);
            CHECK(f.pose.rotation.norm() == 0.0);
        }
}

TEST_CASE("zero AU amplitude yields an all no-change ground truth") {
    SynthConfig cfg = small_config();
    cfg.peak_level = 1e-9;  // episodes exist but are far below threshold
    const auto bundles = generate(cfg);
    for (const auto& b : bundles) {
        const auto labels = ground_truth_relative(b, 4, {10, 0.15});
        for (const auto& l : labels) CHECK(l.label == 0);
    }
}

TEST_CASE("default config produces both increase and decrease labels") {
    const auto bundles = generate(small_config());
    int ups = 0, downs = 0;
    for (const auto& b : bundles)
        for (int au : {4, 12})
            for (const auto& l : ground_truth_relative(b, au, {10, 0.15})) {
                if (l.label == 1) ++ups;
                if (l.label == -1) ++downs;
            }
    CHECK(ups > 0);
    CHECK(downs > 0);
}

TEST_CASE("quantize_intensity snaps to the discrete level map") {
    CHECK(quantize_intensity(0.0).level == IntensityLevel::Absent);
    CHECK(quantize_intensity(0.1).level == IntensityLevel::Absent);
    CHECK(quantize_intensity(0.58).level == IntensityLevel::A);
    CHECK(quantize_intensity(0.60).level == IntensityLevel::A);
    CHECK(quantize_intensity(0.69).level == IntensityLevel::B);
    CHECK(quantize_intensity(0.80).level == IntensityLevel::C);
    CHECK(quantize_intensity(0.90).level == IntensityLevel::D);
    CHECK(quantize_intensity(1.0).level == IntensityLevel::E);
    CHECK_THROWS_AS(quantize_intensity(-0.01), ValidationError);
    CHECK_THROWS_AS(quantize_intensity(1.01), ValidationError);
}

TEST_CASE("discrete annotations block continuous ground truth") {
    SynthConfig cfg = small_config();
    cfg.discrete_annotations = true;
    const auto bundles = generate(cfg);
    for (const auto& annotation : bundles[0].annotations)
        for (const auto& entry : annotation.levels)
            CHECK(entry.level != IntensityLevel::Continuous);
    CHECK_THROWS_AS(ground_truth_relative(bundles[0], 4, {10, 0.15}),
                    ValidationError);
}

TEST_CASE("config validation rejects out-of-range parameters") {
    CHECK_NOTHROW(validate_synth_config(small_config()));

    SynthConfig cfg = small_config();
    cfg.n_subjects = 1;
    CHECK_THROWS_AS(validate_synth_config(cfg), ValidationError);

    cfg = small_config();
    cfg.frames_per_sequence = 10;  // episode + margin does not fit
    CHECK_THROWS_AS(validate_synth_config(cfg), ValidationError);

    cfg = small_config();
    cfg.peak_level = 0.0;
    CHECK_THROWS_AS(validate_synth_config(cfg), ValidationError);
    cfg.peak_level = 1.5;
    CHECK_THROWS_AS(validate_synth_config(cfg), ValidationError);

    cfg = small_config();
    cfg.patch_size = 4;
    CHECK_THROWS_AS(validate_synth_config(cfg), ValidationError);

    cfg = small_config();
    cfg.au_ids = {999};
    CHECK_THROWS_AS(validate_synth_config(cfg), ValidationError);

    cfg = small_config();
    cfg.shape_scale_jitter = 0.95;
    CHECK_THROWS_AS(validate_synth_config(cfg), ValidationError);

    cfg = small_config();
    cfg.pixel_noise = -1.0;
    CHECK_THROWS_AS(validate_synth_config(cfg), ValidationError);
}

TEST_CASE("ground truth needs an annotated AU") {
    const auto bundles = generate(small_config());
    CHECK_THROWS_AS(ground_truth_relative(bundles[0], 15, {10, 0.15}),
                    ValidationError);
}
