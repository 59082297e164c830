#pragma once

#include <cstdint>
#include <vector>

#include "relau/relabel.hpp"
#include "relau/seqmodel.hpp"

namespace relau {

/// Configuration for the synthetic corpus generator: trapezoidal AU
/// intensity episodes, subject idiosyncrasies (base-shape scale, permanent
/// wrinkles), smooth rigid head motion, and noise.
struct SynthConfig {
    std::uint64_t seed = 1;
    int n_subjects = 8;
    int frames_per_sequence = 60;
    std::vector<int> au_ids = {1, 2, 4, 6, 12, 15};

    // AU episode shape (frames) and peak intensity in (0, 1].
    int onset_len = 6;
    int apex_len = 10;
    int offset_len = 6;
    double peak_level = 1.0;

    // Subject variation.
    double shape_scale_jitter = 0.12;      // +- fraction of base-shape scale
    double permanent_wrinkle_amp = 30.0;   // gray levels, subject-constant

    // Rigid head motion amplitudes.
    double head_translation_amp = 8.0;     // landmark units
    double head_rotation_amp = 0.08;       // radians

    // Noise.
    double landmark_jitter = 0.05;         // landmark units, per coordinate
    double pixel_noise = 2.0;              // gray levels

    // AU signal strength.
    double au_landmark_amp = 6.0;          // landmark units at unit intensity
    double au_wrinkle_amp = 40.0;          // gray levels at unit intensity

    int patch_size = 32;
    bool discrete_annotations = false;     // store A..E levels instead of
                                           // continuous truth
};

void validate_synth_config(const SynthConfig& cfg);

/// Nearest discrete FACS level for a continuous intensity (absent below
/// the absent/A midpoint).
IntensityEntry quantize_intensity(double value);

/// Generates one sequence bundle per subject, fully reproducible from the
/// seed (per-subject RNG streams, so output is independent of scheduling).
/// All landmark/pose/annotation values are quantized to 9 significant
/// digits so bundles round-trip exactly through save/load.
std::vector<SequenceBundle> generate(const SynthConfig& cfg);

/// Exact relative labels from the generator's continuous intensity truth
/// via pairwise differences and windowed aggregation. Throws
/// ValidationError when the bundle
/// lacks continuous annotations for the AU.
std::vector<RelativeLabel> ground_truth_relative(const SequenceBundle& bundle,
                                                 int au_id,
                                                 const WindowConfig& cfg);

} // namespace relau
