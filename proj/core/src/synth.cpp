#include "relau/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>

#include "relau/au_defaults.hpp"
#include "relau/geometry.hpp"

namespace relau {

namespace {

/// Quantizes through the on-disk decimal format so generated bundles are
/// bit-identical after a save/load round trip.
double q9(double v) { return std::strtod(format_g9(v).c_str(), nullptr); }

struct Episode {
    int start = 0;
    double peak = 1.0;
};

/// Trapezoidal intensity at frame t for one episode: linear onset, flat
/// apex, linear offset back to absent.
double episode_intensity(const Episode& ep, const SynthConfig& cfg, int t) {
    const int rel = t - ep.start;
    if (rel < 0) return 0.0;
    if (rel < cfg.onset_len)
        return ep.peak * (rel + 1) / static_cast<double>(cfg.onset_len);
    const int after_apex = rel - cfg.onset_len - cfg.apex_len;
    if (after_apex < 0) return ep.peak;
    if (after_apex < cfg.offset_len)
        return ep.peak * (cfg.offset_len - after_apex) /
               static_cast<double>(cfg.offset_len + 1);
    return 0.0;
}

/// Fixed wrinkle orientation per AU so the appearance cue is stable across
/// subjects; subjects only vary in phase.
double au_orientation(int au_id) {
    return 0.35 + 0.42 * static_cast<double>(au_id % 7);
}

} // namespace

void validate_synth_config(const SynthConfig& cfg) {
    if (cfg.n_subjects < 2)
        throw ValidationError("synth: need at least 2 subjects");
    if (cfg.frames_per_sequence < 4)
        throw ValidationError("synth: need at least 4 frames per sequence");
    if (cfg.au_ids.empty())
        throw ValidationError("synth: au_ids must be non-empty");
    if (cfg.onset_len < 1 || cfg.apex_len < 1 || cfg.offset_len < 1)
        throw ValidationError("synth: episode segment lengths must be >= 1");
    const int episode_len = cfg.onset_len + cfg.apex_len + cfg.offset_len;
    if (episode_len + 4 > cfg.frames_per_sequence)
        throw ValidationError("synth: episode does not fit in the sequence "
                              "(need onset+apex+offset+4 <= frames)");
    if (!(cfg.peak_level > 0.0 && cfg.peak_level <= 1.0))
        throw ValidationError("synth: peak_level must be in (0, 1]");
    if (cfg.patch_size < 8)
        throw ValidationError("synth: patch_size must be >= 8");
    for (double amp : {cfg.shape_scale_jitter, cfg.permanent_wrinkle_amp,
                       cfg.head_translation_amp, cfg.head_rotation_amp,
                       cfg.landmark_jitter, cfg.pixel_noise,
                       cfg.au_landmark_amp, cfg.au_wrinkle_amp})
        if (!(amp >= 0.0) || !std::isfinite(amp))
            throw ValidationError("synth: amplitudes must be finite and >= 0");
    if (cfg.shape_scale_jitter >= 0.9)
        throw ValidationError("synth: shape_scale_jitter must be < 0.9");
    if (cfg.head_rotation_amp > 1.2)
        throw ValidationError("synth: head_rotation_amp must be <= 1.2 rad");
    for (int au : cfg.au_ids) {
        au_displacement_field(au);  // throws for unsupported AUs
        default_patch_specs(au);
    }
}

IntensityEntry quantize_intensity(double value) {
    if (!(value >= 0.0 && value <= 1.0))
        throw ValidationError("quantize_intensity: value outside [0, 1]");
    static const double levels[6] = {0.0, 0.580, 0.685, 0.790, 0.895, 1.0};
    static const IntensityLevel names[6] = {
        IntensityLevel::Absent, IntensityLevel::A, IntensityLevel::B,
        IntensityLevel::C, IntensityLevel::D, IntensityLevel::E};
    int best = 0;
    double best_dist = std::abs(value - levels[0]);
    for (int i = 1; i < 6; ++i) {
        const double dist = std::abs(value - levels[i]);
        if (dist < best_dist) {
            best = i;
            best_dist = dist;
        }
    }
    IntensityEntry entry;
    entry.level = names[best];
    return entry;
}

std::vector<SequenceBundle> generate(const SynthConfig& cfg) {
    using std::numbers::pi;
    validate_synth_config(cfg);

    const auto base_face = canonical_face66();
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& p : base_face) centroid += p;
    centroid /= static_cast<double>(base_face.size());

    const int n = cfg.frames_per_sequence;
    const int episode_len = cfg.onset_len + cfg.apex_len + cfg.offset_len;

    std::vector<SequenceBundle> bundles;
    bundles.reserve(static_cast<std::size_t>(cfg.n_subjects));

    for (int subject = 0; subject < cfg.n_subjects; ++subject) {
        std::mt19937_64 rng(cfg.seed * 1000003ULL +
                            static_cast<std::uint64_t>(subject));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::uniform_real_distribution<double> sym(-1.0, 1.0);
        std::normal_distribution<double> gauss(0.0, 1.0);

        SequenceBundle bundle;
        char sid[16];
        std::snprintf(sid, sizeof(sid), "S%02d", subject + 1);
        bundle.subject_id = sid;
        bundle.sequence_id = bundle.subject_id + "_seq0";
        bundle.intrinsics = {600.0, 320.0, 240.0};

        // Subject idiosyncrasies.
        const double scale = 1.0 + cfg.shape_scale_jitter * sym(rng);
        std::vector<Eigen::Vector3d> neutral(base_face.size());
        for (std::size_t i = 0; i < base_face.size(); ++i)
            neutral[i] = centroid + scale * (base_face[i] - centroid);

        // Smooth head motion: one sinusoid per pose channel with a random
        // phase and a mild per-channel frequency so channels decorrelate.
        double trans_phase[3], rot_phase[3];
        for (int k = 0; k < 3; ++k) {
            trans_phase[k] = 2.0 * pi * unit(rng);
            rot_phase[k] = 2.0 * pi * unit(rng);
        }

        // Episode schedule: one trapezoid per AU, random start, staggered
        // so the margin frames at both ends stay neutral.
        std::vector<Episode> episodes(cfg.au_ids.size());
        const int max_start = n - episode_len - 2;
        for (std::size_t a = 0; a < cfg.au_ids.size(); ++a) {
            std::uniform_int_distribution<int> start_dist(2, max_start);
            episodes[a].start = start_dist(rng);
            episodes[a].peak = cfg.peak_level * (0.85 + 0.15 * unit(rng));
        }

        // Per-AU and permanent wrinkle phases; permanent wrinkles also get
        // a random orientation and wavelength per patch.
        std::vector<double> au_phase(cfg.au_ids.size());
        for (auto& ph : au_phase) ph = 2.0 * pi * unit(rng);

        struct PatchTexture {
            PatchSpec spec;
            std::size_t au_index;
            double perm_theta, perm_lambda, perm_phase;
        };
        std::vector<PatchTexture> textures;
        for (std::size_t a = 0; a < cfg.au_ids.size(); ++a) {
            for (auto spec : default_patch_specs(cfg.au_ids[a])) {
                spec.width = cfg.patch_size;
                spec.height = cfg.patch_size;
                PatchTexture tex;
                tex.spec = spec;
                tex.au_index = a;
                tex.perm_theta = pi * unit(rng);
                tex.perm_lambda = 10.0 + 6.0 * unit(rng);
                tex.perm_phase = 2.0 * pi * unit(rng);
                textures.push_back(tex);
            }
        }

        // Continuous intensity tracks, quantized once so annotations,
        // landmarks and textures all see the same stored values.
        std::vector<std::vector<double>> intensity(
            cfg.au_ids.size(), std::vector<double>(static_cast<std::size_t>(n)));
        for (std::size_t a = 0; a < cfg.au_ids.size(); ++a)
            for (int t = 0; t < n; ++t)
                intensity[a][static_cast<std::size_t>(t)] =
                    q9(episode_intensity(episodes[a], cfg, t));

        bundle.frames.resize(static_cast<std::size_t>(n));
        for (int t = 0; t < n; ++t) {
            Frame& frame = bundle.frames[static_cast<std::size_t>(t)];
            frame.index = t;

            // Expression on top of the neutral shape, in the head frame.
            NormalizedShape shape;
            shape.points = neutral;
            for (std::size_t a = 0; a < cfg.au_ids.size(); ++a) {
                const double level = intensity[a][static_cast<std::size_t>(t)];
                if (level == 0.0) continue;
                const auto field = au_displacement_field(cfg.au_ids[a]);
                for (std::size_t i = 0; i < shape.points.size(); ++i)
                    shape.points[i] += level * cfg.au_landmark_amp * field[i];
            }
            for (auto& p : shape.points)
                for (int k = 0; k < 3; ++k)
                    p[k] += cfg.landmark_jitter * sym(rng);

            const double phase_t = 2.0 * pi * t / n;
            PoseVector pose;
            for (int k = 0; k < 3; ++k) {
                pose.translation[k] = q9(cfg.head_translation_amp *
                                         std::sin(phase_t * (1.0 + 0.3 * k) +
                                                  trans_phase[k]));
                pose.rotation[k] = q9(cfg.head_rotation_amp *
                                      std::sin(phase_t * (1.0 + 0.2 * k) +
                                               rot_phase[k]));
            }
            frame.pose = pose;
            frame.landmarks = apply_rigid_motion(shape, pose);
            for (auto& p : frame.landmarks.points)
                for (int k = 0; k < 3; ++k) p[k] = q9(p[k]);

            // Patch textures: flat base, subject-constant wrinkle, an
            // AU-locked oriented grating that fades in with intensity, and
            // pixel noise.
            for (const auto& tex : textures) {
                Patch patch;
                patch.patch_id = tex.spec.patch_id;
                patch.width = cfg.patch_size;
                patch.height = cfg.patch_size;
                patch.pixels.resize(static_cast<std::size_t>(cfg.patch_size) *
                                    cfg.patch_size);
                const double level =
                    intensity[tex.au_index][static_cast<std::size_t>(t)];
                const double theta = au_orientation(cfg.au_ids[tex.au_index]);
                const double ph = au_phase[tex.au_index];
                for (int y = 0; y < cfg.patch_size; ++y) {
                    for (int x = 0; x < cfg.patch_size; ++x) {
                        const double perm =
                            cfg.permanent_wrinkle_amp *
                            std::sin(2.0 * pi *
                                         (x * std::cos(tex.perm_theta) +
                                          y * std::sin(tex.perm_theta)) /
                                         tex.perm_lambda +
                                     tex.perm_phase);
                        const double au_tex =
                            level * cfg.au_wrinkle_amp *
                            std::sin(2.0 * pi *
                                         (x * std::cos(theta) +
                                          y * std::sin(theta)) /
                                         8.0 +
                                     ph);
                        const double v = 120.0 + perm + au_tex +
                                         cfg.pixel_noise * gauss(rng);
                        patch.at(x, y) = static_cast<std::uint8_t>(
                            std::clamp(std::lround(v), 0L, 255L));
                    }
                }
                frame.patches.emplace(patch.patch_id, std::move(patch));
            }
        }

        for (std::size_t a = 0; a < cfg.au_ids.size(); ++a) {
            AUAnnotation annotation;
            annotation.au_id = cfg.au_ids[a];
            annotation.levels.resize(static_cast<std::size_t>(n));
            for (int t = 0; t < n; ++t) {
                const double level = intensity[a][static_cast<std::size_t>(t)];
                IntensityEntry entry;
                if (cfg.discrete_annotations) {
                    entry = quantize_intensity(level);
                } else if (level == 0.0) {
                    entry.level = IntensityLevel::Absent;
                } else {
                    entry.level = IntensityLevel::Continuous;
                    entry.value = level;
                }
                annotation.levels[static_cast<std::size_t>(t)] = entry;
            }
            bundle.annotations.push_back(std::move(annotation));
        }

        validate_bundle(bundle);
        bundles.push_back(std::move(bundle));
    }
    return bundles;
}

std::vector<RelativeLabel> ground_truth_relative(const SequenceBundle& bundle,
                                                 int au_id,
                                                 const WindowConfig& cfg) {
    const AUAnnotation* annotation = bundle.find_annotation(au_id);
    if (annotation == nullptr)
        throw ValidationError("ground_truth_relative: AU " +
                              std::to_string(au_id) + " not annotated");
    std::vector<double> intensity;
    intensity.reserve(annotation->levels.size());
    for (const auto& entry : annotation->levels) {
        if (entry.level != IntensityLevel::Continuous &&
            entry.level != IntensityLevel::Absent)
            throw ValidationError(
                "ground_truth_relative: needs continuous annotations; "
                "regenerate without discrete_annotations");
        intensity.push_back(intensity_value(entry));
    }
    return relative_labels_from_intensity(intensity, cfg);
}

} // namespace relau
