#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "relau/errors.hpp"

namespace relau {

/// Tracked 3D facial feature points for one frame, camera-frame units.
/// Point count is scheme-dependent (66 for CLM-Z style input, 24 for
/// Bosphorus style input) but must stay constant within a sequence.
struct LandmarkFrame {
    std::vector<Eigen::Vector3d> points;

    std::size_t count() const { return points.size(); }
};

/// Rigid head pose: translation r and Euler angles (pitch, yaw, roll),
/// radians, each angle in (-pi, pi].
struct PoseVector {
    Eigen::Vector3d translation{0, 0, 0};
    Eigen::Vector3d rotation{0, 0, 0};
};

struct CameraIntrinsics {
    double f = 1.0;   // focal length, pixels
    double cx = 0.0;  // principal point
    double cy = 0.0;
};

/// 8-bit grayscale image patch. Minimum 3x3 so LBP has an interior.
struct Patch {
    std::string patch_id;
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // row-major, height*width

    std::uint8_t at(int x, int y) const {
        return pixels[static_cast<std::size_t>(y) * width + x];
    }
    std::uint8_t& at(int x, int y) {
        return pixels[static_cast<std::size_t>(y) * width + x];
    }
};

struct Frame {
    int index = 0;
    LandmarkFrame landmarks;
    PoseVector pose;
    std::map<std::string, Patch> patches;
};

/// FACS intensity annotation value: a discrete level or a continuous
/// intensity in [0, 1].
enum class IntensityLevel { Absent, A, B, C, D, E, Continuous };

struct IntensityEntry {
    IntensityLevel level = IntensityLevel::Absent;
    double value = 0.0;  // used when level == Continuous

    bool operator==(const IntensityEntry&) const = default;
};

/// Per-frame intensity track for one AU.
struct AUAnnotation {
    int au_id = 0;
    std::vector<IntensityEntry> levels;  // one entry per frame
};

struct SequenceBundle {
    std::string subject_id;
    std::string sequence_id;
    CameraIntrinsics intrinsics;
    std::vector<Frame> frames;
    std::vector<AUAnnotation> annotations;

    const AUAnnotation* find_annotation(int au_id) const;
};

enum class IntensityMode { Continuous, Discrete };

/// Numeric intensity of an annotation entry in [0, 1].
///
/// Discrete FACS levels map to 0, 0.580, 0.685, 0.790, 0.895, 1.0 for
/// absent, A..E; continuous values pass through unchanged. In Discrete
/// (presence-only) mode the result collapses to 0/1.
double intensity_value(const IntensityEntry& entry,
                       IntensityMode mode = IntensityMode::Continuous);

/// True when the entry marks the AU as present at all.
bool is_present(const IntensityEntry& entry);

/// Parses "absent", "A".."E", or a decimal in [0, 1]. Throws FormatError
/// on anything else.
IntensityEntry parse_intensity(const std::string& text);
std::string format_intensity(const IntensityEntry& entry);

/// Formats a double as decimal text with 9 significant digits; the format
/// used for all landmark/pose values on disk.
std::string format_g9(double v);

/// Throws ValidationError if any bundle invariant is violated: non-empty
/// frame list, finite coordinates, Z > 0, constant landmark count,
/// strictly increasing frame indices, annotation length == frame count.
void validate_bundle(const SequenceBundle& bundle);

/// Reads/writes the bundle directory layout (manifest.json, landmarks/,
/// pose/, patches/, annotations.csv). load validates on return.
SequenceBundle load_bundle(const std::string& path);
void save_bundle(const SequenceBundle& bundle, const std::string& path);

/// Binary 8-bit PGM (P5).
Patch load_pgm(const std::string& path, const std::string& patch_id);
void save_pgm(const Patch& patch, const std::string& path);

} // namespace relau
