#include "relau/seqmodel.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace relau {

const AUAnnotation* SequenceBundle::find_annotation(int au_id) const {
    for (const auto& a : annotations)
        if (a.au_id == au_id) return &a;
    return nullptr;
}

double intensity_value(const IntensityEntry& entry, IntensityMode mode) {
    if (mode == IntensityMode::Discrete) return is_present(entry) ? 1.0 : 0.0;
    switch (entry.level) {
        case IntensityLevel::Absent: return 0.0;
        case IntensityLevel::A: return 0.580;
        case IntensityLevel::B: return 0.685;
        case IntensityLevel::C: return 0.790;
        case IntensityLevel::D: return 0.895;
        case IntensityLevel::E: return 1.0;
        case IntensityLevel::Continuous: return entry.value;
    }
    throw FormatError("unknown intensity level");
}

bool is_present(const IntensityEntry& entry) {
    if (entry.level == IntensityLevel::Continuous) return entry.value > 0.0;
    return entry.level != IntensityLevel::Absent;
}

IntensityEntry parse_intensity(const std::string& text) {
    if (text == "absent") return {IntensityLevel::Absent, 0.0};
    if (text == "A") return {IntensityLevel::A, 0.0};
    if (text == "B") return {IntensityLevel::B, 0.0};
    if (text == "C") return {IntensityLevel::C, 0.0};
    if (text == "D") return {IntensityLevel::D, 0.0};
    if (text == "E") return {IntensityLevel::E, 0.0};
    char* end = nullptr;
    double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0' || !std::isfinite(v) || v < 0.0 || v > 1.0)
        throw FormatError("unknown intensity level symbol: '" + text + "'");
    return {IntensityLevel::Continuous, v};
}

std::string format_intensity(const IntensityEntry& entry) {
    switch (entry.level) {
        case IntensityLevel::Absent: return "absent";
        case IntensityLevel::A: return "A";
        case IntensityLevel::B: return "B";
        case IntensityLevel::C: return "C";
        case IntensityLevel::D: return "D";
        case IntensityLevel::E: return "E";
        case IntensityLevel::Continuous: return format_g9(entry.value);
    }
    throw FormatError("unknown intensity level");
}

std::string format_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

void validate_bundle(const SequenceBundle& bundle) {
    if (bundle.frames.empty())
        throw ValidationError("bundle has no frames");

    const std::size_t n_points = bundle.frames.front().landmarks.count();
    if (n_points == 0)
        throw ValidationError("bundle frames have no landmarks");

    int prev_index = -1;
    for (const auto& frame : bundle.frames) {
        if (frame.index < 0 || frame.index <= prev_index)
            throw ValidationError("frame indices must be strictly increasing, got " +
                                  std::to_string(frame.index) + " after " +
                                  std::to_string(prev_index));
        prev_index = frame.index;
        if (frame.landmarks.count() != n_points)
            throw ValidationError("landmark count mismatch at frame " +
                                  std::to_string(frame.index) + ": expected " +
                                  std::to_string(n_points) + ", got " +
                                  std::to_string(frame.landmarks.count()));
        for (const auto& p : frame.landmarks.points) {
            if (!p.allFinite())
                throw ValidationError("non-finite landmark at frame " +
                                      std::to_string(frame.index));
            if (p.z() <= 0.0)
                throw ValidationError("landmark Z <= 0 at frame " +
                                      std::to_string(frame.index));
        }
        if (!frame.pose.translation.allFinite() || !frame.pose.rotation.allFinite())
            throw ValidationError("non-finite pose at frame " + std::to_string(frame.index));
        for (int a = 0; a < 3; ++a) {
            double ang = frame.pose.rotation[a];
            if (ang <= -std::numbers::pi || ang > std::numbers::pi)
                throw ValidationError("pose angle out of (-pi, pi] at frame " +
                                      std::to_string(frame.index));
        }
        for (const auto& [id, patch] : frame.patches) {
            if (patch.width < 3 || patch.height < 3)
                throw ValidationError("patch '" + id + "' smaller than 3x3");
            if (patch.pixels.size() !=
                static_cast<std::size_t>(patch.width) * patch.height)
                throw ValidationError("patch '" + id + "' pixel buffer size mismatch");
        }
    }

    if (bundle.intrinsics.f <= 0.0)
        throw ValidationError("camera focal length must be positive");

    for (const auto& ann : bundle.annotations) {
        if (ann.levels.size() != bundle.frames.size())
            throw ValidationError("annotation length mismatch for AU " +
                                  std::to_string(ann.au_id) + ": " +
                                  std::to_string(ann.levels.size()) + " values for " +
                                  std::to_string(bundle.frames.size()) + " frames");
        for (const auto& e : ann.levels) {
            if (e.level == IntensityLevel::Continuous &&
                (!std::isfinite(e.value) || e.value < 0.0 || e.value > 1.0))
                throw ValidationError("continuous intensity out of [0,1] for AU " +
                                      std::to_string(ann.au_id));
        }
    }
}

} // namespace relau
