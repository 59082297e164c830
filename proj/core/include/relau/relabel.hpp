#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "relau/seqmodel.hpp"

namespace relau {

/// An ordered frame pair used to train the pairwise change scorer.
/// Feature vectors are filled in by the extraction pipeline; sampling only
/// fixes the positions, target and class.
struct PairSample {
    int first = 0;        // position of I_t within the sequence
    int second = 0;       // position of I_t~, first < second
    double target = 0.0;  // c in [-1, 1]
    int category = 0;     // +1 / -1 / 0 presence-transition class
    std::string subject_id;
    std::string sequence_id;
    Eigen::VectorXd geometric;   // (g_t, g_t~)
    Eigen::VectorXd appearance;  // a_t~ - a_t
};

/// Aggregated per-frame relative label.
struct RelativeLabel {
    int label = 0;        // +1 = increase, -1 = decrease, 0 = no change
    double score = 0.0;   // windowed average s
    int comparisons_used = 0;
    bool boundary = false;  // no prior or no next frames existed
};

struct WindowConfig {
    int window = 10;          // w, even and >= 2; half-window h = w/2
    double threshold = 0.15;  // T in (0, 1)
};

void validate_window(const WindowConfig& cfg);

/// Regression target for a pair: second intensity minus first. Inputs
/// must be in [0, 1].
double pair_target(double intensity_first, double intensity_second);

/// Frames eligible for pair sampling: true unless the frame lies within
/// border_margin of a presence transition (|t - tau| < border_margin for a
/// transition frame tau, the first frame of a new presence state).
std::vector<bool> eligible_frames(const AUAnnotation& annotation,
                                  int border_margin);

/// Draws all ordered eligible pairs (u < v) with presence-rule classes:
/// +1 absent-then-present, -1 present-then-absent, 0 same state. Targets
/// are intensity differences under the given mode. Throws ValidationError
/// when no frames survive the border exclusion or the AU is unannotated.
std::vector<PairSample> sample_pairs(const SequenceBundle& bundle, int au_id,
                                     int border_margin,
                                     IntensityMode mode = IntensityMode::Continuous);

/// Windowed aggregation with truncated-window renormalization: the mean of
/// c(t-i, t+j) over i,j in 1..w/2 with both indices in [0, n_frames);
/// divides by the actual comparison count (w^2/4 when the full window
/// fits). A frame with no prior or no next frames gets a boundary label.
RelativeLabel aggregate_relative(const std::function<double(int, int)>& scores,
                                 int t, const WindowConfig& cfg, int n_frames);

/// Ground-truth relative labels from a per-frame intensity track, via
/// pair_target + aggregate_relative.
std::vector<RelativeLabel> relative_labels_from_intensity(
    const std::vector<double>& intensity, const WindowConfig& cfg);

} // namespace relau
