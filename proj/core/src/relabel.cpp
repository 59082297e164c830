#include "relau/relabel.hpp"

#include <cmath>

namespace relau {

void validate_window(const WindowConfig& cfg) {
    if (cfg.window < 2 || cfg.window % 2 != 0)
        throw ValidationError("window size must be an even integer >= 2");
    if (cfg.threshold <= 0.0 || cfg.threshold >= 1.0)
        throw ValidationError("threshold must be in (0, 1)");
}

double pair_target(double intensity_first, double intensity_second) {
    if (!(intensity_first >= 0.0 && intensity_first <= 1.0) ||
        !(intensity_second >= 0.0 && intensity_second <= 1.0))
        throw ValidationError("pair_target: intensities must be in [0, 1]");
    return intensity_second - intensity_first;
}

std::vector<bool> eligible_frames(const AUAnnotation& annotation,
                                  int border_margin) {
    const int n = static_cast<int>(annotation.levels.size());
    std::vector<bool> ok(static_cast<std::size_t>(n), true);
    if (border_margin <= 0) return ok;
    for (int t = 1; t < n; ++t) {
        if (is_present(annotation.levels[static_cast<std::size_t>(t)]) ==
            is_present(annotation.levels[static_cast<std::size_t>(t - 1)]))
            continue;
        // t is the first frame of the new presence state.
        for (int u = std::max(0, t - border_margin + 1);
             u <= std::min(n - 1, t + border_margin - 1); ++u)
            ok[static_cast<std::size_t>(u)] = false;
    }
    return ok;
}

std::vector<PairSample> sample_pairs(const SequenceBundle& bundle, int au_id,
                                     int border_margin, IntensityMode mode) {
    const AUAnnotation* ann = bundle.find_annotation(au_id);
    if (!ann)
        throw ValidationError("bundle '" + bundle.sequence_id +
                              "' has no annotation for AU " + std::to_string(au_id));
    const int n = static_cast<int>(ann->levels.size());
    const auto ok = eligible_frames(*ann, border_margin);

    bool any = false;
    for (bool e : ok) any = any || e;
    if (!any)
        throw ValidationError("no usable frames after border exclusion for AU " +
                              std::to_string(au_id));

    std::vector<PairSample> out;
    for (int u = 0; u < n; ++u) {
        if (!ok[static_cast<std::size_t>(u)]) continue;
        for (int v = u + 1; v < n; ++v) {
            if (!ok[static_cast<std::size_t>(v)]) continue;
            const auto& eu = ann->levels[static_cast<std::size_t>(u)];
            const auto& ev = ann->levels[static_cast<std::size_t>(v)];
            PairSample s;
            s.first = u;
            s.second = v;
            s.subject_id = bundle.subject_id;
            s.sequence_id = bundle.sequence_id;
            const bool pu = is_present(eu), pv = is_present(ev);
            s.category = (pu == pv) ? 0 : (pv ? 1 : -1);
            s.target = pair_target(intensity_value(eu, mode),
                                   intensity_value(ev, mode));
            out.push_back(std::move(s));
        }
    }
    return out;
}

RelativeLabel aggregate_relative(const std::function<double(int, int)>& scores,
                                 int t, const WindowConfig& cfg, int n_frames) {
    validate_window(cfg);
    if (t < 0 || t >= n_frames)
        throw ValidationError("aggregate_relative: frame index out of bounds");

    RelativeLabel out;
    if (t == 0 || t == n_frames - 1) {
        out.boundary = true;
        return out;  // no prior or no next frames: no-change
    }

    const int h = cfg.window / 2;
    double sum = 0.0;
    int count = 0;
    for (int i = 1; i <= h; ++i) {
        if (t - i < 0) continue;
        for (int j = 1; j <= h; ++j) {
            if (t + j >= n_frames) continue;
            sum += scores(t - i, t + j);
            ++count;
        }
    }
    out.comparisons_used = count;
    out.score = count > 0 ? sum / count : 0.0;
    if (out.score > cfg.threshold) out.label = 1;
    else if (out.score < -cfg.threshold) out.label = -1;
    else out.label = 0;
    return out;
}

std::vector<RelativeLabel> relative_labels_from_intensity(
    const std::vector<double>& intensity, const WindowConfig& cfg) {
    const int n = static_cast<int>(intensity.size());
    auto score = [&intensity](int a, int b) {
        return pair_target(intensity[static_cast<std::size_t>(a)],
                           intensity[static_cast<std::size_t>(b)]);
    };
    std::vector<RelativeLabel> labels;
    labels.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t)
        labels.push_back(aggregate_relative(score, t, cfg, n));
    return labels;
}

} // namespace relau
