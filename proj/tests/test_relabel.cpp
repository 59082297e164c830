#include <doctest.h>

#include <map>
#include <random>

#include "relau/relabel.hpp"

using namespace relau;

namespace {

/// Literal double-sum oracle: mean of the w^2/4 comparisons, summed in
/// the same (i outer, j inner) order so full-window scores match bitwise.
double full_window_oracle(const std::map<std::pair<int, int>, double>& c,
                          int t, int w) {
    const int h = w / 2;
    double sum = 0.0;
    for (int i = 1; i <= h; ++i)
        for (int j = 1; j <= h; ++j) sum += c.at({t - i, t + j});
    return sum / (h * h);
}

AUAnnotation presence_trace(int au_id, const std::vector<int>& present) {
    AUAnnotation annotation;
    annotation.au_id = au_id;
    for (int p : present) {
        IntensityEntry entry;
        if (p != 0) {
            entry.level = IntensityLevel::Continuous;
            entry.value = 0.8;
        }
        annotation.levels.push_back(entry);
    }
    return annotation;
}

} // namespace

TEST_CASE("window validation") {
    CHECK_NOTHROW(validate_window({10, 0.15}));
    CHECK_THROWS_AS(validate_window({0, 0.15}), ValidationError);
    CHECK_THROWS_AS(validate_window({7, 0.15}), ValidationError);
    CHECK_THROWS_AS(validate_window({10, 0.0}), ValidationError);
    CHECK_THROWS_AS(validate_window({10, 1.0}), ValidationError);
}

TEST_CASE("pair_target is the intensity difference, antisymmetric") {
    CHECK(pair_target(0.0, 0.790) == doctest::Approx(0.790));
    CHECK(pair_target(1.0, 0.0) == doctest::Approx(-1.0));
    CHECK(pair_target(0.42, 0.42) == 0.0);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double a = u(rng), b = u(rng);
        CHECK(pair_target(a, b) == -pair_target(b, a));
    }
    CHECK_THROWS_AS(pair_target(-0.1, 0.5), ValidationError);
    CHECK_THROWS_AS(pair_target(0.5, 1.1), ValidationError);
}

TEST_CASE("full-window aggregation matches Gauss-sum oracle exactly") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> score(-1.0, 1.0);
    std::uniform_real_distribution<double> thresh(0.01, 0.99);
    std::uniform_int_distribution<int> w_dist(1, 6);

    for (int trial = 0; trial < 2000; ++trial) {
        const int w = 2 * w_dist(rng);
        const int n = 40;
        std::map<std::pair<int, int>, double> c;
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v) c[{u, v}] = score(rng);
        const WindowConfig cfg{w, thresh(rng)};
        const auto lookup = [&c](int a, int b) { return c.at({a, b}); };

        const int h = w / 2;
        for (int t = h; t < n - h; ++t) {
            const RelativeLabel out = aggregate_relative(lookup, t, cfg, n);
            const double expected = full_window_oracle(c, t, w);
            CHECK(out.score == expected);  // bitwise: same sum order
            CHECK(out.comparisons_used == h * h);
            const int expected_label = out.score > cfg.threshold
                                           ? 1
                                           : (out.score < -cfg.threshold ? -1 : 0);
            CHECK(out.label == expected_label);
        }
    }
}

TEST_CASE("unanimous window of ones labels increase") {
    const auto ones = [](int, int) { return 1.0; };
    const RelativeLabel out = aggregate_relative(ones, 5, {6, 0.15}, 11);
    CHECK(out.score == doctest::Approx(1.0));
    CHECK(out.comparisons_used == 9);
    CHECK(out.label == 1);

    const auto zeros = [](int, int) { return 0.0; };
    CHECK(aggregate_relative(zeros, 5, {6, 0.15}, 11).label == 0);
}

TEST_CASE("truncated windows renormalize by the actual count") {
    const auto ones = [](int, int) { return 1.0; };
    // t = 1 in a long sequence: only one prior frame exists.
    const RelativeLabel out = aggregate_relative(ones, 1, {10, 0.15}, 30);
    CHECK(out.comparisons_used == 5);  // 1 prior x 5 next
    CHECK(out.score == doctest::Approx(1.0));
    CHECK_FALSE(out.boundary);
}

TEST_CASE("sequence edges are boundary no-change frames") {
    const auto ones = [](int, int) { return 1.0; };
    for (int t : {0, 10}) {
        const RelativeLabel out = aggregate_relative(ones, t, {4, 0.2}, 11);
        CHECK(out.boundary == (t == 0 || t == 10));
        if (out.boundary) {
            CHECK(out.label == 0);
            CHECK(out.comparisons_used == 0);
        }
    }
    // Short sequences never crash.
    for (int t = 0; t < 3; ++t)
        CHECK_NOTHROW(aggregate_relative(ones, t, {10, 0.15}, 3));
}

TEST_CASE("threshold equality resolves to no-change") {
    const auto c = [](int, int) { return 0.15; };
    CHECK(aggregate_relative(c, 2, {2, 0.15}, 5).label == 0);
    const auto cneg = [](int, int) { return -0.15; };
    CHECK(aggregate_relative(cneg, 2, {2, 0.15}, 5).label == 0);
}

TEST_CASE("raising one score never moves the label toward decrease") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> score(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::map<std::pair<int, int>, double> c;
        for (int u = 0; u < 12; ++u)
            for (int v = u + 1; v < 12; ++v) c[{u, v}] = score(rng);
        const WindowConfig cfg{4, 0.2};
        const auto lookup = [&c](int a, int b) { return c.at({a, b}); };
        const int before = aggregate_relative(lookup, 6, cfg, 12).label;
        c[{5, 7}] = std::min(1.0, c[{5, 7}] + 0.5);
        const int after = aggregate_relative(lookup, 6, cfg, 12).label;
        CHECK(after >= before);
    }
}

TEST_CASE("border exclusion removes frames around presence transitions") {
    // Presence on frames 3..9 of 15.
    const AUAnnotation annotation = presence_trace(
        4, {0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0});
    const auto ok = eligible_frames(annotation, 2);
    const std::vector<int> excluded = {2, 3, 4, 9, 10, 11};
    for (int t = 0; t < 15; ++t) {
        const bool should_exclude =
            std::find(excluded.begin(), excluded.end(), t) != excluded.end();
        CHECK(ok[static_cast<std::size_t>(t)] == !should_exclude);
    }
    // Margin 0 excludes nothing.
    const auto all = eligible_frames(annotation, 0);
    for (bool e : all) CHECK(e);
}

TEST_CASE("pair sampling reproduces the documented example pairs") {
    SequenceBundle bundle;
    bundle.subject_id = "S1";
    bundle.sequence_id = "S1_seq";
    bundle.annotations.push_back(presence_trace(
        4, {0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0}));

    const auto samples = sample_pairs(bundle, 4, 2);
    std::map<std::pair<int, int>, int> category;
    for (const auto& s : samples) category[{s.first, s.second}] = s.category;

    // Onset pairs: eligible absent frame before, present frame after.
    CHECK(category.at({1, 5}) == 1);
    CHECK(category.at({1, 6}) == 1);
    // Offset pairs.
    CHECK(category.at({7, 12}) == -1);
    CHECK(category.at({8, 12}) == -1);
    // Same-state pairs.
    CHECK(category.at({0, 1}) == 0);
    CHECK(category.at({5, 7}) == 0);
    // Excluded border frames never appear.
    for (const auto& [key, cat] : category) {
        (void)cat;
        for (int t : {2, 3, 4, 9, 10, 11}) {
            CHECK(key.first != t);
            CHECK(key.second != t);
        }
    }
}

TEST_CASE("sampling errors: unannotated AU and full exclusion") {
    SequenceBundle bundle;
    bundle.annotations.push_back(presence_trace(4, {0, 1, 0, 1}));
    CHECK_THROWS_AS(sample_pairs(bundle, 12, 2), ValidationError);
    // Margin large enough to exclude every frame.
    CHECK_THROWS_AS(sample_pairs(bundle, 4, 10), ValidationError);
}

TEST_CASE("ramp intensities produce increase labels across the ramp") {
    // Trapezoid: onset frames 3-8, apex to 14, offset 15-20, within 26.
    std::vector<double> intensity(26, 0.0);
    for (int t = 3; t <= 8; ++t) intensity[static_cast<std::size_t>(t)] = (t - 2) / 6.0;
    for (int t = 9; t <= 14; ++t) intensity[static_cast<std::size_t>(t)] = 1.0;
    for (int t = 15; t <= 20; ++t)
        intensity[static_cast<std::size_t>(t)] = (20 - t) / 6.0;

    const auto labels = relative_labels_from_intensity(intensity, {4, 0.15});
    CHECK(labels[5].label == 1);   // mid-onset
    CHECK(labels[12].label == 0);  // apex plateau
    CHECK(labels[17].label == -1); // mid-offset
    CHECK(labels[0].boundary);
    CHECK(labels[25].boundary);

    // Time reversal swaps increase and decrease.
    std::vector<double> reversed(intensity.rbegin(), intensity.rend());
    const auto rev = relative_labels_from_intensity(reversed, {4, 0.15});
    for (std::size_t t = 0; t < intensity.size(); ++t)
        CHECK(rev[intensity.size() - 1 - t].label == -labels[t].label);
}
