#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "relau/learner.hpp"

using namespace relau;

namespace {

std::vector<PairFeature> random_points(std::mt19937_64& rng, int n, int dim) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<PairFeature> points(static_cast<std::size_t>(n));
    for (auto& p : points) {
        p.z1.resize(dim);
        p.z2.resize(dim);
        for (int c = 0; c < dim; ++c) {
            p.z1[c] = gauss(rng);
            p.z2[c] = gauss(rng);
        }
    }
    return points;
}

/// Independent oracle for the epsilon-SVR dual: projected gradient descent
/// on the 2n-variable box form, with exact projection onto
/// { lambda in [0,C]^2n : z'lambda = 0 } by bisection on the shift.
double svr_dual_oracle(const Eigen::MatrixXd& gram,
                       const Eigen::VectorXd& targets, double C,
                       double epsilon) {
    const int n = static_cast<int>(targets.size());
    const int nn = 2 * n;
    Eigen::VectorXd z(nn), p(nn);
    for (int i = 0; i < n; ++i) {
        z[i] = 1.0;
        z[i + n] = -1.0;
        p[i] = epsilon - targets[i];
        p[i + n] = epsilon + targets[i];
    }
    Eigen::MatrixXd q(nn, nn);
    for (int i = 0; i < nn; ++i)
        for (int j = 0; j < nn; ++j)
            q(i, j) = z[i] * z[j] * gram(i % n, j % n);

    auto project = [&](Eigen::VectorXd v) {
        // Find mu so that clip(v - mu*z, 0, C) satisfies z'lambda = 0.
        auto constraint = [&](double mu) {
            double s = 0.0;
            for (int i = 0; i < nn; ++i)
                s += z[i] * std::clamp(v[i] - mu * z[i], 0.0, C);
            return s;
        };
        double lo = -1e6, hi = 1e6;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (constraint(mid) > 0.0 ? lo : hi) = mid;
        }
        const double mu = 0.5 * (lo + hi);
        Eigen::VectorXd out(nn);
        for (int i = 0; i < nn; ++i)
            out[i] = std::clamp(v[i] - mu * z[i], 0.0, C);
        return out;
    };

    const double lipschitz =
        q.cwiseAbs().rowwise().sum().maxCoeff() + 1e-9;
    const double step = 1.0 / lipschitz;
    Eigen::VectorXd lambda = project(Eigen::VectorXd::Zero(nn));
    for (int it = 0; it < 60000; ++it) {
        const Eigen::VectorXd grad = q * lambda + p;
        const Eigen::VectorXd next = project(lambda - step * grad);
        if ((next - lambda).cwiseAbs().maxCoeff() < 1e-12) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return 0.5 * lambda.dot(q * lambda) + p.dot(lambda);
}

} // namespace

TEST_CASE("dual objective matches a projected-gradient oracle") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> target(-1.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 10;
        const auto points = random_points(rng, n, 3);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) y[i] = target(rng);

        TwoViewKernel kernel{0.5, 0.8};
        const Eigen::MatrixXd gram = two_view_gram(points, points, kernel);
        const double c = 2.0;
        const double eps = 0.1;
        const auto sol = svr_solve_dual(gram, y, c, eps, 1e-6);
        const double oracle = svr_dual_oracle(gram, y, c, eps);
        CHECK(sol.dual_objective == doctest::Approx(oracle).epsilon(1e-5));
        CHECK(sol.kkt_residual <= 1e-3);
        for (Eigen::Index i = 0; i < sol.beta.size(); ++i) {
            CHECK(sol.beta[i] <= c + 1e-12);
            CHECK(sol.beta[i] >= -c - 1e-12);
        }
    }
}

TEST_CASE("constant targets inside the tube need no support vectors") {
    std::mt19937_64 rng(18);
    const auto points = random_points(rng, 5, 2);
    const Eigen::VectorXd y = Eigen::VectorXd::Zero(5);
    const SvrModel model = svr_train(points, y, 1.0, 0.1, {1.0, 1.0});
    CHECK(model.beta.cwiseAbs().maxCoeff() < 1e-12);
    for (const auto& p : points) {
        const double out = svr_predict(model, p);
        CHECK(out >= -0.1);
        CHECK(out <= 0.1);
    }
}

TEST_CASE("duplicated training set predicts identically") {
    std::mt19937_64 rng(19);
    const auto points = random_points(rng, 8, 2);
    Eigen::VectorXd y(8);
    std::uniform_real_distribution<double> target(-1.0, 1.0);
    for (int i = 0; i < 8; ++i) y[i] = target(rng);

    const SvrModel base = svr_train(points, y, 4.0, 0.05, {0.7, 0.7}, 1e-5);

    std::vector<PairFeature> doubled = points;
    doubled.insert(doubled.end(), points.begin(), points.end());
    Eigen::VectorXd y2(16);
    y2 << y, y;
    const SvrModel dup = svr_train(doubled, y2, 4.0, 0.05, {0.7, 0.7}, 1e-5);

    const auto probes = random_points(rng, 20, 2);
    for (const auto& probe : probes)
        CHECK(svr_predict_raw(base, probe) ==
              doctest::Approx(svr_predict_raw(dup, probe)).epsilon(1e-8));
}

TEST_CASE("prediction is clipped to [-1, 1]") {
    std::mt19937_64 rng(20);
    auto points = random_points(rng, 4, 2);
    Eigen::VectorXd y(4);
    y << 1.0, 1.0, -1.0, -1.0;
    SvrModel model = svr_train(points, y, 100.0, 0.01, {0.5, 0.5});
    model.bias = 5.0;  // force a raw output far outside the range
    CHECK(svr_predict(model, points[0]) == 1.0);
    model.bias = -5.0;
    CHECK(svr_predict(model, points[0]) == -1.0);
}

TEST_CASE("classify_pair partitions scores with ties to no-change") {
    CHECK(classify_pair(0.5, 0.15) == 1);
    CHECK(classify_pair(-0.5, 0.15) == -1);
    CHECK(classify_pair(0.15, 0.15) == 0);
    CHECK(classify_pair(-0.15, 0.15) == 0);
    CHECK(classify_pair(0.0, 0.15) == 0);
    CHECK_THROWS_AS(classify_pair(0.1, 0.0), ValidationError);
    CHECK_THROWS_AS(classify_pair(0.1, -0.2), ValidationError);
}

TEST_CASE("zero-class balancing is deterministic and respects the ratio") {
    std::vector<int> categories;
    for (int i = 0; i < 10; ++i) categories.push_back(1);
    for (int i = 0; i < 6; ++i) categories.push_back(-1);
    for (int i = 0; i < 100; ++i) categories.push_back(0);

    const auto kept = balance_zero_class(categories, 1.5, 42);
    std::size_t zeros = 0;
    for (std::size_t i : kept) {
        CHECK(i < categories.size());
        if (categories[i] == 0) ++zeros;
    }
    CHECK(zeros == 15);  // floor(1.5 * max(10, 6))
    CHECK(std::is_sorted(kept.begin(), kept.end()));

    // All signed samples survive.
    std::size_t signed_kept = kept.size() - zeros;
    CHECK(signed_kept == 16);

    // Same seed, same subset; different seed, different subset (almost
    // surely for 15 of 100).
    CHECK(balance_zero_class(categories, 1.5, 42) == kept);
    CHECK(balance_zero_class(categories, 1.5, 43) != kept);
}

TEST_CASE("svr_train validates inputs") {
    std::mt19937_64 rng(21);
    auto points = random_points(rng, 4, 2);
    Eigen::VectorXd y(4);
    y.setZero();
    y[2] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(svr_train(points, y, 1.0, 0.1, {1.0, 1.0}),
                    ValidationError);
    y[2] = 0.0;
    points[1].z1[0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(svr_train(points, y, 1.0, 0.1, {1.0, 1.0}),
                    ValidationError);
}
