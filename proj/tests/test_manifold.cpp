#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <random>

#include "relau/manifold.hpp"

using namespace relau;

namespace {

/// Independent classical-MDS oracle on a given squared-distance matrix.
Eigen::MatrixXd mds_oracle(const Eigen::MatrixXd& dist, int d) {
    const Eigen::Index n = dist.rows();
    const Eigen::MatrixXd d2 = dist.array().square().matrix();
    const Eigen::MatrixXd j =
        Eigen::MatrixXd::Identity(n, n) -
        Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    const Eigen::MatrixXd b = -0.5 * j * d2 * j;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
    Eigen::MatrixXd out(n, d);
    for (int c = 0; c < d; ++c) {
        const Eigen::Index src = n - 1 - c;  // descending order
        const double lambda = std::max(0.0, eig.eigenvalues()[src]);
        out.col(c) = eig.eigenvectors().col(src) * std::sqrt(lambda);
    }
    return out;
}

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& rows) {
    const Eigen::Index n = rows.rows();
    Eigen::MatrixXd d(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            d(i, j) = (rows.row(i) - rows.row(j)).norm();
    return d;
}

} // namespace

TEST_CASE("with a complete graph Isomap equals classical MDS") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::MatrixXd points(50, 6);
        for (Eigen::Index i = 0; i < points.size(); ++i)
            points.data()[i] = gauss(rng);

        const IsomapModel model = isomap_fit(points, 4, 49);
        const Eigen::MatrixXd oracle =
            mds_oracle(pairwise_distances(points), 4);

        // Compare embedded distance matrices (embeddings agree only up to
        // orthogonal transform and sign).
        const Eigen::MatrixXd da = pairwise_distances(model.embedding);
        const Eigen::MatrixXd db = pairwise_distances(oracle);
        CHECK((da - db).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("three collinear equally spaced points embed equally spaced") {
    Eigen::MatrixXd points(3, 2);
    points << 0, 0,
              1, 1,
              2, 2;
    const IsomapModel model = isomap_fit(points, 1, 2);
    const double step01 =
        std::abs(model.embedding(1, 0) - model.embedding(0, 0));
    const double step12 =
        std::abs(model.embedding(2, 0) - model.embedding(1, 0));
    CHECK(step01 == doctest::Approx(step12).epsilon(1e-9));
    CHECK(step01 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("transform of a training point returns its embedding row") {
    std::mt19937_64 rng(33);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd points(40, 5);
    for (Eigen::Index i = 0; i < points.size(); ++i)
        points.data()[i] = gauss(rng);
    const IsomapModel model = isomap_fit(points, 3, 6);
    for (Eigen::Index r = 0; r < points.rows(); ++r) {
        const Eigen::VectorXd y = isomap_transform(model, points.row(r));
        CHECK((y.transpose() - model.embedding.row(r)).norm() < 1e-6);
    }
    // Duplicate of a training point lands on the same spot.
    const Eigen::VectorXd dup = isomap_transform(model, points.row(7));
    CHECK((dup.transpose() - model.embedding.row(7)).norm() < 1e-6);
}

TEST_CASE("embedding is translation invariant up to distances") {
    std::mt19937_64 rng(44);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd points(30, 4);
    for (Eigen::Index i = 0; i < points.size(); ++i)
        points.data()[i] = gauss(rng);
    Eigen::MatrixXd shifted = points;
    shifted.rowwise() += Eigen::RowVector4d(5.0, -3.0, 0.5, 100.0);

    const IsomapModel a = isomap_fit(points, 3, 5);
    const IsomapModel b = isomap_fit(shifted, 3, 5);
    CHECK((pairwise_distances(a.embedding) - pairwise_distances(b.embedding))
              .cwiseAbs()
              .maxCoeff() < 1e-8);
}

TEST_CASE("a bent 2-D grid unrolls: geodesic vs embedded correlation") {
    // Swiss-roll style bend of a 20x10 grid into 3-D.
    Eigen::MatrixXd points(200, 3);
    Eigen::MatrixXd flat(200, 2);
    for (int i = 0; i < 20; ++i) {
        for (int j = 0; j < 10; ++j) {
            const double s = i * 0.3;
            const double t = j * 0.3;
            const double angle = s * 0.5;  // total bend just under pi
            points.row(i * 10 + j) << std::cos(angle) * 2.0,
                std::sin(angle) * 2.0, t;
            flat.row(i * 10 + j) << s, t;
        }
    }
    const IsomapModel model = isomap_fit(points, 2, 8);

    // Correlate geodesic distances with embedded distances.
    const Eigen::MatrixXd de = pairwise_distances(model.embedding);
    std::vector<double> xs, ys;
    for (Eigen::Index i = 0; i < 200; ++i)
        for (Eigen::Index j = i + 1; j < 200; ++j) {
            xs.push_back(model.geodesic(i, j));
            ys.push_back(de(i, j));
        }
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        mx += xs[k];
        my += ys[k];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(ys.size());
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sxy += (xs[k] - mx) * (ys[k] - my);
        sxx += (xs[k] - mx) * (xs[k] - mx);
        syy += (ys[k] - my) * (ys[k] - my);
    }
    CHECK(sxy / std::sqrt(sxx * syy) >= 0.99);
}

TEST_CASE("disconnected data raises k until connected, then errors at cap") {
    // Two tight, far-apart clusters: connectivity requires k spanning the
    // gap, which the doubling reaches before the n-1 cap.
    Eigen::MatrixXd points(10, 2);
    for (int i = 0; i < 5; ++i) points.row(i) << i * 0.01, 0.0;
    for (int i = 5; i < 10; ++i) points.row(i) << 1000.0 + i * 0.01, 0.0;
    CHECK_NOTHROW(isomap_fit(points, 2, 2));

    // n <= d is a size error.
    CHECK_THROWS_AS(isomap_fit(points, 10, 3), ValidationError);
}

TEST_CASE("point between two symmetric clusters embeds symmetrically") {
    // Two clusters mirrored about the origin; a probe at the origin must
    // land equidistant from the embedded cluster centroids.
    std::mt19937_64 rng(55);
    std::normal_distribution<double> gauss(0.0, 0.05);
    Eigen::MatrixXd points(40, 2);
    for (int i = 0; i < 20; ++i)
        points.row(i) << -2.0 + gauss(rng), gauss(rng);
    for (int i = 20; i < 40; ++i) {
        points.row(i) = -points.row(i - 20);
    }
    const IsomapModel model = isomap_fit(points, 2, 39);
    const Eigen::VectorXd probe =
        isomap_transform(model, Eigen::Vector2d(0.0, 0.0));

    Eigen::RowVector2d c1 = model.embedding.topRows(20).colwise().mean();
    Eigen::RowVector2d c2 = model.embedding.bottomRows(20).colwise().mean();
    const double d1 = (probe.transpose() - c1).norm();
    const double d2 = (probe.transpose() - c2).norm();
    CHECK(std::abs(d1 - d2) < 1e-3);
}
