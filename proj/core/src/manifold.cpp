#include "relau/manifold.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

#include "relau/parallel.hpp"

namespace relau {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& x) {
    const Eigen::VectorXd sq = x.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = sq.replicate(1, x.rows()) +
                         sq.transpose().replicate(x.rows(), 1) -
                         2.0 * (x * x.transpose());
    return d2.cwiseMax(0.0).cwiseSqrt();
}

/// Adjacency lists for a symmetric k-NN graph; ties by index.
std::vector<std::vector<std::pair<int, double>>> knn_graph(
    const Eigen::MatrixXd& dist, int k) {
    const int n = static_cast<int>(dist.rows());
    std::vector<std::vector<std::pair<int, double>>> adj(
        static_cast<std::size_t>(n));
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (dist(i, a) != dist(i, b)) return dist(i, a) < dist(i, b);
            return a < b;
        });
        int added = 0;
        for (int j : order) {
            if (j == i) continue;
            adj[static_cast<std::size_t>(i)].emplace_back(j, dist(i, j));
            if (++added == k) break;
        }
    }
    // Symmetrize (union of directed edges).
    for (int i = 0; i < n; ++i) {
        for (auto [j, w] : adj[static_cast<std::size_t>(i)]) {
            auto& back = adj[static_cast<std::size_t>(j)];
            bool found = false;
            for (auto& [jj, ww] : back)
                if (jj == i) { found = true; break; }
            if (!found) back.emplace_back(i, w);
        }
    }
    for (auto& nbrs : adj)
        std::sort(nbrs.begin(), nbrs.end());
    return adj;
}

bool is_connected(
    const std::vector<std::vector<std::pair<int, double>>>& adj) {
    if (adj.empty()) return true;
    std::vector<char> seen(adj.size(), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (auto [v, w] : adj[static_cast<std::size_t>(u)]) {
            (void)w;
            if (!seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = 1;
                ++count;
                stack.push_back(v);
            }
        }
    }
    return count == adj.size();
}

void dijkstra(const std::vector<std::vector<std::pair<int, double>>>& adj,
              int source, Eigen::VectorXd& out) {
    const int n = static_cast<int>(adj.size());
    out.setConstant(n, kInf);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    out[source] = 0.0;
    queue.emplace(0.0, source);
    while (!queue.empty()) {
        auto [d, u] = queue.top();
        queue.pop();
        if (d > out[u]) continue;
        for (auto [v, w] : adj[static_cast<std::size_t>(u)]) {
            const double nd = d + w;
            if (nd < out[v]) {
                out[v] = nd;
                queue.emplace(nd, v);
            }
        }
    }
}

/// Fix eigenvector sign deterministically: largest-magnitude entry positive.
void canonicalize_sign(Eigen::Ref<Eigen::VectorXd> v) {
    Eigen::Index best = 0;
    double best_abs = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double a = std::abs(v[i]);
        if (a > best_abs) { best_abs = a; best = i; }
    }
    if (v[best] < 0.0) v = -v;
}

} // namespace

IsomapModel isomap_fit(const Eigen::MatrixXd& points, int d, int k,
                       unsigned workers) {
    const int n = static_cast<int>(points.rows());
    if (n <= d)
        throw ValidationError("isomap_fit needs more than d=" + std::to_string(d) +
                              " training points, got " + std::to_string(n));
    if (k < 1) throw ValidationError("isomap_fit neighborhood k must be >= 1");

    const Eigen::MatrixXd dist = pairwise_distances(points);

    int k_eff = std::min(k, n - 1);
    auto adj = knn_graph(dist, k_eff);
    while (!is_connected(adj)) {
        if (k_eff >= n - 1)
            throw NumericError("isomap k-NN graph disconnected at the k = n-1 cap");
        k_eff = std::min(2 * k_eff, n - 1);
        adj = knn_graph(dist, k_eff);
    }

    IsomapModel model;
    model.training_points = points;
    model.k = k_eff;
    model.dim = d;

    model.geodesic.resize(n, n);
    parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t i) {
        Eigen::VectorXd row;
        dijkstra(adj, static_cast<int>(i), row);
        model.geodesic.row(static_cast<Eigen::Index>(i)) = row.transpose();
    });

    // Classical MDS on the squared geodesics.
    const Eigen::MatrixXd d2 = model.geodesic.array().square();
    const Eigen::VectorXd row_mean = d2.rowwise().mean();
    const double total_mean = row_mean.mean();
    Eigen::MatrixXd b = d2;
    b.colwise() -= row_mean;
    b.rowwise() -= row_mean.transpose();
    b.array() += total_mean;
    b *= -0.5;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
    if (eig.info() != Eigen::Success)
        throw NumericError("isomap eigendecomposition failed");

    // Eigen returns ascending order; take the top d, descending.
    model.eigenvalues.resize(d);
    model.eigenvectors.resize(n, d);
    model.embedding.resize(n, d);
    for (int j = 0; j < d; ++j) {
        const Eigen::Index src = static_cast<Eigen::Index>(n - 1 - j);
        double lambda = eig.eigenvalues()[src];
        if (lambda < 0.0) lambda = 0.0;
        model.eigenvalues[j] = lambda;
        Eigen::VectorXd v = eig.eigenvectors().col(src);
        canonicalize_sign(v);
        model.eigenvectors.col(j) = v;
        model.embedding.col(j) = std::sqrt(lambda) * v;
    }

    model.mean_sq_geodesic = d2.colwise().mean();
    return model;
}

Eigen::MatrixXd isomap_transform_batch(const IsomapModel& model,
                                       const Eigen::MatrixXd& points) {
    if (points.cols() != model.training_points.cols())
        throw ValidationError("isomap_transform: dimension mismatch");
    const int n = static_cast<int>(model.training_points.rows());
    const int m = static_cast<int>(points.rows());
    const int d = model.dim;

    // Euclidean distances point -> training set, via one gemm.
    const Eigen::VectorXd train_sq =
        model.training_points.rowwise().squaredNorm();
    const Eigen::VectorXd pt_sq = points.rowwise().squaredNorm();
    Eigen::MatrixXd dist2 = pt_sq.replicate(1, n) +
                            train_sq.transpose().replicate(m, 1) -
                            2.0 * (points * model.training_points.transpose());
    dist2 = dist2.cwiseMax(0.0);

    Eigen::MatrixXd delta(m, n);  // squared geodesic estimates
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int r = 0; r < m; ++r) {
        std::iota(order.begin(), order.end(), 0);
        const auto& row = dist2.row(r);
        std::partial_sort(order.begin(), order.begin() + model.k, order.end(),
                          [&](int a, int b) {
                              if (row[a] != row[b]) return row[a] < row[b];
                              return a < b;
                          });
        Eigen::VectorXd geo = Eigen::VectorXd::Constant(n, kInf);
        for (int kk = 0; kk < model.k; ++kk) {
            const int nb = order[static_cast<std::size_t>(kk)];
            const double base = std::sqrt(row[nb]);
            for (int j = 0; j < n; ++j)
                geo[j] = std::min(geo[j], base + model.geodesic(nb, j));
        }
        delta.row(r) = geo.array().square().matrix().transpose();
    }

    // Nystrom projection onto the fitted eigenbasis.
    Eigen::MatrixXd centered =
        (model.mean_sq_geodesic.transpose().replicate(m, 1) - delta);
    Eigen::MatrixXd out = 0.5 * centered * model.eigenvectors;  // m x d
    for (int j = 0; j < d; ++j) {
        const double lambda = model.eigenvalues[j];
        if (lambda > 0.0)
            out.col(j) /= std::sqrt(lambda);
        else
            out.col(j).setZero();
    }
    return out;
}

Eigen::VectorXd isomap_transform(const IsomapModel& model,
                                 const Eigen::VectorXd& point) {
    return isomap_transform_batch(model, point.transpose()).row(0);
}

} // namespace relau
