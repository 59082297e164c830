#include "relau/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace relau {

double TwoViewKernel::operator()(const PairFeature& a,
                                 const PairFeature& b) const {
    return 0.5 * std::exp(-gamma1 * (a.z1 - b.z1).squaredNorm()) +
           0.5 * std::exp(-gamma2 * (a.z2 - b.z2).squaredNorm());
}

Eigen::MatrixXd two_view_gram(const std::vector<PairFeature>& a,
                              const std::vector<PairFeature>& b,
                              const TwoViewKernel& kernel) {
    Eigen::MatrixXd gram(static_cast<Eigen::Index>(a.size()),
                         static_cast<Eigen::Index>(b.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                kernel(a[i], b[j]);
    return gram;
}

SvrDualSolution svr_solve_dual(const Eigen::MatrixXd& gram,
                               const Eigen::VectorXd& targets, double C,
                               double epsilon, double tol) {
    const int n = static_cast<int>(targets.size());
    if (n < 2) throw ValidationError("svr needs at least 2 samples");
    if (C <= 0.0 || epsilon < 0.0)
        throw ValidationError("svr: C must be positive and epsilon >= 0");
    for (int i = 0; i < n; ++i)
        if (!std::isfinite(targets[i]))
            throw ValidationError("svr: non-finite target");

    // 2n-variable box form: lambda_i for alpha (z=+1), lambda_{i+n} for
    // alpha* (z=-1); p = (eps - y, eps + y); constraint z'lambda = 0.
    const int nn = 2 * n;
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(nn);
    Eigen::VectorXd grad(nn);
    for (int i = 0; i < n; ++i) {
        grad[i] = epsilon - targets[i];
        grad[i + n] = epsilon + targets[i];
    }
    auto z_of = [n](int i) { return i < n ? 1.0 : -1.0; };
    auto base = [n](int i) { return i < n ? i : i - n; };

    double m_val = 0.0, big_m_val = 0.0;
    const long max_iter = 200000L + 50L * static_cast<long>(nn) * nn;
    for (long iter = 0;; ++iter) {
        // Maximal violating pair, ties by lowest index.
        int i_up = -1, j_low = -1;
        m_val = -std::numeric_limits<double>::infinity();
        big_m_val = std::numeric_limits<double>::infinity();
        for (int i = 0; i < nn; ++i) {
            const double z = z_of(i);
            const double score = -z * grad[i];
            const bool in_up = (z > 0 && lambda[i] < C) || (z < 0 && lambda[i] > 0);
            const bool in_low = (z > 0 && lambda[i] > 0) || (z < 0 && lambda[i] < C);
            if (in_up && score > m_val) { m_val = score; i_up = i; }
            if (in_low && score < big_m_val) { big_m_val = score; j_low = i; }
        }
        if (i_up < 0 || j_low < 0 || m_val - big_m_val <= tol || iter >= max_iter)
            break;

        const int i = i_up, j = j_low;
        const double zi = z_of(i), zj = z_of(j);
        const int bi = base(i), bj = base(j);
        // Step s moves lambda_i by zi*s and lambda_j by -zj*s.
        double h = gram(bi, bi) + gram(bj, bj) - 2.0 * gram(bi, bj);
        if (h < 1e-12) h = 1e-12;
        double s = (m_val - big_m_val) / h;
        // Box limits.
        if (zi > 0) s = std::min(s, C - lambda[i]);
        else s = std::min(s, lambda[i]);
        if (zj > 0) s = std::min(s, lambda[j]);
        else s = std::min(s, C - lambda[j]);
        if (s <= 0.0) break;  // numerically stuck at a box corner

        lambda[i] += zi * s;
        lambda[j] -= zj * s;
        lambda[i] = std::clamp(lambda[i], 0.0, C);
        lambda[j] = std::clamp(lambda[j], 0.0, C);
        for (int kidx = 0; kidx < nn; ++kidx)
            grad[kidx] += z_of(kidx) * s * (gram(base(kidx), bi) - gram(base(kidx), bj));
    }

    SvrDualSolution sol;
    sol.beta = lambda.head(n) - lambda.tail(n);
    sol.kkt_residual = std::max(0.0, m_val - big_m_val);
    sol.bias = std::isfinite(m_val) && std::isfinite(big_m_val)
                   ? 0.5 * (m_val + big_m_val)
                   : 0.0;

    // 1/2 l'Ql + p'l, using l'Ql = l'(grad - p).
    Eigen::VectorXd p(nn);
    for (int i = 0; i < n; ++i) {
        p[i] = epsilon - targets[i];
        p[i + n] = epsilon + targets[i];
    }
    sol.dual_objective = 0.5 * lambda.dot(grad - p) + p.dot(lambda);
    return sol;
}

SvrModel svr_train(const std::vector<PairFeature>& points,
                   const Eigen::VectorXd& targets, double C, double epsilon,
                   const TwoViewKernel& kernel, double tol) {
    if (points.size() != static_cast<std::size_t>(targets.size()))
        throw ValidationError("svr_train: sample/target count mismatch");
    for (const auto& pt : points)
        if (!pt.z1.allFinite() || !pt.z2.allFinite())
            throw ValidationError("svr_train: non-finite feature");

    const Eigen::MatrixXd gram = two_view_gram(points, points, kernel);
    auto sol = svr_solve_dual(gram, targets, C, epsilon, tol);

    SvrModel model;
    model.points = points;
    model.beta = std::move(sol.beta);
    model.bias = sol.bias;
    model.C = C;
    model.epsilon = epsilon;
    model.kernel = kernel;
    model.dual_objective = sol.dual_objective;
    model.kkt_residual = sol.kkt_residual;
    return model;
}

double svr_predict_raw(const SvrModel& model, const PairFeature& x) {
    double out = model.bias;
    for (std::size_t i = 0; i < model.points.size(); ++i)
        out += model.beta[static_cast<Eigen::Index>(i)] *
               model.kernel(model.points[i], x);
    return out;
}

double svr_predict(const SvrModel& model, const PairFeature& x) {
    return std::clamp(svr_predict_raw(model, x), -1.0, 1.0);
}

int classify_pair(double score, double threshold) {
    if (threshold <= 0.0)
        throw ValidationError("classify_pair: threshold must be positive");
    if (score > threshold) return 1;
    if (score < -threshold) return -1;
    return 0;
}

std::vector<std::size_t> balance_zero_class(const std::vector<int>& categories,
                                            double ratio, std::uint64_t seed) {
    std::vector<std::size_t> zero, keep;
    std::size_t pos = 0, neg = 0;
    for (std::size_t i = 0; i < categories.size(); ++i) {
        if (categories[i] > 0) { ++pos; keep.push_back(i); }
        else if (categories[i] < 0) { ++neg; keep.push_back(i); }
        else zero.push_back(i);
    }
    const auto cap = static_cast<std::size_t>(
        std::floor(ratio * static_cast<double>(std::max(pos, neg))));
    if (zero.size() > cap && cap > 0) {
        std::mt19937_64 rng(seed);
        std::shuffle(zero.begin(), zero.end(), rng);
        zero.resize(cap);
    } else if (cap == 0 && !zero.empty() && (pos > 0 || neg > 0)) {
        zero.clear();
    }
    keep.insert(keep.end(), zero.begin(), zero.end());
    std::sort(keep.begin(), keep.end());
    return keep;
}

} // namespace relau
