#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "relau/errors.hpp"

namespace relau {

/// One training/prediction sample for the pairwise scorer: KCCA projections
/// of the two views.
struct PairFeature {
    Eigen::VectorXd z1;  // geometric view projection
    Eigen::VectorXd z2;  // appearance view projection
};

/// Equal-weight sum of two RBF kernels, one per projected view:
/// K = 1/2 exp(-g1 ||z1x - z1y||^2) + 1/2 exp(-g2 ||z2x - z2y||^2).
struct TwoViewKernel {
    double gamma1 = 1.0;
    double gamma2 = 1.0;

    double operator()(const PairFeature& a, const PairFeature& b) const;
};

Eigen::MatrixXd two_view_gram(const std::vector<PairFeature>& a,
                              const std::vector<PairFeature>& b,
                              const TwoViewKernel& kernel);

/// Fitted epsilon-SVR.
struct SvrModel {
    std::vector<PairFeature> points;  // training points, retained
    Eigen::VectorXd beta;             // dual alpha - alpha*, each in [-C, C]
    double bias = 0.0;
    double C = 1.0;
    double epsilon = 0.1;
    TwoViewKernel kernel;
    double dual_objective = 0.0;  // 1/2 l'Ql + p'l at termination
    double kkt_residual = 0.0;    // max violating-pair gap at termination
};

/// Solves the epsilon-SVR dual by sequential pairwise optimization
/// (maximal-violating-pair selection, ties broken by lowest index) to KKT
/// tolerance `tol`. Fully deterministic.
SvrModel svr_train(const std::vector<PairFeature>& points,
                   const Eigen::VectorXd& targets, double C, double epsilon,
                   const TwoViewKernel& kernel, double tol = 1e-3);

/// Same solver on a precomputed Gram matrix; returns (beta, bias,
/// dual_objective, kkt_residual). Used internally and by oracle tests.
struct SvrDualSolution {
    Eigen::VectorXd beta;
    double bias;
    double dual_objective;
    double kkt_residual;
};
SvrDualSolution svr_solve_dual(const Eigen::MatrixXd& gram,
                               const Eigen::VectorXd& targets, double C,
                               double epsilon, double tol = 1e-3);

/// Raw (unclipped) SVR output.
double svr_predict_raw(const SvrModel& model, const PairFeature& x);

/// Pairwise change score c(t, t~): raw output clipped to [-1, 1].
double svr_predict(const SvrModel& model, const PairFeature& x);

/// +1 if score > T, -1 if score < -T, else 0. Boundary resolves to 0.
int classify_pair(double score, double threshold);

/// Deterministically subsamples indices of no-change pairs so the 0 class
/// holds at most `ratio` times the larger signed class. `categories` holds
/// the discrete pair class (+1/-1/0) per sample; returns kept indices in
/// ascending order.
std::vector<std::size_t> balance_zero_class(const std::vector<int>& categories,
                                            double ratio, std::uint64_t seed);

} // namespace relau
