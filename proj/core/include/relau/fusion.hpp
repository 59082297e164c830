#pragma once

#include <Eigen/Core>
#include <utility>

#include "relau/errors.hpp"

namespace relau {

/// exp(-gamma * ||x - y||^2).
double rbf_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                  double gamma);

/// Gram matrix of the RBF kernel between row sets a and b.
Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                         double gamma);

/// Regularized kernel CCA over two views. Immutable after fit; project is
/// pure and concurrent-safe.
struct KccaModel {
    Eigen::MatrixXd view1, view2;     // training rows, retained
    double gamma1 = 1.0, gamma2 = 1.0;
    double kappa = 1e-3;
    int components = 20;

    Eigen::MatrixXd alpha1, alpha2;   // n x d' dual directions
    Eigen::VectorXd correlations;     // d', descending, clamped to [0, 1]

    // Centering statistics of the raw training kernels.
    Eigen::VectorXd row_mean1, row_mean2;
    double total_mean1 = 0.0, total_mean2 = 0.0;

    // Per-dimension std of the training projections (variance normalization).
    Eigen::VectorXd proj_std1, proj_std2;
};

/// Solves the regularized KCCA generalized eigenproblem on centered RBF
/// kernel matrices; regularization (1-kappa)K^2 + kappa*K per view.
/// Throws NumericError when kappa <= 0 (singular system).
KccaModel kcca_fit(const Eigen::MatrixXd& view1, const Eigen::MatrixXd& view2,
                   double gamma1, double gamma2, double kappa, int components);

/// Projects one sample (x1, x2) onto the canonical directions; outputs are
/// variance-normalized by training statistics.
std::pair<Eigen::VectorXd, Eigen::VectorXd> kcca_project(
    const KccaModel& model, const Eigen::VectorXd& x1,
    const Eigen::VectorXd& x2);

/// Batch projection, one row per sample; identical to kcca_project per row.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> kcca_project_batch(
    const KccaModel& model, const Eigen::MatrixXd& x1,
    const Eigen::MatrixXd& x2);

} // namespace relau
