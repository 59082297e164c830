#include "relau/fusion.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace relau {

namespace {

void canonicalize_sign(Eigen::Ref<Eigen::VectorXd> v) {
    Eigen::Index best = 0;
    double best_abs = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double a = std::abs(v[i]);
        if (a > best_abs) { best_abs = a; best = i; }
    }
    if (v[best] < 0.0) v = -v;
}

Eigen::MatrixXd center_gram(const Eigen::MatrixXd& k, Eigen::VectorXd& row_mean,
                            double& total_mean) {
    row_mean = k.rowwise().mean();
    total_mean = row_mean.mean();
    Eigen::MatrixXd out = k;
    out.colwise() -= row_mean;
    out.rowwise() -= row_mean.transpose();
    out.array() += total_mean;
    return out;
}

} // namespace

double rbf_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                  double gamma) {
    if (x.size() != y.size())
        throw ValidationError("rbf_kernel: vector length mismatch");
    if (gamma <= 0.0) throw ValidationError("rbf_kernel: gamma must be positive");
    return std::exp(-gamma * (x - y).squaredNorm());
}

Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                         double gamma) {
    const Eigen::VectorXd a_sq = a.rowwise().squaredNorm();
    const Eigen::VectorXd b_sq = b.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = a_sq.replicate(1, b.rows()) +
                         b_sq.transpose().replicate(a.rows(), 1) -
                         2.0 * (a * b.transpose());
    return (-gamma * d2.cwiseMax(0.0)).array().exp();
}

KccaModel kcca_fit(const Eigen::MatrixXd& view1, const Eigen::MatrixXd& view2,
                   double gamma1, double gamma2, double kappa, int components) {
    if (view1.rows() != view2.rows())
        throw ValidationError("kcca_fit: views must have equal row counts");
    const int n = static_cast<int>(view1.rows());
    if (components < 1 || components > n)
        throw ValidationError("kcca_fit: components must be in [1, n]");
    if (kappa <= 0.0)
        throw NumericError(
            "kcca_fit: singular system at kappa = 0; use kappa > 0");
    if (kappa > 1.0) throw ValidationError("kcca_fit: kappa must be in (0, 1]");

    KccaModel model;
    model.view1 = view1;
    model.view2 = view2;
    model.gamma1 = gamma1;
    model.gamma2 = gamma2;
    model.kappa = kappa;
    model.components = components;

    const Eigen::MatrixXd k1_raw = rbf_gram(view1, view1, gamma1);
    const Eigen::MatrixXd k2_raw = rbf_gram(view2, view2, gamma2);
    const Eigen::MatrixXd k1 =
        center_gram(k1_raw, model.row_mean1, model.total_mean1);
    const Eigen::MatrixXd k2 =
        center_gram(k2_raw, model.row_mean2, model.total_mean2);

    // Per-view constraint blocks B_i = (1-kappa) K_i^2 + kappa K_i, handled
    // through the eigenbasis of K_i so the pseudo-inverse powers are stable.
    auto constraint_powers = [kappa](const Eigen::MatrixXd& k) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k);
        if (eig.info() != Eigen::Success)
            throw NumericError("kcca_fit: kernel eigendecomposition failed");
        const Eigen::VectorXd& s = eig.eigenvalues();
        const double cutoff =
            1e-10 * std::max(std::abs(s.minCoeff()), std::abs(s.maxCoeff()));
        Eigen::VectorXd b_inv_sqrt = Eigen::VectorXd::Zero(s.size());
        Eigen::VectorXd b_inv = Eigen::VectorXd::Zero(s.size());
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            if (s[i] <= cutoff) continue;
            const double b = (1.0 - kappa) * s[i] * s[i] + kappa * s[i];
            b_inv_sqrt[i] = 1.0 / std::sqrt(b);
            b_inv[i] = 1.0 / b;
        }
        const Eigen::MatrixXd& u = eig.eigenvectors();
        return std::make_pair(
            Eigen::MatrixXd(u * b_inv_sqrt.asDiagonal() * u.transpose()),
            Eigen::MatrixXd(u * b_inv.asDiagonal() * u.transpose()));
    };
    const auto [b1_inv_sqrt, b1_inv] = constraint_powers(k1);
    const auto [b2_inv_sqrt, b2_inv] = constraint_powers(k2);

    // Symmetric reduced problem: eigenvalues are squared correlations.
    const Eigen::MatrixXd cross = k1 * k2;
    const Eigen::MatrixXd m =
        b1_inv_sqrt * cross * b2_inv * cross.transpose() * b1_inv_sqrt;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
        0.5 * (m + m.transpose()));
    if (eig.info() != Eigen::Success)
        throw NumericError("kcca_fit: reduced eigendecomposition failed");

    model.alpha1.resize(n, components);
    model.alpha2.resize(n, components);
    model.correlations.resize(components);
    for (int j = 0; j < components; ++j) {
        const Eigen::Index src = static_cast<Eigen::Index>(n - 1 - j);
        double rho_sq = eig.eigenvalues()[src];
        if (rho_sq < 0.0) rho_sq = 0.0;
        double rho = std::sqrt(rho_sq);
        if (rho > 1.0) rho = 1.0;
        model.correlations[j] = rho;

        Eigen::VectorXd u = eig.eigenvectors().col(src);
        canonicalize_sign(u);
        model.alpha1.col(j) = b1_inv_sqrt * u;
        if (rho > 1e-12)
            model.alpha2.col(j) =
                b2_inv * cross.transpose() * model.alpha1.col(j) / rho;
        else
            model.alpha2.col(j).setZero();
    }

    // Variance-normalize by the training projection statistics.
    auto projection_std = [n](const Eigen::MatrixXd& k,
                              const Eigen::MatrixXd& alpha) {
        const Eigen::MatrixXd z = k * alpha;
        Eigen::VectorXd std_dev(alpha.cols());
        for (Eigen::Index j = 0; j < alpha.cols(); ++j) {
            const double mean = z.col(j).mean();
            const double var =
                (z.col(j).array() - mean).square().sum() / static_cast<double>(n);
            std_dev[j] = var > 1e-24 ? std::sqrt(var) : 1.0;
        }
        return std_dev;
    };
    model.proj_std1 = projection_std(k1, model.alpha1);
    model.proj_std2 = projection_std(k2, model.alpha2);

    return model;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> kcca_project_batch(
    const KccaModel& model, const Eigen::MatrixXd& x1,
    const Eigen::MatrixXd& x2) {
    if (x1.cols() != model.view1.cols() || x2.cols() != model.view2.cols())
        throw ValidationError("kcca_project: vector length mismatch");
    if (x1.rows() != x2.rows())
        throw ValidationError("kcca_project: row count mismatch between views");

    auto project_view = [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& train,
                           double gamma, const Eigen::VectorXd& row_mean,
                           double total_mean, const Eigen::MatrixXd& alpha,
                           const Eigen::VectorXd& proj_std) {
        Eigen::MatrixXd k = rbf_gram(x, train, gamma);  // m x n
        const Eigen::VectorXd k_mean = k.rowwise().mean();
        k.rowwise() -= row_mean.transpose();
        k.colwise() -= k_mean;
        k.array() += total_mean;
        Eigen::MatrixXd z = k * alpha;
        z.array().rowwise() /= proj_std.transpose().array();
        return z;
    };

    return {project_view(x1, model.view1, model.gamma1, model.row_mean1,
                         model.total_mean1, model.alpha1, model.proj_std1),
            project_view(x2, model.view2, model.gamma2, model.row_mean2,
                         model.total_mean2, model.alpha2, model.proj_std2)};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> kcca_project(
    const KccaModel& model, const Eigen::VectorXd& x1,
    const Eigen::VectorXd& x2) {
    auto [z1, z2] = kcca_project_batch(model, x1.transpose(), x2.transpose());
    return {z1.row(0), z2.row(0)};
}

} // namespace relau
