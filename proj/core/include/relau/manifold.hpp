#pragma once

#include <Eigen/Core>

#include "relau/errors.hpp"

namespace relau {

/// Fitted Isomap reduction: k-NN graph geodesics + classical MDS, with a
/// Nystrom-style out-of-sample extension. Immutable after fit; safe for
/// concurrent transform calls.
struct IsomapModel {
    Eigen::MatrixXd training_points;  // n x D, retained for out-of-sample
    int k = 8;                        // final (possibly doubled) neighborhood
    int dim = 40;                     // target dimension d
    Eigen::MatrixXd geodesic;         // n x n shortest-path distances
    Eigen::MatrixXd embedding;        // n x d
    Eigen::MatrixXd eigenvectors;     // n x d, orthonormal columns
    Eigen::VectorXd eigenvalues;      // d, descending, clamped >= 0
    Eigen::VectorXd mean_sq_geodesic; // column means of squared geodesics
};

/// Fits Isomap: symmetric k-NN graph under Euclidean distance, all-pairs
/// shortest paths, classical MDS on -1/2 * J * D^2 * J. If the graph is
/// disconnected, k doubles until connected (capped at n-1); cap failure is
/// a NumericError. Throws ValidationError when n <= d.
IsomapModel isomap_fit(const Eigen::MatrixXd& points, int d, int k,
                       unsigned workers = 0);

/// Out-of-sample embedding: geodesic distances estimated through the
/// point's k nearest training neighbors, then projected onto the fitted
/// eigenbasis. Exact for training points.
Eigen::VectorXd isomap_transform(const IsomapModel& model,
                                 const Eigen::VectorXd& point);

/// Batch version of isomap_transform (one row per point); identical output.
Eigen::MatrixXd isomap_transform_batch(const IsomapModel& model,
                                       const Eigen::MatrixXd& points);

} // namespace relau
