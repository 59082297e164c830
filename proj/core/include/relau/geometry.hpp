#pragma once

#include <Eigen/Core>
#include <vector>

#include "relau/seqmodel.hpp"

namespace relau {

/// Landmarks after rigid head motion has been removed.
struct NormalizedShape {
    std::vector<Eigen::Vector3d> points;
};

/// Landmark index pairs whose Euclidean distances form the geometric
/// feature vector for one AU.
struct DistancePairConfig {
    int au_id = 0;
    std::vector<std::pair<int, int>> pairs;
};

using GeometricFeatures = Eigen::VectorXd;

/// Right-handed rotation matrices about the camera x/y/z axes
/// (column-vector convention).
Eigen::Matrix3d rot_x(double angle);
Eigen::Matrix3d rot_y(double angle);
Eigen::Matrix3d rot_z(double angle);

/// Removes rigid head motion: each point becomes
/// (p - r) * Rz(-wz) * Ry(-wy) * Rx(-wx), row-vector times matrices in
/// exactly that order.
NormalizedShape normalize_shape(const LandmarkFrame& landmarks,
                                const PoseVector& pose);

/// Applies the inverse of normalize_shape: rigid-transforms a shape so
/// that normalizing it with `pose` recovers the input. Used by the
/// synthetic generator and invariance tests.
LandmarkFrame apply_rigid_motion(const NormalizedShape& shape,
                                 const PoseVector& pose);

/// Full perspective projection: x = f*X/Z + cx, y = f*Y/Z + cy.
/// Throws ValidationError when Z <= 0 (behind the camera).
Eigen::Vector2d project(const Eigen::Vector3d& point,
                        const CameraIntrinsics& intrinsics);

/// One Euclidean distance per configured pair, in config order.
GeometricFeatures geometric_features(const NormalizedShape& shape,
                                     const DistancePairConfig& config);

/// Pair feature g = (g_t, g_t~), first frame first.
Eigen::VectorXd pair_geometric(const GeometricFeatures& first,
                               const GeometricFeatures& second);

/// Reads `config/geometry/<au_id>.csv` rows (i,j). Validates i != j and
/// no duplicate pairs.
DistancePairConfig load_distance_pairs(const std::string& path, int au_id);

} // namespace relau
