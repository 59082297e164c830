#include "relau/geometry.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace relau {

Eigen::Matrix3d rot_x(double a) {
    Eigen::Matrix3d m;
    m << 1, 0, 0,
         0, std::cos(a), -std::sin(a),
         0, std::sin(a), std::cos(a);
    return m;
}

Eigen::Matrix3d rot_y(double a) {
    Eigen::Matrix3d m;
    m << std::cos(a), 0, std::sin(a),
         0, 1, 0,
         -std::sin(a), 0, std::cos(a);
    return m;
}

Eigen::Matrix3d rot_z(double a) {
    Eigen::Matrix3d m;
    m << std::cos(a), -std::sin(a), 0,
         std::sin(a), std::cos(a), 0,
         0, 0, 1;
    return m;
}

NormalizedShape normalize_shape(const LandmarkFrame& landmarks,
                                const PoseVector& pose) {
    // Row-vector form  (p - r) Rz(-wz) Ry(-wy) Rx(-wx)  equals the column
    // form  Rx(wx) Ry(wy) Rz(wz) (p - r).
    const Eigen::Matrix3d m = rot_x(pose.rotation.x()) *
                              rot_y(pose.rotation.y()) *
                              rot_z(pose.rotation.z());
    NormalizedShape out;
    out.points.reserve(landmarks.points.size());
    for (const auto& p : landmarks.points)
        out.points.emplace_back(m * (p - pose.translation));
    return out;
}

LandmarkFrame apply_rigid_motion(const NormalizedShape& shape,
                                 const PoseVector& pose) {
    const Eigen::Matrix3d m = rot_z(-pose.rotation.z()) *
                              rot_y(-pose.rotation.y()) *
                              rot_x(-pose.rotation.x());
    LandmarkFrame out;
    out.points.reserve(shape.points.size());
    for (const auto& p : shape.points)
        out.points.emplace_back(m * p + pose.translation);
    return out;
}

Eigen::Vector2d project(const Eigen::Vector3d& point,
                        const CameraIntrinsics& intrinsics) {
    if (point.z() <= 0.0)
        throw ValidationError("cannot project point behind the camera (Z <= 0)");
    return {intrinsics.f * point.x() / point.z() + intrinsics.cx,
            intrinsics.f * point.y() / point.z() + intrinsics.cy};
}

GeometricFeatures geometric_features(const NormalizedShape& shape,
                                     const DistancePairConfig& config) {
    GeometricFeatures values(static_cast<Eigen::Index>(config.pairs.size()));
    const int n = static_cast<int>(shape.points.size());
    for (std::size_t k = 0; k < config.pairs.size(); ++k) {
        auto [i, j] = config.pairs[k];
        if (i < 0 || j < 0 || i >= n || j >= n)
            throw ValidationError("distance pair index out of range: (" +
                                  std::to_string(i) + "," + std::to_string(j) +
                                  ") for " + std::to_string(n) + " points");
        values[static_cast<Eigen::Index>(k)] =
            (shape.points[static_cast<std::size_t>(i)] -
             shape.points[static_cast<std::size_t>(j)])
                .norm();
    }
    return values;
}

Eigen::VectorXd pair_geometric(const GeometricFeatures& first,
                               const GeometricFeatures& second) {
    if (first.size() != second.size())
        throw ValidationError("geometric feature length mismatch");
    Eigen::VectorXd out(first.size() + second.size());
    out << first, second;
    return out;
}

DistancePairConfig load_distance_pairs(const std::string& path, int au_id) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open distance-pair config: " + path);
    DistancePairConfig config;
    config.au_id = au_id;
    std::set<std::pair<int, int>> seen;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ','))
            throw FormatError("expected 'i,j' rows in " + path);
        int i = std::stoi(a), j = std::stoi(b);
        if (i == j)
            throw FormatError("degenerate pair (" + a + "," + b + ") in " + path);
        if (!seen.insert({i, j}).second)
            throw FormatError("duplicate pair (" + a + "," + b + ") in " + path);
        config.pairs.emplace_back(i, j);
    }
    return config;
}

} // namespace relau
