#pragma once

#include <vector>

#include "relau/appearance.hpp"
#include "relau/geometry.hpp"

namespace relau {

/// AUs with built-in distance-pair and patch configurations (mirrors the
/// CSV files under config/).
const std::vector<int>& default_au_ids();

/// Built-in distance pairs for one AU over the 66-point landmark scheme.
/// Same content as config/geometry/<au_id>.csv.
DistancePairConfig default_distance_pairs(int au_id);

/// Built-in patch specs (two 32x32 patches per AU). Same content as
/// config/patches/<au_id>.csv.
std::vector<PatchSpec> default_patch_specs(int au_id);

/// Canonical 66-point neutral face template used by the synthetic
/// generator, centered roughly 500 units in front of the camera.
std::vector<Eigen::Vector3d> canonical_face66();

/// Additive landmark displacement field (unit intensity) for one AU.
std::vector<Eigen::Vector3d> au_displacement_field(int au_id);

} // namespace relau
