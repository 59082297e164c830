#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "relau/appearance.hpp"
#include "relau/geometry.hpp"
#include "relau/seqmodel.hpp"

namespace relau {

/// Per-frame feature matrices for one (sequence, AU): row t holds g_t
/// (configured landmark distances on the normalized shape) and a_t (the
/// LGBP histogram stack).
struct SequenceFeatures {
    std::string subject_id;
    std::string sequence_id;
    int au_id = 0;
    Eigen::MatrixXd geometric;   // n_frames x n_pairs
    Eigen::MatrixXd appearance;  // n_frames x (30 * n_patches * 256)
};

/// Hash over everything that influences extracted features: distance
/// pairs, patch specs, and filter-bank parameters. Stored with each
/// feature file; a mismatch on load is a hard conflict, never a silent
/// recompute.
std::uint64_t feature_config_hash(const DistancePairConfig& pairs,
                                  const std::vector<PatchSpec>& specs,
                                  const GaborBank& bank);

/// Extracts per-frame features for one bundle, parallel over frames.
/// Output is independent of the worker count.
SequenceFeatures extract_sequence(const SequenceBundle& bundle,
                                  const DistancePairConfig& pairs,
                                  const std::vector<PatchSpec>& specs,
                                  const GaborBank& bank, unsigned workers = 0);

/// Binary feature file: one-line JSON header (ids, dims, config hash,
/// payload checksum) followed by the raw little-endian doubles.
void save_features(const SequenceFeatures& features,
                   std::uint64_t config_hash, const std::string& path);

/// Loads a feature file. Throws ConfigError when the stored config hash
/// differs from `expected_hash`, FormatError on header/checksum damage.
SequenceFeatures load_features(const std::string& path,
                               std::uint64_t expected_hash);

/// Idempotent extraction: returns the stored features when a valid file
/// with the right config hash exists, otherwise (missing or corrupt file)
/// recomputes and rewrites. A present file with a different config hash is
/// a ConfigError; delete the store to change feature configs.
struct EnsureResult {
    SequenceFeatures features;
    bool recomputed = false;
};
EnsureResult ensure_features(const SequenceBundle& bundle,
                             const DistancePairConfig& pairs,
                             const std::vector<PatchSpec>& specs,
                             const GaborBank& bank, const std::string& dir,
                             unsigned workers = 0);

/// Store filename for one (sequence, AU).
std::string feature_file_name(const std::string& sequence_id, int au_id);

} // namespace relau
