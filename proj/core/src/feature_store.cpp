#include "relau/feature_store.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "relau/hash.hpp"
#include "relau/parallel.hpp"

namespace relau {

namespace {

constexpr const char* kMagic = "relau-features";
constexpr int kVersion = 1;

void hash_double(std::uint64_t& h, double v) {
    h = fnv1a64(&v, sizeof(v), h);
}

void hash_int(std::uint64_t& h, std::int64_t v) {
    h = fnv1a64(&v, sizeof(v), h);
}

void hash_string(std::uint64_t& h, const std::string& s) {
    hash_int(h, static_cast<std::int64_t>(s.size()));
    h = fnv1a64(s.data(), s.size(), h);
}

} // namespace

std::uint64_t feature_config_hash(const DistancePairConfig& pairs,
                                  const std::vector<PatchSpec>& specs,
                                  const GaborBank& bank) {
    std::uint64_t h = fnv1a64(kMagic, 14);
    hash_int(h, pairs.au_id);
    hash_int(h, static_cast<std::int64_t>(pairs.pairs.size()));
    for (const auto& [i, j] : pairs.pairs) {
        hash_int(h, i);
        hash_int(h, j);
    }
    hash_int(h, static_cast<std::int64_t>(specs.size()));
    for (const auto& spec : specs) {
        hash_string(h, spec.patch_id);
        for (int idx : spec.quad) hash_int(h, idx);
        hash_int(h, spec.width);
        hash_int(h, spec.height);
    }
    hash_int(h, static_cast<std::int64_t>(bank.scales().size()));
    for (double s : bank.scales()) hash_double(h, s);
    hash_int(h, static_cast<std::int64_t>(bank.orientations().size()));
    for (double o : bank.orientations()) hash_double(h, o);
    hash_double(h, bank.sigma());
    return h;
}

SequenceFeatures extract_sequence(const SequenceBundle& bundle,
                                  const DistancePairConfig& pairs,
                                  const std::vector<PatchSpec>& specs,
                                  const GaborBank& bank, unsigned workers) {
    validate_bundle(bundle);
    if (bundle.frames.empty())
        throw ValidationError("extract_sequence: empty bundle");
    const std::size_t n = bundle.frames.size();
    const Eigen::Index geo_dim = static_cast<Eigen::Index>(pairs.pairs.size());
    const Eigen::Index app_dim =
        static_cast<Eigen::Index>(specs.size()) * bank.filter_count() * kLbpBins;

    SequenceFeatures out;
    out.subject_id = bundle.subject_id;
    out.sequence_id = bundle.sequence_id;
    out.au_id = pairs.au_id;
    out.geometric.resize(static_cast<Eigen::Index>(n), geo_dim);
    out.appearance.resize(static_cast<Eigen::Index>(n), app_dim);

    // Warm the filter-plan cache once so worker threads only read it.
    for (const auto& spec : specs)
        bank.plan_for(spec.height, spec.width);

    parallel_for(n, workers, [&](std::size_t t) {
        const Frame& frame = bundle.frames[t];
        const auto shape = normalize_shape(frame.landmarks, frame.pose);
        out.geometric.row(static_cast<Eigen::Index>(t)) =
            geometric_features(shape, pairs).transpose();
        out.appearance.row(static_cast<Eigen::Index>(t)) =
            appearance_vector(frame, specs, bank).transpose();
    });
    return out;
}

void save_features(const SequenceFeatures& features,
                   std::uint64_t config_hash, const std::string& path) {
    const Eigen::Index n = features.geometric.rows();
    if (features.appearance.rows() != n)
        throw ValidationError("save_features: row count mismatch");

    // Payload: per frame, geometric row then appearance row.
    std::string payload;
    payload.reserve(static_cast<std::size_t>(
        n * (features.geometric.cols() + features.appearance.cols())) *
        sizeof(double));
    auto append_row = [&payload](const Eigen::MatrixXd& m, Eigen::Index r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const double v = m(r, c);
            payload.append(reinterpret_cast<const char*>(&v), sizeof(v));
        }
    };
    for (Eigen::Index r = 0; r < n; ++r) {
        append_row(features.geometric, r);
        append_row(features.appearance, r);
    }

    nlohmann::json header;
    header["magic"] = kMagic;
    header["version"] = kVersion;
    header["subject_id"] = features.subject_id;
    header["sequence_id"] = features.sequence_id;
    header["au_id"] = features.au_id;
    header["frames"] = n;
    header["geo_dim"] = features.geometric.cols();
    header["app_dim"] = features.appearance.cols();
    header["config_hash"] = hash_hex(config_hash);
    header["checksum"] = hash_hex(fnv1a64(payload.data(), payload.size()));

    std::ofstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot write feature file: " + path);
    file << header.dump() << "\n";
    file.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!file) throw IoError("short write on feature file: " + path);
}

SequenceFeatures load_features(const std::string& path,
                               std::uint64_t expected_hash) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open feature file: " + path);
    std::string header_line;
    if (!std::getline(file, header_line))
        throw FormatError("feature file has no header: " + path);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_line);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad feature header in " + path + ": " + e.what());
    }
    if (header.value("magic", "") != kMagic ||
        header.value("version", -1) != kVersion)
        throw FormatError("not a feature file (or wrong version): " + path);
    if (header.value("config_hash", "") != hash_hex(expected_hash))
        throw ConfigError("feature file " + path +
                          " was extracted under a different config "
                          "(stored hash " + header.value("config_hash", "?") +
                          ", expected " + hash_hex(expected_hash) + ")");

    SequenceFeatures out;
    out.subject_id = header.value("subject_id", "");
    out.sequence_id = header.value("sequence_id", "");
    out.au_id = header.value("au_id", 0);
    const Eigen::Index n = header.value("frames", Eigen::Index{0});
    const Eigen::Index geo_dim = header.value("geo_dim", Eigen::Index{0});
    const Eigen::Index app_dim = header.value("app_dim", Eigen::Index{0});
    if (n < 0 || geo_dim < 0 || app_dim <= 0)
        throw FormatError("bad feature dimensions in " + path);

    const std::size_t payload_size =
        static_cast<std::size_t>(n) *
        static_cast<std::size_t>(geo_dim + app_dim) * sizeof(double);
    std::string payload(payload_size, '\0');
    file.read(payload.data(), static_cast<std::streamsize>(payload_size));
    if (static_cast<std::size_t>(file.gcount()) != payload_size ||
        file.peek() != std::ifstream::traits_type::eof())
        throw FormatError("feature payload size mismatch in " + path);
    if (hash_hex(fnv1a64(payload.data(), payload.size())) !=
        header.value("checksum", ""))
        throw FormatError("feature checksum mismatch in " + path);

    out.geometric.resize(n, geo_dim);
    out.appearance.resize(n, app_dim);
    const char* p = payload.data();
    auto read_row = [&p](Eigen::MatrixXd& m, Eigen::Index r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            double v;
            std::memcpy(&v, p, sizeof(v));
            p += sizeof(v);
            m(r, c) = v;
        }
    };
    for (Eigen::Index r = 0; r < n; ++r) {
        read_row(out.geometric, r);
        read_row(out.appearance, r);
    }
    return out;
}

std::string feature_file_name(const std::string& sequence_id, int au_id) {
    return sequence_id + "_au" + std::to_string(au_id) + ".feat";
}

EnsureResult ensure_features(const SequenceBundle& bundle,
                             const DistancePairConfig& pairs,
                             const std::vector<PatchSpec>& specs,
                             const GaborBank& bank, const std::string& dir,
                             unsigned workers) {
    namespace fs = std::filesystem;
    const std::uint64_t hash = feature_config_hash(pairs, specs, bank);
    fs::create_directories(dir);
    const std::string path =
        (fs::path(dir) / feature_file_name(bundle.sequence_id, pairs.au_id))
            .string();

    if (fs::exists(path)) {
        try {
            return {load_features(path, hash), false};
        } catch (const ConfigError&) {
            throw;  // different config: explicit conflict, never overwrite
        } catch (const Error&) {
            // truncated or corrupt entry: fall through and recompute
        }
    }
    EnsureResult result{extract_sequence(bundle, pairs, specs, bank, workers),
                        true};
    save_features(result.features, hash, path);
    return result;
}

} // namespace relau
