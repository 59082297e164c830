#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "relau/seqmodel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace relau {

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("write failed: " + path.string());
}

double parse_double(const std::string& tok, const fs::path& where) {
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
        throw FormatError("bad number '" + tok + "' in " + where.string());
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string tok;
    std::istringstream ss(line);
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    return out;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        rows.push_back(split_csv_line(line));
    }
    return rows;
}

} // namespace

Patch load_pgm(const std::string& path, const std::string& patch_id) {
    std::string data = read_file(path);
    std::istringstream in(data);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw FormatError("not a binary PGM: " + path);
    // Skip comment lines between header tokens.
    auto next_token = [&in, &path]() {
        std::string tok;
        while (in >> tok) {
            if (tok[0] == '#') {
                std::string rest;
                std::getline(in, rest);
                continue;
            }
            return tok;
        }
        throw FormatError("truncated PGM header: " + path);
    };
    int width = std::stoi(next_token());
    int height = std::stoi(next_token());
    int maxval = std::stoi(next_token());
    if (width <= 0 || height <= 0 || maxval != 255)
        throw FormatError("unsupported PGM header in " + path);
    in.get();  // single whitespace after maxval
    Patch patch;
    patch.patch_id = patch_id;
    patch.width = width;
    patch.height = height;
    patch.pixels.resize(static_cast<std::size_t>(width) * height);
    in.read(reinterpret_cast<char*>(patch.pixels.data()),
            static_cast<std::streamsize>(patch.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(patch.pixels.size()))
        throw FormatError("truncated PGM pixel data: " + path);
    return patch;
}

void save_pgm(const Patch& patch, const std::string& path) {
    std::ostringstream out;
    out << "P5\n" << patch.width << " " << patch.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(patch.pixels.data()),
              static_cast<std::streamsize>(patch.pixels.size()));
    write_file(path, out.str());
}

SequenceBundle load_bundle(const std::string& path) {
    const fs::path dir(path);
    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path))
        throw IoError("missing manifest: " + manifest_path.string());

    json manifest;
    try {
        manifest = json::parse(read_file(manifest_path));
    } catch (const json::exception& e) {
        throw FormatError("bad manifest " + manifest_path.string() + ": " + e.what());
    }

    SequenceBundle bundle;
    try {
        bundle.subject_id = manifest.at("subject_id").get<std::string>();
        bundle.sequence_id = manifest.at("sequence_id").get<std::string>();
        const auto& intr = manifest.at("intrinsics");
        bundle.intrinsics.f = intr.at("f").get<double>();
        bundle.intrinsics.cx = intr.at("cx").get<double>();
        bundle.intrinsics.cy = intr.at("cy").get<double>();
    } catch (const json::exception& e) {
        throw FormatError("manifest field error: " + std::string(e.what()));
    }

    std::vector<int> frame_indices =
        manifest.at("frames").get<std::vector<int>>();
    std::vector<std::string> patch_ids;
    if (manifest.contains("patch_ids"))
        patch_ids = manifest.at("patch_ids").get<std::vector<std::string>>();

    for (int t : frame_indices) {
        Frame frame;
        frame.index = t;

        const fs::path lm_path = dir / "landmarks" / (std::to_string(t) + ".csv");
        for (const auto& row : read_csv(lm_path)) {
            if (row.size() != 3)
                throw FormatError("expected 3 columns in " + lm_path.string());
            frame.landmarks.points.emplace_back(parse_double(row[0], lm_path),
                                                parse_double(row[1], lm_path),
                                                parse_double(row[2], lm_path));
        }

        const fs::path pose_path = dir / "pose" / (std::to_string(t) + ".csv");
        auto pose_rows = read_csv(pose_path);
        if (pose_rows.size() != 1 || pose_rows[0].size() != 6)
            throw FormatError("expected one 6-column row in " + pose_path.string());
        for (int i = 0; i < 3; ++i)
            frame.pose.translation[i] = parse_double(pose_rows[0][static_cast<std::size_t>(i)], pose_path);
        for (int i = 0; i < 3; ++i)
            frame.pose.rotation[i] = parse_double(pose_rows[0][static_cast<std::size_t>(i + 3)], pose_path);

        for (const auto& pid : patch_ids) {
            const fs::path pgm =
                dir / "patches" / (std::to_string(t) + "_" + pid + ".pgm");
            frame.patches[pid] = load_pgm(pgm.string(), pid);
        }
        bundle.frames.push_back(std::move(frame));
    }

    const fs::path ann_path = dir / "annotations.csv";
    if (fs::exists(ann_path)) {
        std::map<int, std::map<int, IntensityEntry>> per_au;
        for (const auto& row : read_csv(ann_path)) {
            if (row.size() >= 1 && row[0] == "frame") continue;  // header
            if (row.size() != 3)
                throw FormatError("expected 3 columns in " + ann_path.string());
            int frame_idx = static_cast<int>(parse_double(row[0], ann_path));
            int au_id = static_cast<int>(parse_double(row[1], ann_path));
            auto [it, inserted] =
                per_au[au_id].emplace(frame_idx, parse_intensity(row[2]));
            (void)it;
            if (!inserted)
                throw FormatError("duplicate annotation for frame " +
                                  std::to_string(frame_idx) + ", AU " +
                                  std::to_string(au_id));
        }
        for (const auto& [au_id, entries] : per_au) {
            AUAnnotation ann;
            ann.au_id = au_id;
            for (const auto& frame : bundle.frames) {
                auto it = entries.find(frame.index);
                if (it == entries.end())
                    throw ValidationError("annotation length mismatch for AU " +
                                          std::to_string(au_id) +
                                          ": missing frame " +
                                          std::to_string(frame.index));
                ann.levels.push_back(it->second);
            }
            if (entries.size() != bundle.frames.size())
                throw ValidationError("annotation length mismatch for AU " +
                                      std::to_string(au_id) + ": " +
                                      std::to_string(entries.size()) +
                                      " values for " +
                                      std::to_string(bundle.frames.size()) +
                                      " frames");
            bundle.annotations.push_back(std::move(ann));
        }
    }

    validate_bundle(bundle);
    return bundle;
}

void save_bundle(const SequenceBundle& bundle, const std::string& path) {
    validate_bundle(bundle);
    const fs::path dir(path);
    fs::create_directories(dir / "landmarks");
    fs::create_directories(dir / "pose");
    fs::create_directories(dir / "patches");

    std::vector<std::string> patch_ids;
    for (const auto& [pid, patch] : bundle.frames.front().patches) {
        (void)patch;
        patch_ids.push_back(pid);
    }

    json manifest;
    manifest["subject_id"] = bundle.subject_id;
    manifest["sequence_id"] = bundle.sequence_id;
    manifest["intrinsics"] = {{"f", bundle.intrinsics.f},
                              {"cx", bundle.intrinsics.cx},
                              {"cy", bundle.intrinsics.cy}};
    std::vector<int> frame_indices;
    for (const auto& f : bundle.frames) frame_indices.push_back(f.index);
    manifest["frames"] = frame_indices;
    manifest["patch_ids"] = patch_ids;
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");

    for (const auto& frame : bundle.frames) {
        std::ostringstream lm;
        for (const auto& p : frame.landmarks.points)
            lm << format_g9(p.x()) << "," << format_g9(p.y()) << ","
               << format_g9(p.z()) << "\n";
        write_file(dir / "landmarks" / (std::to_string(frame.index) + ".csv"),
                   lm.str());

        std::ostringstream pose;
        pose << format_g9(frame.pose.translation.x()) << ","
             << format_g9(frame.pose.translation.y()) << ","
             << format_g9(frame.pose.translation.z()) << ","
             << format_g9(frame.pose.rotation.x()) << ","
             << format_g9(frame.pose.rotation.y()) << ","
             << format_g9(frame.pose.rotation.z()) << "\n";
        write_file(dir / "pose" / (std::to_string(frame.index) + ".csv"),
                   pose.str());

        for (const auto& [pid, patch] : frame.patches)
            save_pgm(patch, (dir / "patches" /
                             (std::to_string(frame.index) + "_" + pid + ".pgm"))
                                .string());
    }

    std::ostringstream ann;
    ann << "frame,au_id,level\n";
    for (const auto& a : bundle.annotations)
        for (std::size_t i = 0; i < a.levels.size(); ++i)
            ann << bundle.frames[i].index << "," << a.au_id << ","
                << format_intensity(a.levels[i]) << "\n";
    write_file(dir / "annotations.csv", ann.str());
}

} // namespace relau
