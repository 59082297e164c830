#include "relau/au_defaults.hpp"

#include <cmath>
#include <numbers>

namespace relau {

const std::vector<int>& default_au_ids() {
    static const std::vector<int> ids = {1, 2, 4, 6, 12, 15};
    return ids;
}

DistancePairConfig default_distance_pairs(int au_id) {
    DistancePairConfig config;
    config.au_id = au_id;
    switch (au_id) {
        case 1:  // inner brow raiser: inner brow to eye / nose bridge
            config.pairs = {{21, 39}, {22, 44}, {21, 27}, {22, 27}, {20, 38}, {23, 43}};
            break;
        case 2:  // outer brow raiser
            config.pairs = {{17, 36}, {26, 45}, {18, 37}, {25, 44}, {17, 0}, {26, 16}};
            break;
        case 4:  // brow lowerer: brow-to-eye and inter-brow gaps
            config.pairs = {{21, 22}, {21, 39}, {22, 44}, {19, 37}, {24, 44}, {20, 27}};
            break;
        case 6:  // cheek raiser: lid-to-mouth-corner compression
            config.pairs = {{40, 48}, {47, 54}, {41, 48}, {46, 54}, {36, 48}, {45, 54}};
            break;
        case 12:  // lip corner puller
            config.pairs = {{48, 54}, {48, 33}, {54, 33}, {48, 36}, {54, 45}, {51, 57}};
            break;
        case 15:  // lip corner depressor
            config.pairs = {{48, 54}, {48, 31}, {54, 35}, {48, 36}, {54, 45}, {48, 8}};
            break;
        default:
            throw ValidationError("no built-in distance pairs for AU " +
                                  std::to_string(au_id));
    }
    return config;
}

std::vector<PatchSpec> default_patch_specs(int au_id) {
    auto make = [au_id](const char* suffix, std::array<int, 4> quad) {
        PatchSpec spec;
        spec.patch_id = "au" + std::to_string(au_id) + "_" + suffix;
        spec.au_id = au_id;
        spec.quad = quad;
        spec.width = 32;
        spec.height = 32;
        return spec;
    };
    switch (au_id) {
        case 1: return {make("p0", {19, 24, 44, 39}), make("p1", {20, 23, 30, 27})};
        case 2: return {make("p0", {17, 19, 37, 36}), make("p1", {24, 26, 45, 44})};
        case 4: return {make("p0", {21, 22, 44, 39}), make("p1", {19, 24, 28, 27})};
        case 6: return {make("p0", {36, 41, 48, 3}), make("p1", {42, 47, 54, 13})};
        case 12: return {make("p0", {48, 31, 51, 60}), make("p1", {54, 35, 51, 63})};
        case 15: return {make("p0", {48, 59, 57, 6}), make("p1", {54, 55, 57, 10})};
        default:
            throw ValidationError("no built-in patch specs for AU " +
                                  std::to_string(au_id));
    }
}

std::vector<Eigen::Vector3d> canonical_face66() {
    using std::numbers::pi;
    std::vector<Eigen::Vector3d> pts;
    pts.reserve(66);
    const double z0 = 500.0;  // face plane distance from camera

    // 0-16 jaw arc (y grows downward).
    for (int i = 0; i <= 16; ++i) {
        const double t = i / 16.0;
        pts.emplace_back(-75.0 * std::cos(pi * t), 10.0 + 55.0 * std::sin(pi * t),
                         z0 - 8.0 * std::sin(pi * t));
    }
    // 17-21 right brow, 22-26 left brow.
    for (int i = 0; i < 5; ++i) {
        const double t = i / 4.0;
        pts.emplace_back(-55.0 + 40.0 * t, -35.0 - 6.0 * std::sin(pi * t), z0 - 2.0);
    }
    for (int i = 0; i < 5; ++i) {
        const double t = i / 4.0;
        pts.emplace_back(15.0 + 40.0 * t, -35.0 - 6.0 * std::sin(pi * t), z0 - 2.0);
    }
    // 27-30 nose bridge, 31-35 nose base.
    for (int i = 0; i < 4; ++i)
        pts.emplace_back(0.0, -25.0 + 10.0 * i, z0 - 10.0 - 2.0 * i);
    for (int i = 0; i < 5; ++i)
        pts.emplace_back(-12.0 + 6.0 * i, 12.0, z0 - 8.0);
    // 36-41 right eye, 42-47 left eye.
    const double ex[6] = {-12, -6, 6, 12, 6, -6};
    const double ey[6] = {0, -4, -4, 0, 4, 4};
    for (int i = 0; i < 6; ++i) pts.emplace_back(-35.0 + ex[i], -20.0 + ey[i], z0);
    for (int i = 0; i < 6; ++i) pts.emplace_back(35.0 + ex[i], -20.0 + ey[i], z0);
    // 48-59 outer mouth, 60-65 inner mouth.
    for (int i = 0; i < 12; ++i) {
        const double ang = pi + 2.0 * pi * i / 12.0;
        pts.emplace_back(25.0 * std::cos(ang), 35.0 + 10.0 * std::sin(ang), z0 - 4.0);
    }
    for (int i = 0; i < 6; ++i) {
        const double ang = pi + 2.0 * pi * i / 6.0;
        pts.emplace_back(15.0 * std::cos(ang), 35.0 + 5.0 * std::sin(ang), z0 - 4.0);
    }
    return pts;
}

std::vector<Eigen::Vector3d> au_displacement_field(int au_id) {
    std::vector<Eigen::Vector3d> field(66, Eigen::Vector3d::Zero());
    auto up = [&field](int i, double w) { field[static_cast<std::size_t>(i)].y() -= w; };
    auto down = [&field](int i, double w) { field[static_cast<std::size_t>(i)].y() += w; };
    switch (au_id) {
        case 1:  // inner brow up
            up(19, 0.3); up(20, 0.7); up(21, 1.0);
            up(22, 1.0); up(23, 0.7); up(24, 0.3);
            break;
        case 2:  // outer brow up
            up(17, 1.0); up(18, 0.6); up(25, 0.6); up(26, 1.0);
            break;
        case 4:  // brows down and inward
            for (int i = 17; i <= 26; ++i) down(i, 0.8);
            field[21].x() += 0.5;
            field[22].x() -= 0.5;
            break;
        case 6:  // lower lids up
            up(40, 0.8); up(41, 0.8); up(46, 0.8); up(47, 0.8);
            break;
        case 12:  // mouth corners out and up
            field[48] += Eigen::Vector3d(-1.2, -1.0, 0);
            field[54] += Eigen::Vector3d(1.2, -1.0, 0);
            up(49, 0.5); up(53, 0.5); up(55, 0.5); up(59, 0.5);
            break;
        case 15:  // mouth corners down
            down(48, 1.2); down(54, 1.2);
            down(49, 0.5); down(53, 0.5); down(55, 0.5); down(59, 0.5);
            break;
        default:
            throw ValidationError("no built-in displacement field for AU " +
                                  std::to_string(au_id));
    }
    return field;
}

} // namespace relau
