#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "drumcoach/demo.hpp"
#include "drumcoach/library.hpp"
#include "drumcoach/skeleton.hpp"

namespace testing_support {

using namespace drumcoach;

inline std::filesystem::path data_dir() { return DRUMCOACH_DATA_DIR; }

/// Fresh directory under the system temp dir, removed on scope exit.
struct TempDir {
    std::filesystem::path path;
    TempDir() {
        std::random_device rd;
        path = std::filesystem::temp_directory_path() / ("drumcoach_test_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

inline Vec3 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    for (;;) {
        Vec3 v{n(rng), n(rng), n(rng)};
        const double len = norm(v);
        if (len > 1e-3) return (1.0 / len) * v;
    }
}

/// A frame with random bone directions and lengths; spine and hips kept non-degenerate.
inline SkeletonFrame random_frame(std::mt19937_64& rng, std::int64_t t_ms = 0) {
    std::uniform_real_distribution<double> len(0.05, 0.5);
    std::uniform_real_distribution<double> pos(-2.0, 2.0);
    SkeletonFrame f;
    f.t_ms = t_ms;
    f.confidence.fill(1.0);
    f.at(JointId::hip_center) = {pos(rng), 1.0 + pos(rng) * 0.1, pos(rng)};
    for (const auto& b : kBones) {
        Vec3 d = random_unit(rng);
        if (b.child == JointId::hip_l || b.child == JointId::hip_r) {
            // keep the hip axis away from vertical
            d.y *= 0.2;
            d = (1.0 / norm(d)) * d;
        }
        f.at(b.child) = f.at(b.parent) + len(rng) * d;
    }
    return f;
}

/// Independent rotation about +Y written as an explicit matrix product.
inline Vec3 yaw_matrix(const Vec3& v, double angle) {
    const double m[3][3] = {{std::cos(angle), 0.0, std::sin(angle)},
                            {0.0, 1.0, 0.0},
                            {-std::sin(angle), 0.0, std::cos(angle)}};
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z, m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
}

inline SkeletonFrame transform(SkeletonFrame f, const Vec3& shift, double yaw, double scale) {
    for (auto& p : f.positions) p = yaw_matrix(scale * p, yaw) + shift;
    return f;
}

/// Short two-challenge catalog over the first demo clip, for fast session tests.
inline Catalog small_catalog(std::int64_t length_ms = 3000) {
    Catalog cat;
    auto style = demo::styles().front();
    style.frames = 150;
    cat.add_clip(demo::make_clip(style));
    cat.add_challenge({"t1", style.clip_id, 0, length_ms, 0, 75.0, "one"});
    cat.add_challenge({"t2", style.clip_id, 1000, 1000 + length_ms, 1, 75.0, "two"});
    return cat;
}

} // namespace testing_support
