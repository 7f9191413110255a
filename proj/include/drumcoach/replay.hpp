#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "drumcoach/error.hpp"
#include "drumcoach/library.hpp"
#include "drumcoach/skeleton.hpp"

namespace drumcoach {

struct ReplayConfig {
    std::string clip_id;
    double noise_deg = 0.0;
    double dropout_p = 0.0;
    double time_scale = 1.0;
    std::int64_t offset_ms = 0;
    std::uint64_t seed = 0;

    friend bool operator==(const ReplayConfig&, const ReplayConfig&) = default;
};

inline void validate(const ReplayConfig& cfg) {
    if (!(cfg.noise_deg >= 0.0) || !std::isfinite(cfg.noise_deg)) throw Error(ErrorKind::Config, "noise_deg must be >= 0");
    if (!(cfg.dropout_p >= 0.0 && cfg.dropout_p < 1.0)) throw Error(ErrorKind::Config, "dropout_p must lie in [0,1)");
    if (!(cfg.time_scale > 0.0) || !std::isfinite(cfg.time_scale)) {
        throw Error(ErrorKind::Config, "time_scale must be positive");
    }
}

/// Rodrigues rotation of `v` by `angle` radians about unit `axis`.
inline Vec3 rotate_about(const Vec3& v, const Vec3& axis, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return (c * v) + (s * cross(axis, v)) + ((1.0 - c) * dot(axis, v)) * axis;
}

/// Seeded stand-in for the depth camera. Frames are re-timed to offset + t / time_scale,
/// independently dropped with dropout_p, and every bone direction is rotated by an
/// angle ~ N(0, noise_deg) about a uniformly random axis. Positions are rebuilt from the
/// perturbed directions and the original bone lengths, hip_center fixed.
template <typename Sink>
void replay_stream(const MotionClip& clip, const ReplayConfig& cfg, Sink&& sink) {
    validate(cfg);
    std::mt19937_64 rng(cfg.seed);
    std::bernoulli_distribution drop(cfg.dropout_p);
    std::normal_distribution<double> angle(0.0, cfg.noise_deg * std::numbers::pi / 180.0);
    std::normal_distribution<double> axis_component(0.0, 1.0);

    for (const auto& original : clip.frames) {
        const bool dropped = drop(rng);
        SkeletonFrame frame = original;
        frame.t_ms = cfg.offset_ms + static_cast<std::int64_t>(std::llround(static_cast<double>(original.t_ms) / cfg.time_scale));

        if (cfg.noise_deg > 0.0) {
            for (const auto& bone : kBones) {
                const Vec3 v = original.at(bone.child) - original.at(bone.parent);
                Vec3 axis{};
                double n = 0.0;
                while (n < 1e-12) {
                    axis = {axis_component(rng), axis_component(rng), axis_component(rng)};
                    n = norm(axis);
                }
                axis = (1.0 / n) * axis;
                const Vec3 perturbed = rotate_about(v, axis, angle(rng));
                frame.at(bone.child) = frame.at(bone.parent) + perturbed;
            }
        }
        if (!dropped) sink(frame);
    }
}

inline std::vector<SkeletonFrame> replay_frames(const MotionClip& clip, const ReplayConfig& cfg) {
    std::vector<SkeletonFrame> out;
    replay_stream(clip, cfg, [&out](const SkeletonFrame& f) { out.push_back(f); });
    return out;
}

/// Frames per second implied by the observed timestamps; 30 when fewer than 2 frames.
inline double observed_fps(const std::vector<SkeletonFrame>& frames) {
    if (frames.size() < 2) return 30.0;
    const auto span = frames.back().t_ms - frames.front().t_ms;
    if (span <= 0) return 30.0;
    return static_cast<double>(frames.size() - 1) * 1000.0 / static_cast<double>(span);
}

/// Writes received frames as a clip file. No validation happens here: a short or
/// broken recording is rejected when it is loaded.
inline void record(const std::vector<SkeletonFrame>& frames, const std::filesystem::path& path,
                   const std::string& clip_id = "recording", const std::string& title = "recorded stream") {
    MotionClip clip;
    clip.clip_id = clip_id;
    clip.title = title;
    clip.fps = observed_fps(frames);
    clip.frames = frames;
    detail::write_atomically(path, clip_to_ndjson(clip));
}

} // namespace drumcoach
