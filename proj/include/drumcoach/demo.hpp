#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "drumcoach/audio.hpp"
#include "drumcoach/library.hpp"
#include "drumcoach/skeleton.hpp"

// Procedural stand-ins for captured reference dances. Real captures are data; these
// exist so the engine ships with a playable, testable catalog.

namespace drumcoach::demo {

struct DanceStyle {
    std::string clip_id;
    std::string title;
    double bpm = 96.0;
    std::size_t frames = 600;
    double step_hz = 0.8;
    double step_amp = 0.9;   // thigh pitch (rad) at full knee lift
    double drum_hz = 1.6;
    double drum_amp = 0.9;   // shoulder pitch swing (rad)
    double lean_amp = 0.15;
    double bob_amp = 0.05;
    double travel_m = 1.0;   // stage displacement over the clip
    double turn_rad = 1.2;   // total yaw over the clip
    std::string key_label = "step";
    std::size_t key_every_beats = 4;
};

inline std::vector<DanceStyle> styles() {
    return {
        {"basic_step", "Basic step", 96.0, 600, 0.8, 0.9, 1.6, 0.7, 0.12, 0.04, 0.8, 0.9, "step", 4},
        {"drum_swing", "Drum swing", 104.0, 750, 0.6, 0.6, 1.3, 1.2, 0.2, 0.05, 1.5, -1.4, "drum_hit", 2},
        {"leap_turn", "Leap and turn", 112.0, 900, 1.1, 1.2, 0.9, 1.0, 0.25, 0.09, 2.0, 3.0, "leap", 4},
    };
}

namespace detail {

/// Unit vector obtained by tilting straight-down forward (toward -Z) by `pitch`
/// and sideways (toward +X) by `roll`.
inline Vec3 limb(double pitch, double roll) {
    const Vec3 v{std::sin(roll), -std::cos(roll), 0.0};
    return {v.x, v.y * std::cos(pitch), v.y * std::sin(pitch)};
}

inline Vec3 upward(double lean, double side) {
    return {std::sin(side), std::cos(lean) * std::cos(side), -std::sin(lean) * std::cos(side)};
}

} // namespace detail

/// Body faces -Z with its right side toward +X.
inline SkeletonFrame pose_at(const DanceStyle& s, double t_s, double progress) {
    using std::sin;
    constexpr double tau = 2.0 * std::numbers::pi;
    const double mod = 0.75 + 0.25 * sin(tau * 0.13 * t_s + 0.4);

    const double lift_l = s.step_amp * mod * std::max(0.0, sin(tau * s.step_hz * t_s));
    const double lift_r = s.step_amp * mod * std::max(0.0, sin(tau * s.step_hz * t_s + std::numbers::pi));
    const double swing = s.drum_amp * sin(tau * s.drum_hz * t_s + 0.3 * sin(tau * 0.21 * t_s));
    const double elbow = 0.6 + 0.5 * sin(tau * s.drum_hz * t_s + 1.1);
    const double lean = s.lean_amp * sin(tau * 0.37 * t_s) + 0.05;
    const double sway = 0.06 * sin(tau * 0.29 * t_s + 0.7);
    const double bob = s.bob_amp * sin(tau * 2.0 * s.step_hz * t_s);

    SkeletonFrame f;
    f.confidence.fill(1.0);
    auto put = [&f](JointId child, JointId parent, double len, const Vec3& dir) {
        f.at(child) = f.at(parent) + len * dir;
    };

    f.at(JointId::hip_center) = {0.0, 1.0 + bob, 0.0};
    put(JointId::spine, JointId::hip_center, 0.25, detail::upward(lean, sway));
    put(JointId::shoulder_center, JointId::spine, 0.25, detail::upward(lean * 1.2, sway));
    put(JointId::head, JointId::shoulder_center, 0.2, detail::upward(lean * 0.5 + 0.1 * sin(tau * 0.5 * t_s), 0.0));
    put(JointId::shoulder_l, JointId::shoulder_center, 0.18, {-0.98, -0.2, 0.0});
    put(JointId::shoulder_r, JointId::shoulder_center, 0.18, {0.98, -0.2, 0.0});
    put(JointId::hip_l, JointId::hip_center, 0.1, {-1.0, -0.15, 0.02 * sin(tau * 0.4 * t_s)});
    put(JointId::hip_r, JointId::hip_center, 0.1, {1.0, -0.15, -0.02 * sin(tau * 0.4 * t_s)});

    put(JointId::elbow_l, JointId::shoulder_l, 0.28, detail::limb(0.3 + swing, -0.35));
    put(JointId::wrist_l, JointId::elbow_l, 0.25, detail::limb(0.3 + swing + elbow, -0.2));
    put(JointId::hand_l, JointId::wrist_l, 0.08, detail::limb(0.4 + swing + elbow, -0.2));
    put(JointId::elbow_r, JointId::shoulder_r, 0.28, detail::limb(0.3 - swing, 0.35));
    put(JointId::wrist_r, JointId::elbow_r, 0.25, detail::limb(0.3 - swing + elbow, 0.2));
    put(JointId::hand_r, JointId::wrist_r, 0.08, detail::limb(0.4 - swing + elbow, 0.2));

    put(JointId::knee_l, JointId::hip_l, 0.42, detail::limb(lift_l, -0.05 - 0.1 * lift_l));
    put(JointId::ankle_l, JointId::knee_l, 0.40, detail::limb(-0.9 * lift_l, -0.05));
    put(JointId::foot_l, JointId::ankle_l, 0.12, detail::limb(1.3 - 0.4 * lift_l, -0.1));
    put(JointId::knee_r, JointId::hip_r, 0.42, detail::limb(lift_r, 0.05 + 0.1 * lift_r));
    put(JointId::ankle_r, JointId::knee_r, 0.40, detail::limb(-0.9 * lift_r, 0.05));
    put(JointId::foot_r, JointId::ankle_r, 0.12, detail::limb(1.3 - 0.4 * lift_r, 0.1));

    // Wander across the stage and turn; normalization removes both.
    const double yaw = s.turn_rad * progress;
    const Vec3 shift{s.travel_m * progress, 0.0, -0.5 * s.travel_m * progress};
    for (auto& p : f.positions) p = rotate_yaw(p, yaw) + shift;
    return f;
}

inline MotionClip make_clip(const DanceStyle& s, double fps = 30.0) {
    MotionClip clip;
    clip.clip_id = s.clip_id;
    clip.title = s.title;
    clip.fps = fps;
    clip.beat_grid.bpm = s.bpm;
    for (std::size_t i = 0; i < s.frames; ++i) {
        const double t_ms = static_cast<double>(i) * 1000.0 / fps;
        auto f = pose_at(s, t_ms / 1000.0, static_cast<double>(i) / static_cast<double>(s.frames - 1));
        f.t_ms = std::llround(t_ms);
        clip.frames.push_back(f);
    }
    const double beat_ms = 60000.0 / s.bpm;
    const double end = static_cast<double>(clip.frames.back().t_ms);
    std::size_t n = 0;
    // Key poses sit on beats, skipping the first bar.
    for (double t = 4.0 * beat_ms; t < end - beat_ms; t += beat_ms * static_cast<double>(s.key_every_beats)) {
        const auto idx = static_cast<std::size_t>(std::llround(t * fps / 1000.0));
        clip.beat_grid.key_poses.push_back({clip.frames[idx].t_ms, idx, s.key_label + "_" + std::to_string(++n)});
    }
    return clip;
}

/// The shipped challenge ladder over the demo clips.
inline std::vector<ChallengeSpec> challenges() {
    return {
        {"c1", "basic_step", 0, 10000, 0, 75.0, "First steps"},
        {"c2", "drum_swing", 2000, 14000, 1, 75.0, "Drum swing"},
        {"c3", "leap_turn", 0, 15000, 2, 75.0, "Leap and turn"},
    };
}

inline Catalog catalog() {
    Catalog cat;
    for (const auto& s : styles()) cat.add_clip(make_clip(s));
    for (auto c : challenges()) cat.add_challenge(std::move(c));
    return cat;
}

inline std::vector<SoundCue> cues() {
    return {
        {"cheer_01", CueCategory::cheer, 1800, "audio/cheer_01.ogg"},
        {"cheer_02", CueCategory::cheer, 2200, "audio/cheer_02.ogg"},
        {"cheer_03", CueCategory::cheer, 1500, "audio/cheer_03.ogg"},
        {"applause_01", CueCategory::applause, 3000, "audio/applause_01.ogg"},
        {"applause_02", CueCategory::applause, 2600, "audio/applause_02.ogg"},
        {"applause_03", CueCategory::applause, 3400, "audio/applause_03.ogg"},
        {"ambient_market", CueCategory::ambient, 20000, "audio/ambient_market.ogg"},
        {"ambient_wind", CueCategory::ambient, 15000, "audio/ambient_wind.ogg"},
    };
}

inline CueLibrary cue_library() {
    CueLibrary lib;
    for (auto c : cues()) lib.add(std::move(c));
    return lib;
}

} // namespace drumcoach::demo
