#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "drumcoach/error.hpp"

namespace drumcoach {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3 operator*(double s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }
    friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline bool is_finite(const Vec3& v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }

/// Rotation about +Y by `angle` radians (right-handed).
inline Vec3 rotate_yaw(const Vec3& v, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * v.x + s * v.z, v.y, -s * v.x + c * v.z};
}

/// Angle between two unit directions. atan2 keeps identical vectors at exactly 0.
inline double angle_between(const Vec3& a, const Vec3& b) {
    return std::atan2(norm(cross(a, b)), dot(a, b));
}

// Codes are the serialization order and must never change.
enum class JointId : std::uint8_t {
    head,
    shoulder_center,
    spine,
    hip_center,
    shoulder_l,
    elbow_l,
    wrist_l,
    hand_l,
    shoulder_r,
    elbow_r,
    wrist_r,
    hand_r,
    hip_l,
    knee_l,
    ankle_l,
    foot_l,
    hip_r,
    knee_r,
    ankle_r,
    foot_r,
};

inline constexpr std::size_t kJointCount = 20;
inline constexpr std::size_t kBoneCount = 19;

inline constexpr std::array<std::string_view, kJointCount> kJointNames = {
    "head",    "shoulder_center", "spine",   "hip_center", "shoulder_l", "elbow_l", "wrist_l",
    "hand_l",  "shoulder_r",      "elbow_r", "wrist_r",    "hand_r",     "hip_l",   "knee_l",
    "ankle_l", "foot_l",          "hip_r",   "knee_r",     "ankle_r",    "foot_r",
};

constexpr std::size_t index(JointId j) { return static_cast<std::size_t>(j); }
inline std::string_view name(JointId j) { return kJointNames[index(j)]; }

inline std::optional<JointId> joint_from_name(std::string_view s) {
    for (std::size_t i = 0; i < kJointCount; ++i) {
        if (kJointNames[i] == s) return static_cast<JointId>(i);
    }
    return std::nullopt;
}

struct Bone {
    JointId parent;
    JointId child;
    double weight;
};

/// The 19 parent->child edges of the joint tree rooted at hip_center.
/// Torso and girdle links weigh 0.5, arms 1.0, legs 2.0.
inline constexpr std::array<Bone, kBoneCount> kBones = {{
    {JointId::hip_center, JointId::spine, 0.5},
    {JointId::spine, JointId::shoulder_center, 0.5},
    {JointId::shoulder_center, JointId::head, 0.5},
    {JointId::hip_center, JointId::hip_l, 0.5},
    {JointId::hip_center, JointId::hip_r, 0.5},
    {JointId::shoulder_center, JointId::shoulder_l, 0.5},
    {JointId::shoulder_center, JointId::shoulder_r, 0.5},
    {JointId::shoulder_l, JointId::elbow_l, 1.0},
    {JointId::elbow_l, JointId::wrist_l, 1.0},
    {JointId::wrist_l, JointId::hand_l, 1.0},
    {JointId::shoulder_r, JointId::elbow_r, 1.0},
    {JointId::elbow_r, JointId::wrist_r, 1.0},
    {JointId::wrist_r, JointId::hand_r, 1.0},
    {JointId::hip_l, JointId::knee_l, 2.0},
    {JointId::knee_l, JointId::ankle_l, 2.0},
    {JointId::ankle_l, JointId::foot_l, 2.0},
    {JointId::hip_r, JointId::knee_r, 2.0},
    {JointId::knee_r, JointId::ankle_r, 2.0},
    {JointId::ankle_r, JointId::foot_r, 2.0},
}};

using BoneWeights = std::array<double, kBoneCount>;

inline BoneWeights default_bone_weights() {
    BoneWeights w{};
    for (std::size_t i = 0; i < kBoneCount; ++i) w[i] = kBones[i].weight;
    return w;
}

/// "parent_child" joint names, e.g. "knee_l_ankle_l"; used as config keys.
inline std::string bone_name(std::size_t bone) {
    return std::string(name(kBones[bone].parent)) + "_" + std::string(name(kBones[bone].child));
}

inline std::optional<std::size_t> bone_index(JointId parent, JointId child) {
    for (std::size_t i = 0; i < kBoneCount; ++i) {
        if (kBones[i].parent == parent && kBones[i].child == child) return i;
    }
    return std::nullopt;
}

struct SkeletonFrame {
    std::int64_t t_ms = 0;
    std::array<Vec3, kJointCount> positions{};
    std::array<double, kJointCount> confidence{};

    const Vec3& at(JointId j) const { return positions[index(j)]; }
    Vec3& at(JointId j) { return positions[index(j)]; }

    friend bool operator==(const SkeletonFrame&, const SkeletonFrame&) = default;
};

struct Violation {
    std::optional<JointId> joint;
    std::string what;
};

struct ValidationResult {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    explicit operator bool() const { return ok(); }
};

inline ValidationResult validate_frame(const SkeletonFrame& frame) {
    ValidationResult result;
    if (frame.t_ms < 0) result.violations.push_back({std::nullopt, "negative timestamp"});
    for (std::size_t i = 0; i < kJointCount; ++i) {
        const auto joint = static_cast<JointId>(i);
        if (!is_finite(frame.positions[i])) {
            result.violations.push_back({joint, std::string(name(joint)) + ": non-finite coordinate"});
        }
        const double c = frame.confidence[i];
        if (!(c >= 0.0 && c <= 1.0)) {
            result.violations.push_back({joint, std::string(name(joint)) + ": confidence out of [0,1]"});
        }
    }
    return result;
}

inline constexpr double kDefaultMinConfidence = 0.3;
inline constexpr double kDegenerateLength = 1e-6;

struct NormalizedPose {
    std::array<Vec3, kBoneCount> direction{};
    std::array<bool, kBoneCount> valid{};
    /// Set when the hips were vertically aligned and the yaw step was skipped.
    bool facing_degenerate = false;
};

/// Translate hip_center to the origin, scale the spine to unit length, yaw-align the
/// hip axis with +X, and emit per-bone unit directions. Throws DegenerateSpine.
inline NormalizedPose normalize(const SkeletonFrame& frame, double min_confidence = kDefaultMinConfidence) {
    const Vec3 root = frame.at(JointId::hip_center);
    const double spine = norm(frame.at(JointId::shoulder_center) - root);
    if (!(spine >= kDegenerateLength)) {
        throw Error(ErrorKind::DegenerateSpine, "hip_center to shoulder_center distance below 1e-6 m");
    }
    const double scale = 1.0 / spine;

    const Vec3 hips = frame.at(JointId::hip_r) - frame.at(JointId::hip_l);
    const double horizontal = std::hypot(hips.x, hips.z);

    NormalizedPose pose;
    double c = 1.0;
    double s = 0.0;
    if (horizontal < kDegenerateLength) {
        pose.facing_degenerate = true;
    } else {
        c = hips.x / horizontal;
        s = hips.z / horizontal;
    }

    std::array<Vec3, kJointCount> local{};
    for (std::size_t i = 0; i < kJointCount; ++i) {
        const Vec3 p = scale * (frame.positions[i] - root);
        local[i] = {c * p.x + s * p.z, p.y, -s * p.x + c * p.z};
    }

    for (std::size_t b = 0; b < kBoneCount; ++b) {
        const auto parent = index(kBones[b].parent);
        const auto child = index(kBones[b].child);
        if (frame.confidence[parent] < min_confidence || frame.confidence[child] < min_confidence) continue;
        const Vec3 v = local[child] - local[parent];
        const double len = norm(v);
        if (!(len > kDegenerateLength * scale) || !std::isfinite(len)) continue;
        pose.direction[b] = (1.0 / len) * v;
        pose.valid[b] = true;
    }
    return pose;
}

/// Rebuild joint positions from unit bone directions, hip_center at the origin.
/// Invalid bones collapse the child onto its parent.
inline SkeletonFrame reconstruct(const NormalizedPose& pose, std::int64_t t_ms = 0) {
    SkeletonFrame frame;
    frame.t_ms = t_ms;
    frame.confidence.fill(1.0);
    // kBones is ordered parent-before-child, so one pass suffices.
    for (std::size_t b = 0; b < kBoneCount; ++b) {
        const Vec3 step = pose.valid[b] ? pose.direction[b] : Vec3{};
        frame.at(kBones[b].child) = frame.at(kBones[b].parent) + step;
    }
    return frame;
}

} // namespace drumcoach
