#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "drumcoach/error.hpp"
#include "drumcoach/skeleton.hpp"

namespace drumcoach {

using Json = nlohmann::ordered_json;

/// {"t_ms": int, "j": [[x,y,z,c] x 20 in JointId code order]}
inline Json frame_to_json(const SkeletonFrame& frame) {
    Json joints = Json::array();
    for (std::size_t i = 0; i < kJointCount; ++i) {
        const Vec3& p = frame.positions[i];
        joints.push_back(Json::array({p.x, p.y, p.z, frame.confidence[i]}));
    }
    Json out;
    out["t_ms"] = frame.t_ms;
    out["j"] = std::move(joints);
    return out;
}

/// Throws Error(Schema) on a wrong joint count or record shape; does not validate ranges.
inline SkeletonFrame frame_from_json(const Json& record) {
    if (!record.is_object() || !record.contains("t_ms") || !record.contains("j")) {
        throw Error(ErrorKind::Schema, "frame record needs t_ms and j");
    }
    const Json& t = record.at("t_ms");
    if (!t.is_number_integer()) throw Error(ErrorKind::Schema, "t_ms must be an integer");
    const Json& joints = record.at("j");
    if (!joints.is_array() || joints.size() != kJointCount) {
        throw Error(ErrorKind::Schema, "expected 20 joints, got " +
                                           std::to_string(joints.is_array() ? joints.size() : 0));
    }
    SkeletonFrame frame;
    frame.t_ms = t.get<std::int64_t>();
    for (std::size_t i = 0; i < kJointCount; ++i) {
        const Json& entry = joints[i];
        if (!entry.is_array() || entry.size() != 4) {
            throw Error(ErrorKind::Schema, "joint " + std::to_string(i) + " must be [x,y,z,c]");
        }
        for (const auto& v : entry) {
            if (!v.is_number()) throw Error(ErrorKind::Schema, "joint " + std::to_string(i) + " has a non-number");
        }
        frame.positions[i] = {entry[0].get<double>(), entry[1].get<double>(), entry[2].get<double>()};
        frame.confidence[i] = entry[3].get<double>();
    }
    return frame;
}

inline Json vec_to_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

} // namespace drumcoach
