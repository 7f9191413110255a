#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "drumcoach/error.hpp"
#include "drumcoach/frame_json.hpp"
#include "drumcoach/skeleton.hpp"

namespace drumcoach {

enum class CueCategory { cheer, applause, ambient };

inline constexpr std::array<CueCategory, 3> kCueCategories = {CueCategory::cheer, CueCategory::applause,
                                                              CueCategory::ambient};

inline std::string_view to_string(CueCategory c) {
    switch (c) {
    case CueCategory::cheer: return "cheer";
    case CueCategory::applause: return "applause";
    case CueCategory::ambient: return "ambient";
    }
    return "ambient";
}

inline std::optional<CueCategory> category_from_string(std::string_view s) {
    for (auto c : kCueCategories) {
        if (to_string(c) == s) return c;
    }
    return std::nullopt;
}

struct SoundCue {
    std::string cue_id;
    CueCategory category = CueCategory::ambient;
    std::int64_t duration_ms = 0;
    std::string asset_path;

    friend bool operator==(const SoundCue&, const SoundCue&) = default;
};

class CueLibrary {
public:
    CueLibrary() = default;

    void add(SoundCue cue) {
        if (cue.duration_ms <= 0) throw Error(ErrorKind::Invariant, "cue " + cue.cue_id + ": duration_ms must be > 0");
        for (const auto& group : groups_) {
            for (const auto& c : group) {
                if (c.cue_id == cue.cue_id) throw Error(ErrorKind::Invariant, "duplicate cue_id " + cue.cue_id);
            }
        }
        groups_[slot(cue.category)].push_back(std::move(cue));
    }

    const std::vector<SoundCue>& cues(CueCategory c) const { return groups_[slot(c)]; }
    const std::optional<std::string>& last_played(CueCategory c) const { return last_[slot(c)]; }
    void set_last_played(CueCategory c, std::string id) { last_[slot(c)] = std::move(id); }

    friend bool operator==(const CueLibrary&, const CueLibrary&) = default;

private:
    static std::size_t slot(CueCategory c) { return static_cast<std::size_t>(c); }

    std::array<std::vector<SoundCue>, 3> groups_;
    std::array<std::optional<std::string>, 3> last_;
};

/// Uniform draw over the category, never repeating the previous pick when an
/// alternative exists.
template <typename Rng>
const SoundCue& select_cue(CueLibrary& lib, CueCategory category, Rng& rng) {
    const auto& pool = lib.cues(category);
    if (pool.empty()) throw Error(ErrorKind::EmptyCategory, std::string(to_string(category)));

    std::vector<std::size_t> eligible;
    const auto& last = lib.last_played(category);
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (pool.size() >= 2 && last && pool[i].cue_id == *last) continue;
        eligible.push_back(i);
    }
    std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
    const SoundCue& chosen = pool[eligible[pick(rng)]];
    lib.set_last_played(category, chosen.cue_id);
    return chosen;
}

/// Manifest: NDJSON {cue_id, category, duration_ms, asset_path}.
inline CueLibrary load_cue_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    CueLibrary lib;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Json r;
        try {
            r = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw LineError(ErrorKind::Parse, line_no, e.what());
        }
        SoundCue cue;
        try {
            cue.cue_id = r.at("cue_id").get<std::string>();
            const auto cat = category_from_string(r.at("category").get<std::string>());
            if (!cat) throw LineError(ErrorKind::Schema, line_no, "unknown category " + r.at("category").dump());
            cue.category = *cat;
            cue.duration_ms = r.at("duration_ms").get<std::int64_t>();
            cue.asset_path = r.value("asset_path", std::string{});
        } catch (const Json::exception& e) {
            throw LineError(ErrorKind::Parse, line_no, e.what());
        }
        try {
            lib.add(std::move(cue));
        } catch (const Error& e) {
            throw LineError(e.kind(), line_no, e.what());
        }
    }
    return lib;
}

inline std::string cue_manifest_to_ndjson(const std::vector<SoundCue>& cues) {
    std::string out;
    for (const auto& c : cues) {
        Json j;
        j["cue_id"] = c.cue_id;
        j["category"] = std::string(to_string(c.category));
        j["duration_ms"] = c.duration_ms;
        j["asset_path"] = c.asset_path;
        out += j.dump() + "\n";
    }
    return out;
}

struct Listener {
    Vec3 position{};
    Vec3 facing{0.0, 0.0, -1.0};
    double d_ref = 1.0;
    double d_max = 20.0;
};

struct Spatialized {
    double gain = 0.0;
    double pan = 0.0;
};

/// Inverse-distance gain clamped at d_ref and cut off beyond d_max. Pan is the sine of
/// the signed horizontal angle from the facing direction, positive to the listener's right.
inline Spatialized spatialize(const Vec3& emitter, const Listener& listener) {
    if (std::abs(norm(listener.facing) - 1.0) > 1e-6) {
        throw Error(ErrorKind::DegenerateFacing, "listener facing must be a unit vector");
    }
    const double fh = std::hypot(listener.facing.x, listener.facing.z);
    if (fh < kDegenerateLength) throw Error(ErrorKind::DegenerateFacing, "listener facing is vertical");

    const Vec3 offset = emitter - listener.position;
    const double d = norm(offset);
    Spatialized out;
    out.gain = d > listener.d_max ? 0.0 : std::clamp(listener.d_ref / std::max(d, listener.d_ref), 0.0, 1.0);

    // Right-hand vector of a +Y-up listener: facing x up, projected to the ground plane.
    const double right_x = -listener.facing.z / fh;
    const double right_z = listener.facing.x / fh;
    const double oh = std::hypot(offset.x, offset.z);
    if (oh > 0.0) out.pan = std::clamp((offset.x * right_x + offset.z * right_z) / oh, -1.0, 1.0);
    return out;
}

struct SoundEvent {
    std::string cue_id;
    double gain = 0.0;
    double pan = 0.0;
    std::int64_t start_t_ms = 0;
};

} // namespace drumcoach
