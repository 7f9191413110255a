#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "drumcoach/error.hpp"
#include "drumcoach/frame_json.hpp"
#include "drumcoach/scoring.hpp"
#include "drumcoach/session.hpp"

namespace drumcoach {

struct EngineConfig {
    ScoringConfig scoring;
    SessionConfig session;
    AudioScene audio;
    std::string catalog_path = "data/catalog.ndjson";
    std::string cue_manifest_path = "data/cues.ndjson";
    std::string progress_dir = "progress";
    std::string listen = "127.0.0.1:7420";
    std::size_t max_outbound_bytes = 1024 * 1024;
    std::int64_t tick_ms = 20;
    std::string ui_dir = "ui";

    friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

inline void validate(const EngineConfig& cfg) {
    validate(cfg.scoring);
    validate(cfg.session);
    if (!(cfg.audio.listener.d_ref > 0.0) || !(cfg.audio.listener.d_max >= cfg.audio.listener.d_ref)) {
        throw Error(ErrorKind::Config, "need 0 < d_ref <= d_max");
    }
    if (std::abs(norm(cfg.audio.listener.facing) - 1.0) > 1e-6) {
        throw Error(ErrorKind::Config, "listener_facing must be a unit vector");
    }
    if (std::hypot(cfg.audio.listener.facing.x, cfg.audio.listener.facing.z) < kDegenerateLength) {
        throw Error(ErrorKind::Config, "listener_facing must not be vertical");
    }
    if (cfg.max_outbound_bytes == 0) throw Error(ErrorKind::Config, "max_outbound_bytes must be positive");
    if (cfg.tick_ms <= 0) throw Error(ErrorKind::Config, "tick_ms must be positive");
}

namespace detail {

struct Field {
    std::string section;
    std::string key;
    std::string comment;
    std::function<Json(const EngineConfig&)> get;
    std::function<void(EngineConfig&, const Json&)> set;
};

inline double as_real(const Json& v, const std::string& key) {
    if (!v.is_number()) throw Error(ErrorKind::Config, key + " must be a number");
    return v.get<double>();
}

inline std::int64_t as_int(const Json& v, const std::string& key) {
    if (!v.is_number_integer()) throw Error(ErrorKind::Config, key + " must be an integer");
    return v.get<std::int64_t>();
}

inline std::size_t as_count(const Json& v, const std::string& key) {
    const auto n = as_int(v, key);
    if (n < 0) throw Error(ErrorKind::Config, key + " must be >= 0");
    return static_cast<std::size_t>(n);
}

inline std::string as_text(const Json& v, const std::string& key) {
    if (!v.is_string()) throw Error(ErrorKind::Config, key + " must be a string");
    return v.get<std::string>();
}

inline Vec3 as_vec3(const Json& v, const std::string& key) {
    if (!v.is_array() || v.size() != 3) throw Error(ErrorKind::Config, key + " must be [x, y, z]");
    return {as_real(v[0], key), as_real(v[1], key), as_real(v[2], key)};
}

#define DRUMCOACH_REAL(sec, name, expr, note)                                                                         \
    Field { sec, name, note, [](const EngineConfig& c) { return Json(c.expr); },                                       \
            [](EngineConfig& c, const Json& v) { c.expr = as_real(v, name); } }
#define DRUMCOACH_INT(sec, name, expr, note)                                                                          \
    Field { sec, name, note, [](const EngineConfig& c) { return Json(c.expr); },                                       \
            [](EngineConfig& c, const Json& v) { c.expr = as_int(v, name); } }
#define DRUMCOACH_COUNT(sec, name, expr, note)                                                                        \
    Field { sec, name, note, [](const EngineConfig& c) { return Json(c.expr); },                                       \
            [](EngineConfig& c, const Json& v) { c.expr = as_count(v, name); } }
#define DRUMCOACH_TEXT(sec, name, expr, note)                                                                         \
    Field { sec, name, note, [](const EngineConfig& c) { return Json(c.expr); },                                       \
            [](EngineConfig& c, const Json& v) { c.expr = as_text(v, name); } }
#define DRUMCOACH_VEC(sec, name, expr, note)                                                                          \
    Field { sec, name, note, [](const EngineConfig& c) { return vec_to_json(c.expr); },                                \
            [](EngineConfig& c, const Json& v) { c.expr = as_vec3(v, name); } }

inline const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f = {
            DRUMCOACH_REAL("scoring", "e_max", scoring.e_max, "decision: mean bone error (rad) that scores 0"),
            DRUMCOACH_COUNT("scoring", "band_frames", scoring.band_frames, "decision: matching band half-width (frames)"),
            DRUMCOACH_REAL("scoring", "timing_full_ms", scoring.timing_full_ms, "decision: full timing credit window"),
            DRUMCOACH_REAL("scoring", "timing_zero_ms", scoring.timing_zero_ms, "decision: zero timing credit beyond"),
            DRUMCOACH_REAL("scoring", "pose_weight", scoring.pose_weight, "decision: share of pose in the total"),
            DRUMCOACH_REAL("scoring", "timing_weight", scoring.timing_weight, "decision: share of timing in the total"),
            DRUMCOACH_REAL("scoring", "min_confidence", scoring.min_confidence, "decision: bones below are ignored"),
            DRUMCOACH_REAL("scoring", "coverage_floor", scoring.coverage_floor, "decision: minimum scoreable coverage"),
            DRUMCOACH_COUNT("scoring", "rolling_window", scoring.rolling_window, "decision: frames in the rolling average"),
            DRUMCOACH_REAL("session", "cheer_threshold", session.cheer_threshold, "decision: rolling average to cheer"),
            DRUMCOACH_REAL("session", "applaud_threshold", session.applaud_threshold, "decision: key-pose credit to applaud"),
            DRUMCOACH_INT("session", "applaud_duration_ms", session.applaud_duration_ms, "decision"),
            DRUMCOACH_INT("session", "cheer_hold_ms", session.cheer_hold_ms, "decision: cheering lasts this long per refresh"),
            DRUMCOACH_INT("session", "silence_ms", session.silence_ms, "decision: standby after this long without scores"),
            DRUMCOACH_INT("session", "countdown_ms", session.countdown_ms, "decision"),
            DRUMCOACH_INT("session", "guide_step_ms", session.guide_step_ms, "decision: duration of each guide step"),
            Field{"session", "guide_steps", "guide script, one entry per step",
                  [](const EngineConfig& c) { return Json(c.session.guide_steps); },
                  [](EngineConfig& c, const Json& v) {
                      if (!v.is_array()) throw Error(ErrorKind::Config, "guide_steps must be a list of strings");
                      c.session.guide_steps.clear();
                      for (const auto& s : v) c.session.guide_steps.push_back(as_text(s, "guide_steps"));
                  }},
            DRUMCOACH_INT("session", "end_grace_ms", session.end_grace_ms, "decision: wait past the reference end"),
            DRUMCOACH_INT("session", "ambient_interval_ms", session.ambient_interval_ms, "decision: 0 disables ambient"),
            DRUMCOACH_TEXT("session", "participant_id", session.participant_id, ""),
            DRUMCOACH_TEXT("library", "catalog", catalog_path, "relative to the working directory"),
            DRUMCOACH_TEXT("library", "cue_manifest", cue_manifest_path, ""),
            DRUMCOACH_TEXT("library", "progress_dir", progress_dir, ""),
            DRUMCOACH_VEC("audio", "listener_position", audio.listener.position, "meters, +Y up"),
            DRUMCOACH_VEC("audio", "listener_facing", audio.listener.facing, "unit vector"),
            DRUMCOACH_REAL("audio", "d_ref", audio.listener.d_ref, "decision: full-gain distance (m)"),
            DRUMCOACH_REAL("audio", "d_max", audio.listener.d_max, "decision: silent beyond (m)"),
            DRUMCOACH_VEC("audio", "ambient_position", audio.ambient_position, ""),
            DRUMCOACH_TEXT("gateway", "listen", listen, "host:port"),
            DRUMCOACH_COUNT("gateway", "max_outbound_bytes", max_outbound_bytes, "decision: slow subscribers cut here"),
            DRUMCOACH_INT("gateway", "tick_ms", tick_ms, "session timer period"),
            DRUMCOACH_TEXT("gateway", "ui_dir", ui_dir, "static files served at /"),
        };
        for (std::size_t b = 0; b < kBoneCount; ++b) {
            const std::string key = bone_name(b);
            f.push_back(Field{"scoring.bone_weights", key, b == 0 ? "decision: torso 0.5, arms 1.0, legs 2.0" : "",
                              [b](const EngineConfig& c) { return Json(c.scoring.bone_weights[b]); },
                              [b, key](EngineConfig& c, const Json& v) { c.scoring.bone_weights[b] = as_real(v, key); }});
        }
        return f;
    }();
    return table;
}

#undef DRUMCOACH_REAL
#undef DRUMCOACH_INT
#undef DRUMCOACH_COUNT
#undef DRUMCOACH_TEXT
#undef DRUMCOACH_VEC

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Drops a trailing '#' comment that is not inside a string.
inline std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

} // namespace detail

/// TOML-style text: [section] headers, `key = value` lines, '#' comments. Values are
/// numbers, "strings", true/false, or [lists]. Unknown sections and keys are rejected.
inline EngineConfig parse_config(std::istream& in) {
    EngineConfig cfg;
    std::string section;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = detail::trim(detail::strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw LineError(ErrorKind::Config, line_no, "unterminated section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            static const char* known[] = {"scoring", "scoring.bone_weights", "session", "library",
                                          "audio",   "audio.audience",       "gateway"};
            if (std::find(std::begin(known), std::end(known), section) == std::end(known)) {
                throw LineError(ErrorKind::Config, line_no, "unknown section [" + section + "]");
            }
            if (section == "audio.audience") cfg.audio.audience.clear();
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw LineError(ErrorKind::Config, line_no, "expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        Json value;
        try {
            value = Json::parse(detail::trim(line.substr(eq + 1)));
        } catch (const Json::parse_error&) {
            throw LineError(ErrorKind::Config, line_no, "cannot parse value of " + key);
        }

        try {
            if (section == "audio.audience") {
                cfg.audio.audience.push_back({key, detail::as_vec3(value, key)});
                continue;
            }
            bool matched = false;
            for (const auto& f : detail::fields()) {
                if (f.section == section && f.key == key) {
                    f.set(cfg, value);
                    matched = true;
                    break;
                }
            }
            if (!matched) throw Error(ErrorKind::Config, "unknown key " + (section.empty() ? key : section + "." + key));
        } catch (const Error& e) {
            throw LineError(ErrorKind::Config, line_no, e.what());
        }
    }
    validate(cfg);
    return cfg;
}

inline EngineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    return parse_config(in);
}

/// Emits every field, so the output doubles as a fully commented default config.
inline std::string emit_config(const EngineConfig& cfg) {
    std::ostringstream out;
    out << "# drumcoach engine configuration.\n"
           "# Values marked 'decision' are tuning choices of this engine, not measured constants.\n";
    std::string section;
    for (const auto& f : detail::fields()) {
        if (f.section != section) {
            section = f.section;
            out << "\n[" << section << "]\n";
        }
        out << f.key << " = " << f.get(cfg).dump();
        if (!f.comment.empty()) out << "  # " << f.comment;
        out << "\n";
    }
    out << "\n[audio.audience]\n";
    for (const auto& e : cfg.audio.audience) out << e.id << " = " << vec_to_json(e.position).dump() << "\n";
    return out.str();
}

} // namespace drumcoach
