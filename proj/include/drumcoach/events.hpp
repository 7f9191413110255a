#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "drumcoach/audio.hpp"
#include "drumcoach/error.hpp"
#include "drumcoach/frame_json.hpp"
#include "drumcoach/scoring.hpp"
#include "drumcoach/skeleton.hpp"

namespace drumcoach {

// ---- input events ----------------------------------------------------------

enum class SelectKind { character, challenge };

inline std::string_view to_string(SelectKind k) { return k == SelectKind::character ? "character" : "challenge"; }

namespace event {
struct FrameIn {
    SkeletonFrame frame;
};
struct Select {
    SelectKind kind = SelectKind::challenge;
    std::string id;
};
struct StartChallenge {};
struct Tick {
    std::int64_t now_ms = 0;
};
struct Reset {};
} // namespace event

using SessionEvent = std::variant<event::FrameIn, event::Select, event::StartChallenge, event::Tick, event::Reset>;

inline std::string_view event_name(const SessionEvent& ev) {
    static constexpr std::string_view names[] = {"frame", "select", "start", "tick", "reset"};
    return names[ev.index()];
}

// ---- outputs ---------------------------------------------------------------

enum class Phase { Idle, Guided, CharacterSelect, ChallengeSelect, Countdown, Performing, Results };

inline constexpr Phase kAllPhases[] = {Phase::Idle,      Phase::Guided,     Phase::CharacterSelect, Phase::ChallengeSelect,
                                       Phase::Countdown, Phase::Performing, Phase::Results};

inline std::string_view to_string(Phase p) {
    switch (p) {
    case Phase::Idle: return "idle";
    case Phase::Guided: return "guided";
    case Phase::CharacterSelect: return "character_select";
    case Phase::ChallengeSelect: return "challenge_select";
    case Phase::Countdown: return "countdown";
    case Phase::Performing: return "performing";
    case Phase::Results: return "results";
    }
    return "idle";
}

enum class AudienceMode { Standby, Cheering, Applauding };

inline std::string_view to_string(AudienceMode m) {
    switch (m) {
    case AudienceMode::Standby: return "standby";
    case AudienceMode::Cheering: return "cheering";
    case AudienceMode::Applauding: return "applauding";
    }
    return "standby";
}

namespace output {
struct ScoreUpdate {
    double frame_score = 0.0;
    double rolling_avg = 0.0;
    double total_so_far = 0.0;
    std::size_t matched_index = 0;
};
struct AudienceChanged {
    AudienceMode mode = AudienceMode::Standby;
};
struct SoundRequested {
    CueCategory category = CueCategory::ambient;
    std::string emitter_id;
};
struct SoundPlayed {
    CueCategory category = CueCategory::ambient;
    std::string emitter_id;
    SoundEvent sound;
};
struct KeyPoseHit {
    std::string label;
    double credit = 0.0;
    double offset_ms = 0.0;
};
struct ChallengeUnlocked {
    std::string id;
};
struct ResultsReady {
    std::string challenge_id;
    ScoreReport report;
};
struct PhaseChanged {
    Phase phase = Phase::Idle;
    std::string detail;
    std::int64_t remaining_ms = 0;
};
struct Selected {
    SelectKind kind = SelectKind::challenge;
    std::string id;
};
struct NoOp {
    std::string reason;
    std::string event;
};
} // namespace output

struct SessionOutput {
    std::int64_t t_ms = 0;
    std::variant<output::ScoreUpdate, output::AudienceChanged, output::SoundRequested, output::SoundPlayed,
                 output::KeyPoseHit, output::ChallengeUnlocked, output::ResultsReady, output::PhaseChanged,
                 output::Selected, output::NoOp>
        body;

    template <typename T>
    const T* as() const {
        return std::get_if<T>(&body);
    }
};

// ---- JSON ------------------------------------------------------------------

inline Json report_to_json(const ScoreReport& r) {
    Json keys = Json::array();
    for (const auto& k : r.key_poses) {
        Json j;
        j["label"] = k.label;
        j["key_t_ms"] = k.key_t_ms;
        j["matched_perf_t_ms"] = k.matched_perf_t_ms ? Json(*k.matched_perf_t_ms) : Json(nullptr);
        j["angular_error"] = k.angular_error;
        j["timing_offset_ms"] = k.timing_offset_ms ? Json(*k.timing_offset_ms) : Json(nullptr);
        j["credit"] = k.credit;
        keys.push_back(std::move(j));
    }
    Json out;
    out["pose_score"] = r.pose_score;
    out["timing_score"] = r.timing_score;
    out["total"] = r.total;
    out["key_poses"] = std::move(keys);
    return out;
}

inline ScoreReport report_from_json(const Json& j) {
    ScoreReport r;
    r.pose_score = j.at("pose_score").get<double>();
    r.timing_score = j.at("timing_score").get<double>();
    r.total = j.at("total").get<double>();
    for (const auto& k : j.at("key_poses")) {
        KeyPoseResult kp;
        kp.label = k.at("label").get<std::string>();
        kp.key_t_ms = k.at("key_t_ms").get<std::int64_t>();
        if (!k.at("matched_perf_t_ms").is_null()) kp.matched_perf_t_ms = k.at("matched_perf_t_ms").get<std::int64_t>();
        kp.angular_error = k.at("angular_error").get<double>();
        if (!k.at("timing_offset_ms").is_null()) kp.timing_offset_ms = k.at("timing_offset_ms").get<double>();
        kp.credit = k.at("credit").get<double>();
        r.key_poses.push_back(std::move(kp));
    }
    return r;
}

/// Event JSON without the frame payload variant: {"type": ..., ...}.
inline Json event_to_json(const SessionEvent& ev) {
    Json j;
    j["type"] = std::string(event_name(ev));
    std::visit(
        [&j](const auto& e) {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, event::FrameIn>) {
                j["frame"] = frame_to_json(e.frame);
            } else if constexpr (std::is_same_v<T, event::Select>) {
                j["kind"] = std::string(to_string(e.kind));
                j["id"] = e.id;
            } else if constexpr (std::is_same_v<T, event::Tick>) {
                j["now_ms"] = e.now_ms;
            }
        },
        ev);
    return j;
}

/// Throws Error(Schema) on unknown types or missing fields.
inline SessionEvent event_from_json(const Json& j) {
    try {
        const auto type = j.at("type").get<std::string>();
        if (type == "frame") return event::FrameIn{frame_from_json(j.at("frame"))};
        if (type == "select") {
            const auto kind = j.at("kind").get<std::string>();
            if (kind != "character" && kind != "challenge") throw Error(ErrorKind::Schema, "unknown select kind " + kind);
            return event::Select{kind == "character" ? SelectKind::character : SelectKind::challenge,
                                 j.at("id").get<std::string>()};
        }
        if (type == "start") return event::StartChallenge{};
        if (type == "tick") return event::Tick{j.at("now_ms").get<std::int64_t>()};
        if (type == "reset") return event::Reset{};
        throw Error(ErrorKind::Schema, "unknown event type " + type);
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::Schema, std::string("bad event: ") + e.what());
    }
}

inline Json output_to_json(const SessionOutput& out) {
    Json j;
    std::visit(
        [&j, &out](const auto& o) {
            using T = std::decay_t<decltype(o)>;
            auto head = [&j, &out](const char* type) {
                j["type"] = type;
                j["t_ms"] = out.t_ms;
            };
            if constexpr (std::is_same_v<T, output::ScoreUpdate>) {
                head("score_update");
                j["frame_score"] = o.frame_score;
                j["rolling_avg"] = o.rolling_avg;
                j["total_so_far"] = o.total_so_far;
                j["matched_index"] = o.matched_index;
            } else if constexpr (std::is_same_v<T, output::AudienceChanged>) {
                head("audience_changed");
                j["mode"] = std::string(to_string(o.mode));
            } else if constexpr (std::is_same_v<T, output::SoundRequested>) {
                head("sound_requested");
                j["category"] = std::string(to_string(o.category));
                j["emitter_id"] = o.emitter_id;
            } else if constexpr (std::is_same_v<T, output::SoundPlayed>) {
                head("sound_played");
                j["category"] = std::string(to_string(o.category));
                j["emitter_id"] = o.emitter_id;
                j["cue_id"] = o.sound.cue_id;
                j["gain"] = o.sound.gain;
                j["pan"] = o.sound.pan;
                j["start_t_ms"] = o.sound.start_t_ms;
            } else if constexpr (std::is_same_v<T, output::KeyPoseHit>) {
                head("key_pose_hit");
                j["label"] = o.label;
                j["credit"] = o.credit;
                j["offset_ms"] = o.offset_ms;
            } else if constexpr (std::is_same_v<T, output::ChallengeUnlocked>) {
                head("challenge_unlocked");
                j["id"] = o.id;
            } else if constexpr (std::is_same_v<T, output::ResultsReady>) {
                head("results_ready");
                j["challenge_id"] = o.challenge_id;
                j["report"] = report_to_json(o.report);
            } else if constexpr (std::is_same_v<T, output::PhaseChanged>) {
                head("phase_changed");
                j["phase"] = std::string(to_string(o.phase));
                j["detail"] = o.detail;
                j["remaining_ms"] = o.remaining_ms;
            } else if constexpr (std::is_same_v<T, output::Selected>) {
                head("selected");
                j["kind"] = std::string(to_string(o.kind));
                j["id"] = o.id;
            } else if constexpr (std::is_same_v<T, output::NoOp>) {
                head("noop");
                j["reason"] = o.reason;
                j["event"] = o.event;
            }
        },
        out.body);
    return j;
}

namespace detail {

template <typename Enum, std::size_t N>
Enum enum_from(const Json& j, const Enum (&values)[N], std::string_view what) {
    const auto s = j.get<std::string>();
    for (auto v : values) {
        if (to_string(v) == s) return v;
    }
    throw Error(ErrorKind::Schema, "unknown " + std::string(what) + " " + s);
}

} // namespace detail

inline SessionOutput output_from_json(const Json& j) {
    static constexpr AudienceMode modes[] = {AudienceMode::Standby, AudienceMode::Cheering, AudienceMode::Applauding};
    static constexpr CueCategory cats[] = {CueCategory::cheer, CueCategory::applause, CueCategory::ambient};
    static constexpr SelectKind kinds[] = {SelectKind::character, SelectKind::challenge};
    try {
        SessionOutput out;
        out.t_ms = j.at("t_ms").get<std::int64_t>();
        const auto type = j.at("type").get<std::string>();
        if (type == "score_update") {
            out.body = output::ScoreUpdate{j.at("frame_score").get<double>(), j.at("rolling_avg").get<double>(),
                                           j.at("total_so_far").get<double>(), j.at("matched_index").get<std::size_t>()};
        } else if (type == "audience_changed") {
            out.body = output::AudienceChanged{detail::enum_from(j.at("mode"), modes, "mode")};
        } else if (type == "sound_requested") {
            out.body = output::SoundRequested{detail::enum_from(j.at("category"), cats, "category"),
                                              j.at("emitter_id").get<std::string>()};
        } else if (type == "sound_played") {
            output::SoundPlayed p;
            p.category = detail::enum_from(j.at("category"), cats, "category");
            p.emitter_id = j.at("emitter_id").get<std::string>();
            p.sound = {j.at("cue_id").get<std::string>(), j.at("gain").get<double>(), j.at("pan").get<double>(),
                       j.at("start_t_ms").get<std::int64_t>()};
            out.body = std::move(p);
        } else if (type == "key_pose_hit") {
            out.body = output::KeyPoseHit{j.at("label").get<std::string>(), j.at("credit").get<double>(),
                                          j.at("offset_ms").get<double>()};
        } else if (type == "challenge_unlocked") {
            out.body = output::ChallengeUnlocked{j.at("id").get<std::string>()};
        } else if (type == "results_ready") {
            out.body = output::ResultsReady{j.at("challenge_id").get<std::string>(), report_from_json(j.at("report"))};
        } else if (type == "phase_changed") {
            out.body = output::PhaseChanged{detail::enum_from(j.at("phase"), kAllPhases, "phase"),
                                            j.at("detail").get<std::string>(), j.at("remaining_ms").get<std::int64_t>()};
        } else if (type == "selected") {
            out.body = output::Selected{detail::enum_from(j.at("kind"), kinds, "kind"), j.at("id").get<std::string>()};
        } else if (type == "noop") {
            out.body = output::NoOp{j.at("reason").get<std::string>(), j.at("event").get<std::string>()};
        } else {
            throw Error(ErrorKind::Schema, "unknown output type " + type);
        }
        return out;
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::Schema, std::string("bad output: ") + e.what());
    }
}

} // namespace drumcoach
