#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "drumcoach/error.hpp"
#include "drumcoach/events.hpp"
#include "drumcoach/frame_json.hpp"
#include "drumcoach/replay.hpp"

namespace drumcoach::wire {

inline constexpr std::size_t kMaxLineBytes = 64 * 1024;

struct Hello {
    int format_version = kFormatVersion;
    std::string joint_set = kJointSet;
};

struct Frame {
    SkeletonFrame frame;
};

/// Starts the gateway's simulated camera on a catalog challenge.
struct ReplayStart {
    std::string challenge_id;
    ReplayConfig config;
};
struct ReplayStop {};

struct Command {
    std::variant<event::Select, event::StartChallenge, event::Tick, event::Reset, ReplayStart, ReplayStop> body;
};

struct ChallengeStatus {
    std::string id;
    std::string title;
    int order_index = 0;
    bool unlocked = false;
    std::optional<double> best_score;
};

/// Sent after Hello so a client can rebuild its view without history.
struct Snapshot {
    Phase phase = Phase::Idle;
    std::string participant_id;
    std::optional<std::string> character_id;
    std::optional<std::string> challenge_id;
    AudienceMode audience = AudienceMode::Standby;
    std::vector<ChallengeStatus> challenges;
};

struct Output {
    std::variant<SessionOutput, Snapshot> body;
};

struct ErrorMsg {
    std::string code;
    std::string detail;
};

using Message = std::variant<Hello, Frame, Command, Output, ErrorMsg>;

namespace detail {

inline Json command_to_json(const Command& c) {
    return std::visit(
        [](const auto& e) -> Json {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, ReplayStart>) {
                Json j;
                j["type"] = "replay_start";
                j["challenge_id"] = e.challenge_id;
                j["noise_deg"] = e.config.noise_deg;
                j["dropout_p"] = e.config.dropout_p;
                j["time_scale"] = e.config.time_scale;
                j["offset_ms"] = e.config.offset_ms;
                j["seed"] = e.config.seed;
                return j;
            } else if constexpr (std::is_same_v<T, ReplayStop>) {
                Json j;
                j["type"] = "replay_stop";
                return j;
            } else {
                return event_to_json(SessionEvent{e});
            }
        },
        c.body);
}

inline Command command_from_json(const Json& j) {
    const auto type = j.at("type").get<std::string>();
    if (type == "replay_start") {
        ReplayStart r;
        r.challenge_id = j.at("challenge_id").get<std::string>();
        r.config.clip_id = r.challenge_id;
        r.config.noise_deg = j.value("noise_deg", 0.0);
        r.config.dropout_p = j.value("dropout_p", 0.0);
        r.config.time_scale = j.value("time_scale", 1.0);
        r.config.offset_ms = j.value("offset_ms", std::int64_t{0});
        r.config.seed = j.value("seed", std::uint64_t{0});
        validate(r.config);
        return {r};
    }
    if (type == "replay_stop") return {ReplayStop{}};
    if (type == "frame") throw Error(ErrorKind::Schema, "frames travel as k=frame, not as commands");
    const SessionEvent ev = event_from_json(j);
    return std::visit(
        [](const auto& e) -> Command {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, event::FrameIn>) {
                throw Error(ErrorKind::Schema, "frame is not a command");
            } else {
                return {e};
            }
        },
        ev);
}

inline Json snapshot_to_json(const Snapshot& s) {
    Json j;
    j["type"] = "snapshot";
    j["phase"] = std::string(to_string(s.phase));
    j["participant_id"] = s.participant_id;
    j["character_id"] = s.character_id ? Json(*s.character_id) : Json(nullptr);
    j["challenge_id"] = s.challenge_id ? Json(*s.challenge_id) : Json(nullptr);
    j["audience"] = std::string(to_string(s.audience));
    Json list = Json::array();
    for (const auto& c : s.challenges) {
        Json e;
        e["id"] = c.id;
        e["title"] = c.title;
        e["order_index"] = c.order_index;
        e["unlocked"] = c.unlocked;
        e["best_score"] = c.best_score ? Json(*c.best_score) : Json(nullptr);
        list.push_back(std::move(e));
    }
    j["challenges"] = std::move(list);
    return j;
}

inline Snapshot snapshot_from_json(const Json& j) {
    static constexpr AudienceMode modes[] = {AudienceMode::Standby, AudienceMode::Cheering, AudienceMode::Applauding};
    Snapshot s;
    s.phase = drumcoach::detail::enum_from(j.at("phase"), kAllPhases, "phase");
    s.participant_id = j.at("participant_id").get<std::string>();
    if (!j.at("character_id").is_null()) s.character_id = j.at("character_id").get<std::string>();
    if (!j.at("challenge_id").is_null()) s.challenge_id = j.at("challenge_id").get<std::string>();
    s.audience = drumcoach::detail::enum_from(j.at("audience"), modes, "audience");
    for (const auto& e : j.at("challenges")) {
        ChallengeStatus c;
        c.id = e.at("id").get<std::string>();
        c.title = e.at("title").get<std::string>();
        c.order_index = e.at("order_index").get<int>();
        c.unlocked = e.at("unlocked").get<bool>();
        if (!e.at("best_score").is_null()) c.best_score = e.at("best_score").get<double>();
        s.challenges.push_back(std::move(c));
    }
    return s;
}

} // namespace detail

inline std::string_view kind_tag(const Message& m) {
    static constexpr std::string_view tags[] = {"hello", "frame", "cmd", "out", "error"};
    return tags[m.index()];
}

inline Json to_json(const Message& m) {
    Json payload = std::visit(
        [](const auto& v) -> Json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Hello>) {
                Json j;
                j["format_version"] = v.format_version;
                j["joint_set"] = v.joint_set;
                return j;
            } else if constexpr (std::is_same_v<T, Frame>) {
                return frame_to_json(v.frame);
            } else if constexpr (std::is_same_v<T, Command>) {
                return detail::command_to_json(v);
            } else if constexpr (std::is_same_v<T, Output>) {
                if (const auto* snap = std::get_if<Snapshot>(&v.body)) return detail::snapshot_to_json(*snap);
                return output_to_json(std::get<SessionOutput>(v.body));
            } else {
                Json j;
                j["code"] = v.code;
                j["detail"] = v.detail;
                return j;
            }
        },
        m);
    Json out;
    out["k"] = std::string(kind_tag(m));
    out["v"] = std::move(payload);
    return out;
}

/// One line, newline-terminated.
inline std::string encode(const Message& m) { return to_json(m).dump() + "\n"; }

/// Decodes one line (trailing newline optional). Throws FrameTooLarge or MalformedLine;
/// well-formed lines with an unknown kind or a bad payload decode to ErrorMsg.
inline Message decode(std::string_view line) {
    if (line.size() > kMaxLineBytes) {
        throw Error(ErrorKind::FrameTooLarge, std::to_string(line.size()) + " bytes exceeds 64 KiB");
    }
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
    Json j;
    try {
        j = Json::parse(line);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorKind::MalformedLine, e.what());
    }
    if (!j.is_object() || !j.contains("k") || !j["k"].is_string() || !j.contains("v")) {
        throw Error(ErrorKind::MalformedLine, "expected {\"k\": <kind>, \"v\": <payload>}");
    }
    const auto kind = j["k"].get<std::string>();
    const Json& v = j["v"];
    try {
        if (kind == "hello") {
            return Hello{v.at("format_version").get<int>(), v.at("joint_set").get<std::string>()};
        }
        if (kind == "frame") return Frame{frame_from_json(v)};
        if (kind == "cmd") return detail::command_from_json(v);
        if (kind == "out") {
            if (v.value("type", std::string{}) == "snapshot") return Output{detail::snapshot_from_json(v)};
            return Output{output_from_json(v)};
        }
        if (kind == "error") return ErrorMsg{v.at("code").get<std::string>(), v.value("detail", std::string{})};
    } catch (const Json::exception& e) {
        return ErrorMsg{"bad_payload", e.what()};
    } catch (const Error& e) {
        return ErrorMsg{"bad_payload", e.what()};
    }
    return ErrorMsg{"unknown_kind", kind};
}

} // namespace drumcoach::wire
