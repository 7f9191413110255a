#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "drumcoach/events.hpp"
#include "drumcoach/replay.hpp"
#include "drumcoach/session.hpp"

namespace drumcoach {

/// One scripted attempt: walk the menus, count down, then stream a replayed challenge.
struct AttemptPlan {
    std::string challenge_id;
    std::string character_id = "drummer";
    ReplayConfig replay;
    std::int64_t start_ms = 0;
    std::int64_t tick_every_ms = 100;
    bool from_idle = true;
};

/// Builds the event log for one attempt. The replayed frames are placed on the session
/// clock so that offset 0 means "exactly on the beat"; ticks are interleaved and a final
/// tick past the grace period closes the attempt even if the last frames were dropped.
inline std::vector<SessionEvent> attempt_events(const SessionContext& ctx, const AttemptPlan& plan) {
    std::vector<SessionEvent> events;
    std::int64_t now = plan.start_ms;
    events.push_back(event::Tick{now});
    if (plan.from_idle) {
        events.push_back(event::StartChallenge{});
        events.push_back(event::StartChallenge{});
        events.push_back(event::Select{SelectKind::character, plan.character_id});
    }
    events.push_back(event::Select{SelectKind::challenge, plan.challenge_id});
    events.push_back(event::StartChallenge{});
    const std::int64_t performance_start = now + ctx.session.countdown_ms;
    events.push_back(event::Tick{performance_start});

    ReplayConfig cfg = plan.replay;
    cfg.offset_ms += performance_start;
    const auto& clip = ctx.references.at(plan.challenge_id)->clip;
    const auto frames = replay_frames(clip, cfg);

    const std::int64_t last = performance_start + static_cast<std::int64_t>(static_cast<double>(clip.duration_ms()) /
                                                                            cfg.time_scale) +
                              plan.replay.offset_ms + ctx.session.end_grace_ms + 1;
    std::int64_t next_tick = performance_start + plan.tick_every_ms;
    for (const auto& f : frames) {
        while (next_tick < f.t_ms) {
            events.push_back(event::Tick{next_tick});
            next_tick += plan.tick_every_ms;
        }
        events.push_back(event::FrameIn{f});
    }
    const std::int64_t end = std::max(last, frames.empty() ? last : frames.back().t_ms + 1);
    while (next_tick < end) {
        events.push_back(event::Tick{next_tick});
        next_tick += plan.tick_every_ms;
    }
    events.push_back(event::Tick{end});
    return events;
}

/// Total of the attempt, or nullopt when it ended unscored.
inline std::optional<ScoreReport> simulate_attempt(const SessionContext& ctx, const AttemptPlan& plan,
                                                   const ProgressStore& progress, std::uint64_t seed) {
    SessionState state = make_session(ctx, progress, CueLibrary{}, seed);
    const auto trace = run_session(attempt_events(ctx, plan), ctx, state);
    for (const auto& o : trace) {
        if (const auto* r = o.as<output::ResultsReady>()) return r->report;
    }
    return std::nullopt;
}

} // namespace drumcoach
