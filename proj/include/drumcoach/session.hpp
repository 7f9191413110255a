#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "drumcoach/audio.hpp"
#include "drumcoach/events.hpp"
#include "drumcoach/library.hpp"
#include "drumcoach/scoring.hpp"

namespace drumcoach {

struct SessionConfig {
    double cheer_threshold = 70.0;
    double applaud_threshold = 90.0;
    std::int64_t applaud_duration_ms = 3000;
    std::int64_t cheer_hold_ms = 1000;
    std::int64_t silence_ms = 1000;
    std::int64_t countdown_ms = 3000;
    std::int64_t guide_step_ms = 4000;
    std::vector<std::string> guide_steps = {"welcome", "gesture_demo", "scoring_demo"};
    std::int64_t end_grace_ms = 1000;
    std::int64_t ambient_interval_ms = 0;
    std::string participant_id = "guest";

    friend bool operator==(const SessionConfig&, const SessionConfig&) = default;
};

inline void validate(const SessionConfig& cfg) {
    auto in_range = [](double v) { return v >= 0.0 && v <= 100.0; };
    if (!in_range(cfg.cheer_threshold) || !in_range(cfg.applaud_threshold)) {
        throw Error(ErrorKind::Config, "audience thresholds must lie in [0,100]");
    }
    if (cfg.applaud_duration_ms <= 0 || cfg.cheer_hold_ms <= 0 || cfg.silence_ms <= 0) {
        throw Error(ErrorKind::Config, "audience durations must be positive");
    }
    if (cfg.countdown_ms < 0 || cfg.guide_step_ms <= 0 || cfg.end_grace_ms < 0 || cfg.ambient_interval_ms < 0) {
        throw Error(ErrorKind::Config, "session durations must be non-negative");
    }
    if (cfg.guide_steps.empty()) throw Error(ErrorKind::Config, "guide_steps must not be empty");
    if (cfg.participant_id.empty()) throw Error(ErrorKind::Config, "participant_id must not be empty");
}

struct NamedEmitter {
    std::string id;
    Vec3 position;

    friend bool operator==(const NamedEmitter&, const NamedEmitter&) = default;
};

struct AudioScene {
    Listener listener{{0.0, 1.6, 0.0}, {0.0, 0.0, -1.0}, 1.0, 20.0};
    std::vector<NamedEmitter> audience = {{"audience_left", {-3.0, 1.5, -2.0}},
                                          {"audience_front", {0.0, 1.5, -4.0}},
                                          {"audience_right", {3.0, 1.5, -2.0}}};
    Vec3 ambient_position{0.0, 3.0, 6.0};
};

inline bool operator==(const Listener& a, const Listener& b) {
    return a.position == b.position && a.facing == b.facing && a.d_ref == b.d_ref && a.d_max == b.d_max;
}
inline bool operator==(const AudioScene& a, const AudioScene& b) {
    return a.listener == b.listener && a.audience == b.audience && a.ambient_position == b.ambient_position;
}

/// Immutable inputs shared by every event of a session.
struct SessionContext {
    const Catalog* catalog = nullptr;
    ScoringConfig scoring;
    SessionConfig session;
    AudioScene audio;
    std::map<std::string, std::shared_ptr<const Reference>> references;

    SessionContext() = default;
    SessionContext(const Catalog& cat, ScoringConfig sc, SessionConfig ss, AudioScene scene = {})
        : catalog(&cat), scoring(std::move(sc)), session(std::move(ss)), audio(std::move(scene)) {
        validate(scoring);
        validate(session);
        for (const auto& ch : catalog->challenges()) {
            references.emplace(ch.challenge_id, make_reference(catalog->segment(ch.challenge_id), scoring));
        }
    }
};

struct AudienceState {
    AudienceMode mode = AudienceMode::Standby;
    std::optional<std::int64_t> mode_until_ms;
    std::optional<std::int64_t> last_update_ms;
};

struct SessionState {
    Phase phase = Phase::Idle;
    std::size_t guide_step = 0;
    std::int64_t phase_entered_ms = 0;
    std::int64_t now_ms = 0;
    std::string participant_id = "guest";
    std::optional<std::string> character_id;
    std::optional<std::string> challenge_id;
    std::uint64_t rng_seed = 0;
    std::mt19937_64 rng;
    std::optional<OnlineMatcherState> matcher;
    AudienceState audience;
    std::optional<ScoreReport> last_report;
    ProgressStore progress;
    CueLibrary cues;
    std::size_t emitter_cursor = 0;
    std::optional<std::int64_t> next_ambient_ms;
};

inline SessionState make_session(const SessionContext& ctx, ProgressStore progress, CueLibrary cues,
                                 std::uint64_t seed) {
    SessionState s;
    s.participant_id = ctx.session.participant_id;
    s.rng_seed = seed;
    s.rng.seed(seed);
    s.progress = std::move(progress);
    s.progress.participant_id = s.participant_id;
    if (ctx.catalog != nullptr) s.progress.ensure(*ctx.catalog);
    s.cues = std::move(cues);
    return s;
}

using Outputs = std::vector<SessionOutput>;

namespace detail {

template <typename T>
void emit(Outputs& out, std::int64_t t, T body) {
    out.push_back(SessionOutput{t, std::move(body)});
}

} // namespace detail

/// Mode entries emit AudienceChanged (plus SoundRequested for cheering/applause);
/// refreshes of the current mode are silent.
inline Outputs audience_update(AudienceState& aud, double rolling_avg, std::optional<double> keypose_credit,
                               std::int64_t now_ms, const SessionConfig& cfg) {
    Outputs out;
    aud.last_update_ms = now_ms;
    auto enter = [&](AudienceMode mode, std::int64_t until, CueCategory sound) {
        const bool entry = aud.mode != mode;
        aud.mode = mode;
        aud.mode_until_ms = until;
        if (!entry) return;
        detail::emit(out, now_ms, output::AudienceChanged{mode});
        detail::emit(out, now_ms, output::SoundRequested{sound, {}});
    };
    if (keypose_credit && *keypose_credit >= cfg.applaud_threshold) {
        enter(AudienceMode::Applauding, now_ms + cfg.applaud_duration_ms, CueCategory::applause);
    } else if (rolling_avg >= cfg.cheer_threshold && aud.mode != AudienceMode::Applauding) {
        // Applause runs its full duration; cheering cannot cut it short.
        enter(AudienceMode::Cheering, now_ms + cfg.cheer_hold_ms, CueCategory::cheer);
    }
    return out;
}

/// Expiry under the passage of time: timed modes end at their deadline, and any
/// mode ends once no score update arrived for silence_ms.
inline Outputs audience_tick(AudienceState& aud, std::int64_t now_ms, const SessionConfig& cfg) {
    Outputs out;
    if (aud.mode == AudienceMode::Standby) return out;
    const bool expired = aud.mode_until_ms && now_ms >= *aud.mode_until_ms;
    const bool silent = !aud.last_update_ms || now_ms - *aud.last_update_ms >= cfg.silence_ms;
    if (expired || silent) {
        aud.mode = AudienceMode::Standby;
        aud.mode_until_ms.reset();
        detail::emit(out, now_ms, output::AudienceChanged{AudienceMode::Standby});
    }
    return out;
}

namespace detail {

inline void append(Outputs& to, Outputs from) {
    for (auto& o : from) to.push_back(std::move(o));
}

inline void enter_phase(SessionState& s, Phase phase, Outputs& out, std::string detail_text = {},
                        std::int64_t remaining = 0) {
    s.phase = phase;
    s.phase_entered_ms = s.now_ms;
    emit(out, s.now_ms, output::PhaseChanged{phase, std::move(detail_text), remaining});
}

inline void noop(Outputs& out, const SessionState& s, std::string reason, const SessionEvent& ev) {
    emit(out, s.now_ms, output::NoOp{std::move(reason), std::string(event_name(ev))});
}

/// Resolves every SoundRequested in `out` (from index `from`) into a concrete cue.
inline void resolve_sounds(SessionState& s, const SessionContext& ctx, Outputs& out, std::size_t from) {
    Outputs resolved;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (i < from) continue;
        auto* req = std::get_if<output::SoundRequested>(&out[i].body);
        if (req == nullptr) continue;
        Vec3 where = ctx.audio.ambient_position;
        if (req->category == CueCategory::ambient) {
            req->emitter_id = "ambient";
        } else if (!ctx.audio.audience.empty()) {
            const auto& e = ctx.audio.audience[s.emitter_cursor % ctx.audio.audience.size()];
            s.emitter_cursor += 1;
            req->emitter_id = e.id;
            where = e.position;
        } else {
            req->emitter_id = "audience";
        }
        if (s.cues.cues(req->category).empty()) continue;
        const SoundCue& cue = select_cue(s.cues, req->category, s.rng);
        const auto placed = spatialize(where, ctx.audio.listener);
        output::SoundPlayed played{req->category, req->emitter_id, {cue.cue_id, placed.gain, placed.pan, out[i].t_ms}};
        // Keep each SoundPlayed right after its request.
        out.insert(out.begin() + static_cast<std::ptrdiff_t>(i) + 1, SessionOutput{out[i].t_ms, std::move(played)});
        ++i;
    }
}

inline void reset_audience(SessionState& s, Outputs& out) {
    if (s.audience.mode != AudienceMode::Standby) emit(out, s.now_ms, output::AudienceChanged{AudienceMode::Standby});
    s.audience = {};
}

inline void finish_attempt(SessionState& s, const SessionContext& ctx, Outputs& out) {
    const std::string id = *s.challenge_id;
    reset_audience(s, out);
    try {
        ScoreReport report = finalize(*s.matcher, ctx.scoring);
        auto unlocked = unlock_check(std::move(s.progress), *ctx.catalog, id, report.total);
        s.progress = std::move(unlocked.store);
        s.matcher.reset();
        s.last_report = report;
        enter_phase(s, Phase::Results, out);
        emit(out, s.now_ms, output::ResultsReady{id, std::move(report)});
        for (auto& next : unlocked.newly_unlocked) emit(out, s.now_ms, output::ChallengeUnlocked{std::move(next)});
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::IncompleteAttempt) throw;
        s.progress = record_unscored_attempt(std::move(s.progress), *ctx.catalog, id);
        s.matcher.reset();
        emit(out, s.now_ms, output::NoOp{"incomplete attempt", "end"});
        enter_phase(s, Phase::ChallengeSelect, out);
    }
}

inline void start_performing(SessionState& s, const SessionContext& ctx, std::int64_t start_ms, Outputs& out) {
    s.matcher.emplace(ctx.references.at(*s.challenge_id), start_ms);
    s.audience = {};
    s.phase = Phase::Performing;
    s.phase_entered_ms = start_ms;
    emit(out, s.now_ms, output::PhaseChanged{Phase::Performing, *s.challenge_id, 0});
}

/// Applies timed transitions up to `now`.
inline void advance_clock(SessionState& s, const SessionContext& ctx, std::int64_t now, Outputs& out) {
    if (now > s.now_ms) s.now_ms = now;
    const auto& cfg = ctx.session;

    if (s.phase == Phase::Guided) {
        while (s.phase == Phase::Guided && s.now_ms - s.phase_entered_ms >= cfg.guide_step_ms) {
            const auto entered = s.phase_entered_ms + cfg.guide_step_ms;
            if (s.guide_step + 1 < cfg.guide_steps.size()) {
                s.guide_step += 1;
                s.phase_entered_ms = entered;
                emit(out, s.now_ms, output::PhaseChanged{Phase::Guided, cfg.guide_steps[s.guide_step], 0});
            } else {
                enter_phase(s, Phase::CharacterSelect, out);
            }
        }
    }
    if (s.phase == Phase::Countdown && s.now_ms >= s.phase_entered_ms + cfg.countdown_ms) {
        start_performing(s, ctx, s.phase_entered_ms + cfg.countdown_ms, out);
    }
    if (s.phase == Phase::Performing) {
        append(out, audience_tick(s.audience, s.now_ms, cfg));
        const auto& ref = *s.matcher->ref;
        if (s.now_ms > s.matcher->start_ms + ref.duration_ms() + cfg.end_grace_ms) finish_attempt(s, ctx, out);
    }
    if (cfg.ambient_interval_ms > 0 && s.phase != Phase::Idle) {
        if (!s.next_ambient_ms) s.next_ambient_ms = s.now_ms + cfg.ambient_interval_ms;
        if (s.now_ms >= *s.next_ambient_ms) {
            emit(out, s.now_ms, output::SoundRequested{CueCategory::ambient, "ambient"});
            s.next_ambient_ms = s.now_ms + cfg.ambient_interval_ms;
        }
    }
}

inline void on_frame(SessionState& s, const SessionContext& ctx, const event::FrameIn& ev, const SessionEvent& raw,
                     Outputs& out) {
    advance_clock(s, ctx, ev.frame.t_ms, out);
    // Frames outside a performance are the idle camera stream: they only move the clock.
    if (s.phase != Phase::Performing) return;

    const auto valid = validate_frame(ev.frame);
    if (!valid.ok()) return noop(out, s, "invalid frame: " + valid.violations.front().what, raw);
    FrameScoreUpdate update;
    try {
        update = online_step(*s.matcher, ev.frame, ctx.scoring);
    } catch (const Error& e) {
        return noop(out, s, e.what(), raw);
    }
    const auto t = s.now_ms;
    emit(out, t, output::ScoreUpdate{update.frame_score, update.rolling_avg, update.total_so_far, update.matched_index});
    std::optional<double> best_credit;
    for (const auto& hit : update.hits) {
        emit(out, t, output::KeyPoseHit{hit.label, hit.credit, hit.offset_ms});
        if (!best_credit || hit.credit > *best_credit) best_credit = hit.credit;
    }
    append(out, audience_update(s.audience, update.rolling_avg, best_credit, t, ctx.session));
    if (update.reached_end) finish_attempt(s, ctx, out);
}

inline void on_select(SessionState& s, const SessionContext& ctx, const event::Select& ev, const SessionEvent& raw,
                      Outputs& out) {
    if (s.phase == Phase::Results && ev.kind == SelectKind::challenge) enter_phase(s, Phase::ChallengeSelect, out);

    if (ev.kind == SelectKind::character) {
        if (s.phase != Phase::CharacterSelect && s.phase != Phase::ChallengeSelect) {
            return noop(out, s, "character selection not open in " + std::string(to_string(s.phase)), raw);
        }
        if (ev.id.empty()) return noop(out, s, "empty character id", raw);
        s.character_id = ev.id;
        emit(out, s.now_ms, output::Selected{SelectKind::character, ev.id});
        if (s.phase == Phase::CharacterSelect) enter_phase(s, Phase::ChallengeSelect, out);
        return;
    }

    if (s.phase != Phase::ChallengeSelect) {
        return noop(out, s, "challenge selection not open in " + std::string(to_string(s.phase)), raw);
    }
    if (ctx.catalog == nullptr || ctx.catalog->find(ev.id) == nullptr) return noop(out, s, "unknown challenge", raw);
    if (!s.progress.is_unlocked(ev.id)) return noop(out, s, "locked", raw);
    s.challenge_id = ev.id;
    emit(out, s.now_ms, output::Selected{SelectKind::challenge, ev.id});
}

inline void on_start(SessionState& s, const SessionContext& ctx, const SessionEvent& raw, Outputs& out) {
    switch (s.phase) {
    case Phase::Idle:
        s.guide_step = 0;
        return enter_phase(s, Phase::Guided, out, ctx.session.guide_steps.front());
    case Phase::Guided: return enter_phase(s, Phase::CharacterSelect, out);
    case Phase::CharacterSelect: return noop(out, s, "select a character first", raw);
    case Phase::ChallengeSelect:
        if (!s.challenge_id) return noop(out, s, "no challenge selected", raw);
        enter_phase(s, Phase::Countdown, out, *s.challenge_id, ctx.session.countdown_ms);
        return advance_clock(s, ctx, s.now_ms, out);
    case Phase::Countdown: return noop(out, s, "countdown running", raw);
    case Phase::Performing: return noop(out, s, "already performing", raw);
    case Phase::Results: return enter_phase(s, Phase::ChallengeSelect, out);
    }
}

} // namespace detail

/// Advances the session by one event in place. Never throws for out-of-phase input:
/// such events produce a NoOp output instead.
inline Outputs step(SessionState& s, const SessionContext& ctx, const SessionEvent& ev) {
    Outputs out;
    std::visit(
        [&](const auto& e) {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, event::FrameIn>) {
                detail::on_frame(s, ctx, e, ev, out);
            } else if constexpr (std::is_same_v<T, event::Select>) {
                detail::on_select(s, ctx, e, ev, out);
            } else if constexpr (std::is_same_v<T, event::StartChallenge>) {
                detail::on_start(s, ctx, ev, out);
            } else if constexpr (std::is_same_v<T, event::Tick>) {
                if (e.now_ms < s.now_ms) return detail::noop(out, s, "tick went backwards", ev);
                detail::advance_clock(s, ctx, e.now_ms, out);
            } else if constexpr (std::is_same_v<T, event::Reset>) {
                detail::reset_audience(s, out);
                s.matcher.reset();
                s.character_id.reset();
                s.challenge_id.reset();
                s.guide_step = 0;
                s.next_ambient_ms.reset();
                detail::enter_phase(s, Phase::Idle, out);
            }
        },
        ev);
    detail::resolve_sounds(s, ctx, out, 0);
    return out;
}

/// Pure form: the input state is left untouched.
inline std::pair<SessionState, Outputs> apply_event(const SessionState& state, const SessionEvent& ev,
                                                    const SessionContext& ctx) {
    SessionState next = state;
    auto out = step(next, ctx, ev);
    return {std::move(next), std::move(out)};
}

/// Headless driver: the trace starts with PhaseChanged(Idle), then every output in order.
/// `on_results` is called after each ResultsReady so callers can persist progress.
template <typename Events, typename OnResults>
Outputs run_session(const Events& events, const SessionContext& ctx, SessionState& state, OnResults&& on_results) {
    Outputs trace;
    detail::emit(trace, state.now_ms, output::PhaseChanged{state.phase, {}, 0});
    for (const SessionEvent& ev : events) {
        auto out = step(state, ctx, ev);
        bool scored = false;
        for (auto& o : out) {
            if (o.as<output::ResultsReady>() != nullptr) scored = true;
            trace.push_back(std::move(o));
        }
        if (scored) on_results(state);
    }
    return trace;
}

template <typename Events>
Outputs run_session(const Events& events, const SessionContext& ctx, SessionState& state) {
    return run_session(events, ctx, state, [](const SessionState&) {});
}

} // namespace drumcoach
