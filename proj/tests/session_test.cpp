#include <gtest/gtest.h>

#include <algorithm>

#include "drumcoach/demo.hpp"
#include "drumcoach/session.hpp"
#include "drumcoach/simulate.hpp"
#include "support.hpp"

using namespace drumcoach;

namespace {

const Catalog& catalog() {
    static const Catalog c = testing_support::small_catalog();
    return c;
}

SessionContext context(SessionConfig sc = {}) { return SessionContext(catalog(), ScoringConfig{}, std::move(sc)); }

template <typename T>
std::vector<T> collect(const Outputs& out) {
    std::vector<T> v;
    for (const auto& o : out) {
        if (const auto* p = o.as<T>()) v.push_back(*p);
    }
    return v;
}

// Drives a fresh session into `target` using the public events only.
SessionState reach(const SessionContext& ctx, Phase target) {
    auto s = make_session(ctx, ProgressStore{}, demo::cue_library(), 1);
    auto go = [&](SessionEvent ev) { step(s, ctx, ev); };
    if (target == Phase::Idle) return s;
    go(event::StartChallenge{});
    if (target == Phase::Guided) return s;
    go(event::StartChallenge{});
    if (target == Phase::CharacterSelect) return s;
    go(event::Select{SelectKind::character, "drummer"});
    go(event::Select{SelectKind::challenge, "t1"});
    if (target == Phase::ChallengeSelect) return s;
    go(event::StartChallenge{});
    if (target == Phase::Countdown) return s;
    go(event::Tick{ctx.session.countdown_ms});
    if (target == Phase::Performing) return s;
    for (auto f : ctx.references.at("t1")->clip.frames) {
        f.t_ms += ctx.session.countdown_ms;
        go(event::FrameIn{f});
    }
    return s;
}

SkeletonFrame any_frame(std::int64_t t) {
    auto f = catalog().challenges().empty() ? SkeletonFrame{} : catalog().clip("basic_step")->frames[10];
    f.t_ms = t;
    return f;
}

} // namespace

TEST(Phases, EveryReachablePhaseIsReached) {
    const auto ctx = context();
    for (Phase p : kAllPhases) EXPECT_EQ(reach(ctx, p).phase, p) << to_string(p);
}

// Expected phase after each (phase, event); every other combination must be a NoOp or
// leave the phase alone, and nothing may throw.
TEST(Phases, TransitionTable) {
    const auto ctx = context();
    struct Row {
        Phase from;
        std::vector<Phase> after;  // start, select character, select challenge, tick(+1), reset
    };
    const std::vector<Row> table = {
        {Phase::Idle, {Phase::Guided, Phase::Idle, Phase::Idle, Phase::Idle, Phase::Idle}},
        {Phase::Guided, {Phase::CharacterSelect, Phase::Guided, Phase::Guided, Phase::Guided, Phase::Idle}},
        {Phase::CharacterSelect,
         {Phase::CharacterSelect, Phase::ChallengeSelect, Phase::CharacterSelect, Phase::CharacterSelect, Phase::Idle}},
        {Phase::ChallengeSelect,
         {Phase::Countdown, Phase::ChallengeSelect, Phase::ChallengeSelect, Phase::ChallengeSelect, Phase::Idle}},
        {Phase::Countdown, {Phase::Countdown, Phase::Countdown, Phase::Countdown, Phase::Countdown, Phase::Idle}},
        {Phase::Performing, {Phase::Performing, Phase::Performing, Phase::Performing, Phase::Performing, Phase::Idle}},
        {Phase::Results, {Phase::ChallengeSelect, Phase::Results, Phase::ChallengeSelect, Phase::Results, Phase::Idle}},
    };
    for (const auto& row : table) {
        const auto base = reach(ctx, row.from);
        const std::vector<SessionEvent> events = {event::StartChallenge{}, event::Select{SelectKind::character, "x"},
                                                  event::Select{SelectKind::challenge, "t1"},
                                                  event::Tick{base.now_ms + 1}, event::Reset{}};
        for (std::size_t k = 0; k < events.size(); ++k) {
            std::pair<SessionState, Outputs> r;
            ASSERT_NO_THROW(r = apply_event(base, events[k], ctx));
            EXPECT_EQ(r.first.phase, row.after[k]) << to_string(row.from) << " / " << event_name(events[k]);
            // ticks may pass silently; anything else that changes nothing must say why
            const bool tick = std::holds_alternative<event::Tick>(events[k]);
            if (!tick && r.first.phase == row.from && r.second.empty()) ADD_FAILURE() << "silent event";
        }
    }
}

TEST(Phases, ApplyEventLeavesInputUntouched) {
    const auto ctx = context();
    const auto s = reach(ctx, Phase::Idle);
    const auto [next, out] = apply_event(s, event::StartChallenge{}, ctx);
    EXPECT_EQ(s.phase, Phase::Idle);
    EXPECT_EQ(next.phase, Phase::Guided);
}

TEST(Phases, GuidedAdvancesOnItsOwn) {
    const auto ctx = context();
    auto s = reach(ctx, Phase::Guided);
    const auto out = step(s, ctx, event::Tick{ctx.session.guide_step_ms * 3});
    const auto changes = collect<output::PhaseChanged>(out);
    ASSERT_EQ(changes.size(), 3u);
    EXPECT_EQ(changes[0].detail, "gesture_demo");
    EXPECT_EQ(changes[1].detail, "scoring_demo");
    EXPECT_EQ(changes[2].phase, Phase::CharacterSelect);
}

TEST(Phases, CountdownEndsOnTime) {
    const auto ctx = context();
    auto s = reach(ctx, Phase::Countdown);
    EXPECT_TRUE(collect<output::PhaseChanged>(step(s, ctx, event::Tick{ctx.session.countdown_ms - 1})).empty());
    const auto out = step(s, ctx, event::Tick{ctx.session.countdown_ms});
    ASSERT_EQ(collect<output::PhaseChanged>(out).size(), 1u);
    EXPECT_EQ(s.phase, Phase::Performing);
    EXPECT_EQ(s.matcher->start_ms, ctx.session.countdown_ms);
}

TEST(Phases, StaleTickIsANoOp) {
    const auto ctx = context();
    auto s = reach(ctx, Phase::Guided);
    step(s, ctx, event::Tick{500});
    const auto noops = collect<output::NoOp>(step(s, ctx, event::Tick{100}));
    ASSERT_EQ(noops.size(), 1u);
    EXPECT_EQ(noops[0].event, "tick");
}

TEST(Phases, LockedChallengeCannotBeSelected) {
    const auto ctx = context();
    auto s = reach(ctx, Phase::CharacterSelect);
    step(s, ctx, event::Select{SelectKind::character, "drummer"});
    const auto noops = collect<output::NoOp>(step(s, ctx, event::Select{SelectKind::challenge, "t2"}));
    ASSERT_EQ(noops.size(), 1u);
    EXPECT_EQ(noops[0].reason, "locked");
    EXPECT_FALSE(s.challenge_id.has_value());
}

TEST(Attempt, PerfectRunScoresAndUnlocksOnce) {
    const auto ctx = context();
    auto s = make_session(ctx, ProgressStore{}, demo::cue_library(), 3);
    AttemptPlan plan{"t1", "drummer", {}, 0, 100, true};
    int saves = 0;
    auto trace = run_session(attempt_events(ctx, plan), ctx, s, [&](const SessionState&) { ++saves; });
    auto results = collect<output::ResultsReady>(trace);
    ASSERT_EQ(results.size(), 1u);
    EXPECT_EQ(results[0].report.total, 100.0);
    EXPECT_EQ(collect<output::ChallengeUnlocked>(trace).size(), 1u);
    EXPECT_EQ(saves, 1);
    EXPECT_EQ(s.phase, Phase::Results);

    plan.from_idle = false;
    plan.start_ms = s.now_ms + 10;
    trace = run_session(attempt_events(ctx, plan), ctx, s);
    EXPECT_EQ(collect<output::ResultsReady>(trace).size(), 1u);
    EXPECT_TRUE(collect<output::ChallengeUnlocked>(trace).empty());
    EXPECT_EQ(s.progress.entries.at("t1").attempts, 2);
}

TEST(Attempt, CutShortIsRecordedUnscored) {
    const auto ctx = context();
    auto s = reach(ctx, Phase::Performing);
    const auto& frames = ctx.references.at("t1")->clip.frames;
    for (std::size_t i = 0; i < frames.size() / 4; ++i) {
        auto f = frames[i];
        f.t_ms += ctx.session.countdown_ms;
        step(s, ctx, event::FrameIn{f});
    }
    const auto out = step(s, ctx, event::Tick{ctx.session.countdown_ms + 3000 + ctx.session.end_grace_ms + 1});
    const auto noops = collect<output::NoOp>(out);
    ASSERT_EQ(noops.size(), 1u);
    EXPECT_EQ(noops[0].reason, "incomplete attempt");
    EXPECT_EQ(s.phase, Phase::ChallengeSelect);
    EXPECT_EQ(s.progress.entries.at("t1").attempts, 1);
    EXPECT_FALSE(s.progress.entries.at("t1").best_score.has_value());
}

TEST(Attempt, InvalidFrameIsANoOp) {
    const auto ctx = context();
    auto s = reach(ctx, Phase::Performing);
    auto f = any_frame(ctx.session.countdown_ms + 10);
    f.confidence[0] = -1.0;
    const auto noops = collect<output::NoOp>(step(s, ctx, event::FrameIn{f}));
    ASSERT_EQ(noops.size(), 1u);
    EXPECT_EQ(s.phase, Phase::Performing);
}

TEST(Attempt, SameSeedSameTrace) {
    const auto ctx = context();
    AttemptPlan plan{"t1", "drummer", {"", 8.0, 0.05, 1.0, 80, 5}, 0, 100, true};
    auto run = [&] {
        auto s = make_session(ctx, ProgressStore{}, demo::cue_library(), 11);
        std::string text;
        for (const auto& o : run_session(attempt_events(ctx, plan), ctx, s)) text += output_to_json(o).dump() + "\n";
        return text;
    };
    EXPECT_EQ(run(), run());
}

TEST(Audience, ApplauseLastsExactlyItsDuration) {
    SessionConfig cfg;
    AudienceState aud;
    auto out = audience_update(aud, 50.0, 95.0, 1000, cfg);
    ASSERT_EQ(collect<output::AudienceChanged>(out).size(), 1u);
    EXPECT_EQ(aud.mode, AudienceMode::Applauding);
    // keep updates flowing so silence never triggers
    for (std::int64_t t = 1100; t < 1000 + cfg.applaud_duration_ms; t += 100) {
        audience_update(aud, 50.0, std::nullopt, t, cfg);
        ASSERT_TRUE(audience_tick(aud, t, cfg).empty()) << t;
    }
    audience_update(aud, 50.0, std::nullopt, 1000 + cfg.applaud_duration_ms - 1, cfg);
    EXPECT_TRUE(audience_tick(aud, 1000 + cfg.applaud_duration_ms - 1, cfg).empty());
    const auto end = audience_tick(aud, 1000 + cfg.applaud_duration_ms, cfg);
    ASSERT_EQ(end.size(), 1u);
    EXPECT_EQ(aud.mode, AudienceMode::Standby);
}

TEST(Audience, CheeringDoesNotInterruptApplause) {
    SessionConfig cfg;
    AudienceState aud;
    audience_update(aud, 95.0, 100.0, 0, cfg);
    EXPECT_TRUE(audience_update(aud, 95.0, std::nullopt, 100, cfg).empty());
    EXPECT_EQ(aud.mode, AudienceMode::Applauding);
}

TEST(Audience, CheerOnlyAboveThresholdAndSilenceReturnsToStandby) {
    SessionConfig cfg;
    AudienceState aud;
    EXPECT_TRUE(audience_update(aud, cfg.cheer_threshold - 0.1, std::nullopt, 0, cfg).empty());
    const auto out = audience_update(aud, cfg.cheer_threshold, std::nullopt, 0, cfg);
    EXPECT_EQ(collect<output::SoundRequested>(out).at(0).category, CueCategory::cheer);
    // refreshes keep the mode without new outputs
    EXPECT_TRUE(audience_update(aud, 80.0, std::nullopt, 500, cfg).empty());
    EXPECT_TRUE(audience_tick(aud, 500 + cfg.silence_ms - 1, cfg).empty());
    EXPECT_EQ(audience_tick(aud, 500 + cfg.silence_ms, cfg).size(), 1u);
    EXPECT_EQ(aud.mode, AudienceMode::Standby);
}

TEST(Audio, RequestsResolveToSpatializedCues) {
    const auto ctx = context();
    auto s = make_session(ctx, ProgressStore{}, demo::cue_library(), 3);
    const auto trace = run_session(attempt_events(ctx, {"t1", "drummer", {}, 0, 100, true}), ctx, s);
    std::vector<std::string> emitters;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto* req = trace[i].as<output::SoundRequested>();
        if (req == nullptr) continue;
        ASSERT_LT(i + 1, trace.size());
        const auto* played = trace[i + 1].as<output::SoundPlayed>();
        ASSERT_NE(played, nullptr);
        EXPECT_EQ(played->category, req->category);
        const auto library = demo::cue_library();
        const auto& pool = library.cues(req->category);
        EXPECT_TRUE(std::any_of(pool.begin(), pool.end(), [&](const SoundCue& c) { return c.cue_id == played->sound.cue_id; }));
        EXPECT_GT(played->sound.gain, 0.0);
        emitters.push_back(played->emitter_id);
    }
    ASSERT_GE(emitters.size(), 2u);
    EXPECT_EQ(emitters[0], "audience_left");
    EXPECT_EQ(emitters[1], "audience_front");
}

TEST(Config, RejectsBadSessionConfig) {
    SessionConfig cfg;
    cfg.applaud_duration_ms = 0;
    EXPECT_THROW(validate(cfg), Error);
    cfg = {};
    cfg.guide_steps.clear();
    EXPECT_THROW(validate(cfg), Error);
}
