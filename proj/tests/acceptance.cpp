// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Runs from the source root (ctest sets the working directory) so the shipped config's
// relative paths resolve.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "drumcoach/cli.hpp"
#include "drumcoach/server.hpp"
#include "drumcoach/simulate.hpp"
#include "support.hpp"

using namespace drumcoach;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string& what) {
    std::cout << "criterion " << n << ": " << (ok ? "PASS" : "FAIL") << "  " << what << std::endl;
    if (!ok) ++failures;
}

std::string fmt(double v, int digits = 2) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun cli_run(const std::vector<std::string>& args) {
    std::istringstream in;
    std::ostringstream out, err;
    const int code = cli::run_cli(args, {in, out, err});
    return {code, out.str(), err.str()};
}

const fs::path data = testing_support::data_dir();

// ---- 1 ---------------------------------------------------------------------------

void self_match() {
    bool ok = true;
    std::string detail;
    for (const char* name : {"basic_step", "drum_swing", "leap_turn"}) {
        const auto clip = (data / "clips" / (std::string(name) + ".ndjson")).string();
        const auto frames = load_clip(clip).frames.size();
        const auto t0 = Clock::now();
        const auto r = cli_run({"--machine", "score", clip, clip});
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        double total = -1.0;
        if (r.code == 0) total = Json::parse(r.out.substr(0, r.out.find('\n')))["total"].get<double>();
        ok = ok && r.code == 0 && total == 100.0 && secs < 1.0 && frames <= 900;
        detail += std::string(name) + " " + std::to_string(frames) + "f total=" + fmt(total, 1) + " in " + fmt(secs, 3) +
                  "s; ";
    }
    report(1, ok, "self-match identity: " + detail);
}

// ---- 2 ---------------------------------------------------------------------------

void dtw_oracle() {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<std::size_t> len(2, 8);
    ScoringConfig cfg;
    cfg.band_frames = 8;
    int mismatches = 0;
    for (int n = 0; n < 200; ++n) {
        const auto a = len(rng);
        const auto b = len(rng);
        MotionClip ref;
        ref.clip_id = "r";
        for (std::size_t i = 0; i < a; ++i) ref.frames.push_back(testing_support::random_frame(rng, static_cast<std::int64_t>(i) * 33));
        std::vector<SkeletonFrame> perf;
        for (std::size_t j = 0; j < b; ++j) perf.push_back(testing_support::random_frame(rng, static_cast<std::int64_t>(j) * 33));

        const double got = dtw_align(ref, perf, cfg).cost;

        // exhaustive search over monotone paths, costs from the public distance
        std::vector<std::vector<double>> c(a, std::vector<double>(b));
        for (std::size_t i = 0; i < a; ++i) {
            for (std::size_t j = 0; j < b; ++j) c[i][j] = frame_distance(normalize(ref.frames[i]), normalize(perf[j]), cfg);
        }
        double best = std::numeric_limits<double>::infinity();
        std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j, double acc) {
            acc += c[i][j];
            if (i == a - 1 && j == b - 1) {
                best = std::min(best, acc);
                return;
            }
            if (i + 1 < a && j + 1 < b) walk(i + 1, j + 1, acc);
            if (i + 1 < a) walk(i + 1, j, acc);
            if (j + 1 < b) walk(i, j + 1, acc);
        };
        walk(0, 0, 0.0);
        if (got != best) ++mismatches;
    }
    report(2, mismatches == 0, "DTW equals brute force on 200 instances (len <= 8, band 8): " +
                                   std::to_string(mismatches) + " mismatches");
}

// ---- 3 ---------------------------------------------------------------------------

void rigid_invariance() {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ScoringConfig cfg;
    double worst = 0.0;
    for (int n = 0; n < 100; ++n) {
        const auto f = testing_support::random_frame(rng);
        const auto g = testing_support::transform(f, {5 * u(rng), u(rng), 5 * u(rng)}, std::numbers::pi * u(rng),
                                                  1.0 + 0.9 * u(rng));
        worst = std::max(worst, frame_distance(normalize(f), normalize(g), cfg));
    }
    std::ostringstream s;
    s << "max frame_distance under translation+yaw+scale = " << worst;
    report(3, worst < 1e-9, s.str());
}

// ---- 4, 5 ------------------------------------------------------------------------

struct Shipped {
    Catalog catalog = load_catalog(data / "catalog.ndjson");
    SessionContext ctx{catalog, ScoringConfig{}, SessionConfig{}};
};

Shipped& shipped() {
    static Shipped s;
    return s;
}

void monotone_degradation() {
    auto& s = shipped();
    const double noise[] = {0, 5, 10, 20};
    double mean[4] = {};
    bool all_scored = true;
    for (int k = 0; k < 4; ++k) {
        double sum = 0.0;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            AttemptPlan plan{"c1", "drummer", {"c1", noise[k], 0.0, 1.0, 0, seed}, 0, 100, true};
            const auto r = simulate_attempt(s.ctx, plan, ProgressStore{}, seed);
            if (!r) all_scored = false;
            sum += r ? r->total : 0.0;
        }
        mean[k] = sum / 20.0;
    }
    const bool ok = all_scored && mean[0] > mean[1] && mean[1] > mean[2] && mean[2] > mean[3] && mean[0] == 100.0 &&
                    mean[3] < 60.0;
    report(4, ok, "mean total over 20 seeds at 0/5/10/20 deg: " + fmt(mean[0]) + " / " + fmt(mean[1]) + " / " +
                      fmt(mean[2]) + " / " + fmt(mean[3]));
}

void timing_rule() {
    auto& s = shipped();
    const std::vector<std::pair<int, double>> cases = {{0, 100}, {100, 100}, {300, 50}, {500, 0}};
    bool ok = true;
    std::string detail;
    for (const auto& [delay, want] : cases) {
        AttemptPlan plan{"c1", "drummer", {"c1", 0.0, 0.0, 1.0, delay, 1}, 0, 100, true};
        const auto r = simulate_attempt(s.ctx, plan, ProgressStore{}, 1);
        double lo = 1e9, hi = -1e9;
        if (!r || r->key_poses.empty()) {
            ok = false;
        } else {
            for (const auto& k : r->key_poses) {
                lo = std::min(lo, k.credit);
                hi = std::max(hi, k.credit);
                ok = ok && std::abs(k.credit - want) <= 1.0;
            }
        }
        detail += std::to_string(delay) + "ms -> [" + fmt(lo, 1) + "," + fmt(hi, 1) + "]; ";
    }
    report(5, ok, "key-pose credits for constant delays: " + detail);
}

// ---- 6 ---------------------------------------------------------------------------

void session_determinism() {
    const auto golden_path = data / "demo_session.trace.ndjson";
    std::ifstream in(golden_path, std::ios::binary);
    std::stringstream golden;
    golden << in.rdbuf();
    int identical = 0;
    for (int run = 0; run < 5; ++run) {
        const auto r = cli_run({"--config", (data / "drumcoach.toml").string(), "--machine", "--seed", "1", "session",
                                (data / "demo_session.ndjson").string()});
        if (r.code == 0 && !golden.str().empty() && r.out == golden.str()) ++identical;
    }
    report(6, identical == 5, "golden event log -> byte-identical trace in " + std::to_string(identical) + "/5 runs (" +
                                  std::to_string(golden.str().size()) + " bytes)");
}

// ---- 7 ---------------------------------------------------------------------------

template <typename T>
std::vector<std::pair<std::int64_t, T>> collect(const Outputs& out) {
    std::vector<std::pair<std::int64_t, T>> v;
    for (const auto& o : out) {
        if (const auto* p = o.as<T>()) v.emplace_back(o.t_ms, *p);
    }
    return v;
}

void audience_fsm() {
    const Catalog small = testing_support::small_catalog();
    const SessionContext ctx(small, ScoringConfig{}, SessionConfig{});
    const auto cues = load_cue_manifest(data / "cues.ndjson");

    // Reach each phase through public events only.
    auto reach = [&](Phase target) {
        auto s = make_session(ctx, ProgressStore{}, cues, 1);
        const std::vector<std::pair<Phase, SessionEvent>> path = {
            {Phase::Guided, event::StartChallenge{}},
            {Phase::CharacterSelect, event::StartChallenge{}},
            {Phase::ChallengeSelect, event::Select{SelectKind::character, "drummer"}},
            {Phase::ChallengeSelect, event::Select{SelectKind::challenge, "t1"}},
            {Phase::Countdown, event::StartChallenge{}},
            {Phase::Performing, event::Tick{ctx.session.countdown_ms}},
        };
        if (target == Phase::Idle) return s;
        for (const auto& [after, ev] : path) {
            step(s, ctx, ev);
            if (after == target && !(target == Phase::ChallengeSelect && !s.challenge_id)) return s;
        }
        for (auto f : ctx.references.at("t1")->clip.frames) {
            f.t_ms += ctx.session.countdown_ms;
            step(s, ctx, event::FrameIn{f});
        }
        return s;
    };

    // expected phase after: start, select character, select challenge, tick, reset, frame
    const std::map<Phase, std::vector<Phase>> table = {
        {Phase::Idle, {Phase::Guided, Phase::Idle, Phase::Idle, Phase::Idle, Phase::Idle, Phase::Idle}},
        {Phase::Guided, {Phase::CharacterSelect, Phase::Guided, Phase::Guided, Phase::Guided, Phase::Idle, Phase::Guided}},
        {Phase::CharacterSelect,
         {Phase::CharacterSelect, Phase::ChallengeSelect, Phase::CharacterSelect, Phase::CharacterSelect, Phase::Idle,
          Phase::CharacterSelect}},
        {Phase::ChallengeSelect,
         {Phase::Countdown, Phase::ChallengeSelect, Phase::ChallengeSelect, Phase::ChallengeSelect, Phase::Idle,
          Phase::ChallengeSelect}},
        {Phase::Countdown,
         {Phase::Countdown, Phase::Countdown, Phase::Countdown, Phase::Countdown, Phase::Idle, Phase::Countdown}},
        {Phase::Performing,
         {Phase::Performing, Phase::Performing, Phase::Performing, Phase::Performing, Phase::Idle, Phase::Performing}},
        {Phase::Results,
         {Phase::ChallengeSelect, Phase::Results, Phase::ChallengeSelect, Phase::Results, Phase::Idle, Phase::Results}},
    };
    int cells = 0, bad = 0;
    for (Phase p : kAllPhases) {
        const auto base = reach(p);
        if (base.phase != p) {
            ++bad;
            continue;
        }
        auto frame = ctx.references.at("t1")->clip.frames[20];
        frame.t_ms = base.now_ms + 1;
        const std::vector<SessionEvent> events = {event::StartChallenge{}, event::Select{SelectKind::character, "x"},
                                                  event::Select{SelectKind::challenge, "t1"},
                                                  event::Tick{base.now_ms + 1}, event::Reset{}, event::FrameIn{frame}};
        for (std::size_t k = 0; k < events.size(); ++k) {
            ++cells;
            try {
                const auto [next, out] = apply_event(base, events[k], ctx);
                const bool quiet_ok = std::holds_alternative<event::Tick>(events[k]) ||
                                      std::holds_alternative<event::FrameIn>(events[k]);
                if (next.phase != table.at(p)[k] || (next.phase == p && out.empty() && !quiet_ok)) ++bad;
            } catch (const std::exception&) {
                ++bad;
            }
        }
    }

    // Standby on silence: a performance whose tracking stops half way.
    bool silence_ok = false;
    std::int64_t silence_gap = -1;
    {
        auto s = make_session(ctx, ProgressStore{}, cues, 1);
        AttemptPlan plan{"t1", "drummer", {}, 0, 10, true};
        auto events = attempt_events(ctx, plan);
        // drop every frame after the midpoint of the performance
        const std::int64_t cut = ctx.session.countdown_ms + 1500;
        events.erase(std::remove_if(events.begin(), events.end(),
                                    [&](const SessionEvent& e) {
                                        const auto* f = std::get_if<event::FrameIn>(&e);
                                        return f != nullptr && f->frame.t_ms > cut;
                                    }),
                     events.end());
        const auto trace = run_session(events, ctx, s);
        std::int64_t last_update = -1;
        for (const auto& o : trace) {
            if (o.as<output::ScoreUpdate>()) last_update = o.t_ms;
        }
        bool was_active = false;
        for (const auto& o : trace) {
            const auto* a = o.as<output::AudienceChanged>();
            if (!a) continue;
            if (a->mode != AudienceMode::Standby) was_active = true;
            if (a->mode == AudienceMode::Standby && o.t_ms > last_update && silence_gap < 0) silence_gap = o.t_ms - last_update;
        }
        silence_ok = was_active && silence_gap > 0 && silence_gap <= 1000;
    }

    // Applause expiry with score updates flowing and a Tick every millisecond.
    std::int64_t applause_len = -1;
    {
        const SessionConfig cfg;
        AudienceState aud;
        const std::int64_t t0 = 5000;
        audience_update(aud, 40.0, 100.0, t0, cfg);
        for (std::int64_t t = t0 + 1; t <= t0 + 2 * cfg.applaud_duration_ms; ++t) {
            if ((t - t0) % 33 == 0) audience_update(aud, 40.0, std::nullopt, t, cfg);
            if (!audience_tick(aud, t, cfg).empty()) {
                applause_len = t - t0;
                break;
            }
        }
    }
    const bool ok = bad == 0 && silence_ok && applause_len == SessionConfig{}.applaud_duration_ms;
    report(7, ok, std::to_string(cells) + " phase x event cells, " + std::to_string(bad) +
                      " undefined/wrong; standby " + std::to_string(silence_gap) + " ms after last score; applause lasted " +
                      std::to_string(applause_len) + " ms");
}

// ---- 8 ---------------------------------------------------------------------------

void unlock_semantics() {
    auto& s = shipped();
    ProgressStore store;
    store.ensure(s.catalog);
    const auto below = unlock_check(store, s.catalog, "c1", 74.9);
    const auto at = unlock_check(store, s.catalog, "c1", 75.0);
    const auto again = unlock_check(at.store, s.catalog, "c1", 100.0);
    bool ok = below.newly_unlocked.empty() && !below.store.is_unlocked("c2") &&
              at.newly_unlocked == std::vector<std::string>{"c2"} && again.newly_unlocked.empty();

    // Two clean attempts in one live session: the unlock is announced once.
    auto state = make_session(s.ctx, ProgressStore{}, CueLibrary{}, 1);
    AttemptPlan plan{"c1", "drummer", {"c1", 0, 0, 1.0, 0, 1}, 0, 100, true};
    auto trace = run_session(attempt_events(s.ctx, plan), s.ctx, state);
    plan.from_idle = false;
    plan.start_ms = state.now_ms + 100;
    const auto second = run_session(attempt_events(s.ctx, plan), s.ctx, state);
    trace.insert(trace.end(), second.begin(), second.end());
    std::size_t results = 0, unlocks = 0;
    for (const auto& o : trace) {
        results += o.as<output::ResultsReady>() ? 1 : 0;
        unlocks += o.as<output::ChallengeUnlocked>() ? 1 : 0;
    }
    ok = ok && results == 2 && unlocks == 1;
    report(8, ok, "74.9 -> " + std::to_string(below.newly_unlocked.size()) + " unlocks, 75.0 -> " +
                      std::to_string(at.newly_unlocked.size()) + "; two clean attempts -> " + std::to_string(unlocks) +
                      " unlock event");
}

// ---- 9 ---------------------------------------------------------------------------

void sound_selection() {
    CueLibrary lib;
    for (const char* id : {"x", "y", "z"}) lib.add({id, CueCategory::cheer, 800, ""});
    std::mt19937_64 rng(9);
    std::map<std::string, std::map<std::string, double>> after;
    std::map<std::string, double> overall;
    std::string last;
    int repeats = 0;
    for (int n = 0; n < 10000; ++n) {
        const std::string id = select_cue(lib, CueCategory::cheer, rng).cue_id;
        if (id == last) ++repeats;
        if (!last.empty()) after[last][id] += 1;
        overall[id] += 1;
        last = id;
    }
    auto chi2 = [](const std::map<std::string, double>& counts) {
        double total = 0.0;
        for (const auto& [k, v] : counts) total += v;
        const double e = total / static_cast<double>(counts.size());
        double x = 0.0;
        for (const auto& [k, v] : counts) x += (v - e) * (v - e) / e;
        return x;
    };
    // p = 0.001 critical values: 10.828 (1 dof), 13.816 (2 dof)
    double worst = 0.0;
    bool ok = repeats == 0 && after.size() == 3;
    for (const auto& [prev, next] : after) {
        ok = ok && next.size() == 2;
        worst = std::max(worst, chi2(next));
    }
    const double all = chi2(overall);
    ok = ok && worst < 10.828 && all < 13.816;
    report(9, ok, "10000 draws, " + std::to_string(repeats) + " repeats, max chi2 after each cue " + fmt(worst, 3) +
                      " (crit 10.828), overall " + fmt(all, 3) + " (crit 13.816)");
}

// ---- 10 --------------------------------------------------------------------------

bool wire_round_trip(std::string& detail) {
    std::mt19937_64 rng(10);
    std::uniform_int_distribution<int> which(0, 6);
    std::uniform_real_distribution<double> u(-1000.0, 1000.0);
    std::uniform_int_distribution<std::int64_t> t(0, std::int64_t{1} << 40);
    int bad = 0;
    for (int n = 0; n < 10000; ++n) {
        wire::Message m;
        switch (which(rng)) {
        case 0: m = wire::Frame{testing_support::random_frame(rng, t(rng))}; break;
        case 1: m = wire::Command{event::Tick{t(rng)}}; break;
        case 2: m = wire::Command{event::Select{SelectKind::character, "c" + std::to_string(t(rng))}}; break;
        case 3: m = wire::Output{SessionOutput{t(rng), output::ScoreUpdate{u(rng), u(rng), u(rng), 3}}}; break;
        case 4: m = wire::Output{SessionOutput{t(rng), output::KeyPoseHit{"k", u(rng), u(rng)}}}; break;
        case 5: m = wire::Command{wire::ReplayStart{"c1", {"c1", std::abs(u(rng)), 0.5, 1.5, t(rng), 7}}}; break;
        default: m = wire::ErrorMsg{"e" + std::to_string(t(rng)), "detail"}; break;
        }
        const auto line = wire::encode(m);
        const auto back = wire::decode(line);
        bool same = back.index() == m.index() && wire::encode(back) == line;
        if (const auto* f = std::get_if<wire::Frame>(&m)) same = same && std::get<wire::Frame>(back).frame == f->frame;
        if (const auto* o = std::get_if<wire::Output>(&m)) {
            const auto& a = std::get<SessionOutput>(o->body);
            const auto& b = std::get<SessionOutput>(std::get<wire::Output>(back).body);
            if (const auto* su = a.as<output::ScoreUpdate>()) {
                const auto* sb = b.as<output::ScoreUpdate>();
                same = same && sb && sb->frame_score == su->frame_score && sb->rolling_avg == su->rolling_avg &&
                       sb->total_so_far == su->total_so_far && a.t_ms == b.t_ms;
            }
        }
        if (!same) ++bad;
    }
    detail += "10^4 round trips, " + std::to_string(bad) + " differ; ";
    return bad == 0;
}

void protocol() {
    std::string detail;
    bool ok = wire_round_trip(detail);

    auto& s = shipped();
    testing_support::TempDir tmp;
    EngineConfig cfg;
    cfg.listen = "127.0.0.1:0";
    cfg.progress_dir = (tmp / "progress").string();
    cfg.ui_dir = (tmp / "ui").string();
    cfg.session.countdown_ms = 300;  // keep the run short
    net::Server server(s.catalog, cfg, load_cue_manifest(data / "cues.ndjson"), 1);
    server.start();
    const auto port = server.port();

    auto join = [&](int rcvbuf) {
        auto c = net::Client::connect("127.0.0.1", port, false, rcvbuf);
        c.send(wire::Hello{});
        c.recv();  // hello
        c.recv();  // snapshot
        return c;
    };
    auto active = join(0);
    auto stalled = join(4096);  // never reads again

    for (const SessionEvent& ev : std::vector<SessionEvent>{event::StartChallenge{}, event::StartChallenge{},
                                                            event::Select{SelectKind::character, "drummer"},
                                                            event::Select{SelectKind::challenge, "c1"},
                                                            event::StartChallenge{}}) {
        std::visit(
            [&](const auto& e) {
                if constexpr (!std::is_same_v<std::decay_t<decltype(e)>, event::FrameIn>) active.send(wire::Command{e});
            },
            ev);
    }
    bool performing = false;
    for (int n = 0; n < 200 && !performing; ++n) {
        const auto m = active.recv(3000);
        if (!m) break;
        if (const auto* o = std::get_if<wire::Output>(&*m)) {
            if (const auto* so = std::get_if<SessionOutput>(&o->body)) {
                if (const auto* p = so->as<output::PhaseChanged>()) performing = p->phase == Phase::Performing;
            }
        }
    }

    // Reader: arrival time of every ScoreUpdate, in order.
    std::vector<Clock::time_point> arrivals;
    std::atomic<bool> finished{false};
    std::thread reader([&] {
        while (auto line = active.recv_line(3000)) {
            if (line->find("\"score_update\"") != std::string::npos) arrivals.push_back(Clock::now());
            if (line->find("\"results_ready\"") != std::string::npos) break;
        }
        finished = true;
    });

    // The stalled subscriber floods NoOps (and junk) that it never reads back.
    std::atomic<bool> flooding{true};
    std::thread flood([&] {
        const auto noop = wire::encode(wire::Command{event::Select{SelectKind::challenge, "c2"}});
        std::string burst;
        for (int i = 0; i < 20; ++i) burst += (i % 10 == 9) ? std::string("{not json\n") : noop;
        while (flooding && server.stats().slow_disconnects == 0) {
            if (!stalled.send_raw(burst)) break;
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
    });

    // 30 fps camera on the active connection, with an occasional malformed line.
    const auto frames = s.ctx.references.at("c1")->clip.frames;
    std::vector<Clock::time_point> sent;
    const auto start = Clock::now();
    for (std::size_t i = 0; i < frames.size() && !finished; ++i) {
        std::this_thread::sleep_until(start + std::chrono::microseconds(static_cast<std::int64_t>(i * 1e6 / 30.0)));
        sent.push_back(Clock::now());
        active.send(wire::Frame{frames[i]});
        if (i % 50 == 25) active.send_line("{\"k\":");
    }
    reader.join();
    flooding = false;
    flood.join();

    std::vector<double> lat_ms;
    for (std::size_t k = 0; k < std::min(arrivals.size(), sent.size()); ++k) {
        lat_ms.push_back(std::chrono::duration<double, std::milli>(arrivals[k] - sent[k]).count());
    }
    std::sort(lat_ms.begin(), lat_ms.end());
    const double p99 = lat_ms.empty() ? 1e9
                                      : lat_ms[std::min(lat_ms.size() - 1,
                                                        static_cast<std::size_t>(std::ceil(0.99 * lat_ms.size())) - 1)];
    const auto stats = server.stats();

    // The server is still alive and serving after all the junk.
    bool alive = false;
    try {
        auto late = net::Client::connect("127.0.0.1", port);
        late.send(wire::Hello{});
        const auto h = late.recv();
        alive = h && std::holds_alternative<wire::Hello>(*h);
    } catch (const std::exception&) {
    }
    server.stop();

    ok = ok && performing && stats.slow_disconnects == 1 && lat_ms.size() >= 250 && p99 <= 5.0 && alive &&
         stats.errors_sent > 0;
    detail += "stalled subscriber cut: " + std::to_string(stats.slow_disconnects) + "; " + std::to_string(lat_ms.size()) +
              " frames at 30 fps, client-side frame->ScoreUpdate p99 " + fmt(p99, 3) + " ms (max " +
              fmt(lat_ms.empty() ? 0 : lat_ms.back(), 3) + "); " + std::to_string(stats.errors_sent) +
              " malformed-line errors, server " + (alive ? "still serving" : "DOWN");
    report(10, ok, detail);
}

} // namespace

int main() {
    const std::vector<std::pair<int, std::function<void()>>> all = {
        {1, self_match},        {2, dtw_oracle},        {3, rigid_invariance}, {4, monotone_degradation},
        {5, timing_rule},       {6, session_determinism}, {7, audience_fsm},   {8, unlock_semantics},
        {9, sound_selection},   {10, protocol},
    };
    for (const auto& [n, fn] : all) {
        try {
            fn();
        } catch (const std::exception& e) {
            report(n, false, std::string("threw: ") + e.what());
        }
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
