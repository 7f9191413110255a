#pragma once

// Command-line front end. Everything here is reachable in-process through run_cli so the
// tests exercise the same code paths as the binary.
//
// Exit codes: 0 success, 1 domain error (bad data, failed validation), 2 usage error.

#include <csignal>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "drumcoach/config.hpp"
#include "drumcoach/demo.hpp"
#include "drumcoach/events.hpp"
#include "drumcoach/library.hpp"
#include "drumcoach/replay.hpp"
#include "drumcoach/scoring.hpp"
#include "drumcoach/server.hpp"
#include "drumcoach/session.hpp"
#include "drumcoach/simulate.hpp"
#include "drumcoach/wire.hpp"

namespace drumcoach::cli {

struct Io {
    std::istream& in;
    std::ostream& out;
    std::ostream& err;
};

namespace detail {

inline std::string fixed(double v, int digits = 2) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

inline std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

inline EngineConfig engine_config(const std::string& path, const std::string& catalog_override) {
    EngineConfig cfg = path.empty() ? EngineConfig{} : load_config(path);
    if (!catalog_override.empty()) cfg.catalog_path = catalog_override;
    validate(cfg);
    return cfg;
}

inline CueLibrary cues_or_empty(const EngineConfig& cfg) {
    if (cfg.cue_manifest_path.empty() || !std::filesystem::exists(cfg.cue_manifest_path)) return {};
    return load_cue_manifest(cfg.cue_manifest_path);
}

/// Reads a wire stream (hello first, then frames). Other message kinds are ignored.
inline std::vector<SkeletonFrame> read_wire_frames(std::istream& in) {
    std::vector<SkeletonFrame> frames;
    std::string line;
    std::size_t line_no = 0;
    bool hello = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        wire::Message m;
        try {
            m = wire::decode(line);
        } catch (const Error& e) {
            throw LineError(e.kind(), line_no, e.what());
        }
        if (!hello) {
            const auto* h = std::get_if<wire::Hello>(&m);
            if (h == nullptr) throw LineError(ErrorKind::Parse, line_no, "stream must start with hello");
            if (h->format_version != kFormatVersion || h->joint_set != kJointSet) {
                throw LineError(ErrorKind::Schema, line_no, "unsupported format_version/joint_set");
            }
            hello = true;
            continue;
        }
        if (const auto* f = std::get_if<wire::Frame>(&m)) frames.push_back(f->frame);
        if (const auto* e = std::get_if<wire::ErrorMsg>(&m)) throw LineError(ErrorKind::Parse, line_no, e->code + ": " + e->detail);
    }
    return frames;
}

inline void print_error(std::ostream& err, const std::exception& e) { err << "error: " << e.what() << "\n"; }

// ---- score ----------------------------------------------------------------------

inline Json score_record(const std::string& ref, const std::string& perf, const AlignmentResult& a,
                         const ScoreReport& r) {
    Json j;
    j["type"] = "score_report";
    j["reference"] = ref;
    j["performance"] = perf;
    j["dtw_cost"] = a.cost;
    j["mean_error"] = a.mean_error;
    const Json rep = report_to_json(r);
    for (const auto& [k, v] : rep.items()) j[k] = v;
    return j;
}

inline void score_table(std::ostream& out, const ScoreReport& r) {
    out << "pose    " << fixed(r.pose_score) << "\n";
    out << "timing  " << fixed(r.timing_score) << "\n";
    out << "total   " << fixed(r.total) << "\n";
    if (r.key_poses.empty()) return;
    out << "\n" << pad("key pose", 14) << pad("ref ms", 9) << pad("perf ms", 9) << pad("offset", 9) << pad("error", 9)
        << "credit\n";
    for (const auto& k : r.key_poses) {
        out << pad(k.label, 14) << pad(std::to_string(k.key_t_ms), 9)
            << pad(k.matched_perf_t_ms ? std::to_string(*k.matched_perf_t_ms) : "-", 9)
            << pad(k.timing_offset_ms ? fixed(*k.timing_offset_ms, 0) : "-", 9) << pad(fixed(k.angular_error, 3), 9)
            << fixed(k.credit, 1) << "\n";
    }
}

// ---- report ---------------------------------------------------------------------

inline std::vector<Json> read_trace(std::istream& in) {
    std::vector<Json> outs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw LineError(ErrorKind::Parse, line_no, e.what());
        }
        // Accept raw traces and captured wire streams alike.
        if (j.contains("k")) {
            if (j["k"] != "out" || !j.contains("v") || j["v"].value("type", "") == "snapshot") continue;
            j = j["v"];
        }
        try {
            output_from_json(j);
        } catch (const Error& e) {
            throw LineError(e.kind(), line_no, e.what());
        }
        outs.push_back(std::move(j));
    }
    return outs;
}

} // namespace detail

// ---- commands -------------------------------------------------------------------

struct Common {
    std::string config;
    std::string catalog;
    bool machine = false;
    std::uint64_t seed = 1;
};

inline int cmd_score(const Common& c, const std::string& ref_path, const std::string& perf_path, Io io) {
    const auto cfg = detail::engine_config(c.config, c.catalog);
    const MotionClip ref = load_clip(ref_path);
    std::vector<SkeletonFrame> perf;
    if (perf_path == "-") {
        perf = detail::read_wire_frames(io.in);
    } else {
        perf = load_clip(perf_path).frames;
    }
    const auto alignment = dtw_align(ref, perf, cfg.scoring);
    const auto report = finalize(alignment, cfg.scoring);
    io.out << detail::score_record(ref_path, perf_path, alignment, report).dump() << "\n";
    if (!c.machine) {
        io.out << "\n";
        detail::score_table(io.out, report);
    }
    return 0;
}

struct ReplayFlags {
    double noise_deg = 0.0;
    double dropout = 0.0;
    double time_scale = 1.0;
    std::int64_t offset_ms = 0;
    bool to_stdout = false;
    std::string target;
    bool fast = false;
};

inline int cmd_replay(const Common& c, const std::string& clip_path, const ReplayFlags& f, Io io) {
    const MotionClip clip = load_clip(clip_path);
    ReplayConfig cfg{clip.clip_id, f.noise_deg, f.dropout, f.time_scale, f.offset_ms, c.seed};
    validate(cfg);
    if (f.to_stdout) {
        io.out << wire::encode(wire::Hello{});
        replay_stream(clip, cfg, [&](const SkeletonFrame& fr) { io.out << wire::encode(wire::Frame{fr}); });
        return 0;
    }
    auto client = net::Client::connect(f.target);
    client.send(wire::Hello{});
    const auto reply = client.recv(5000);
    if (!reply || !std::holds_alternative<wire::Hello>(*reply)) {
        throw Error(ErrorKind::Io, "server did not answer hello");
    }
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t sent = 0;
    replay_stream(clip, cfg, [&](const SkeletonFrame& fr) {
        if (!f.fast) std::this_thread::sleep_until(t0 + std::chrono::milliseconds(std::max<std::int64_t>(0, fr.t_ms)));
        if (!client.send(wire::Frame{fr})) throw Error(ErrorKind::Io, "connection lost");
        ++sent;
    });
    if (c.machine) {
        Json j;
        j["type"] = "replay_done";
        j["frames"] = sent;
        io.out << j.dump() << "\n";
    } else {
        io.out << "sent " << sent << " frames to " << f.target << "\n";
    }
    return 0;
}

inline int cmd_record(const Common& c, const std::string& out_path, const std::string& clip_id, Io io) {
    const auto frames = detail::read_wire_frames(io.in);
    record(frames, out_path, clip_id);
    if (c.machine) {
        Json j;
        j["type"] = "recorded";
        j["path"] = out_path;
        j["frames"] = frames.size();
        j["fps"] = observed_fps(frames);
        io.out << j.dump() << "\n";
    } else {
        io.out << "wrote " << frames.size() << " frames to " << out_path << " (" << detail::fixed(observed_fps(frames), 1)
               << " fps)\n";
    }
    return 0;
}

/// Guesses the file kind from its extension or first record.
inline std::string detect_kind(const std::filesystem::path& p) {
    const auto ext = p.extension().string();
    if (ext == ".toml" || ext == ".conf") return "config";
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = Json::parse(line);
            if (!j.is_object()) return "clip";
            if (j.contains("format_version") || j.contains("joint_set")) return "clip";
            if (j.contains("challenge_id") && j.contains("clip")) return "catalog";
            if (j.contains("cue_id")) return "cues";
            if (j.contains("challenge_id") && j.contains("unlocked")) return "progress";
            if (j.contains("type") && (j.contains("t_ms") || j.contains("k"))) return "trace";
            if (j.contains("type")) return "events";
            if (j.contains("k")) return "trace";
        } catch (const Json::exception&) {
        }
        return "clip";
    }
    return "clip";
}

inline std::string validate_file(const std::filesystem::path& p, std::string& kind) {
    kind = detect_kind(p);
    if (kind == "config") {
        validate(load_config(p));
        return "ok";
    }
    if (kind == "catalog") {
        const auto cat = load_catalog(p);
        return std::to_string(cat.challenges().size()) + " challenges";
    }
    if (kind == "cues") {
        const auto lib = load_cue_manifest(p);
        std::size_t n = 0;
        for (auto cat : kCueCategories) n += lib.cues(cat).size();
        return std::to_string(n) + " cues";
    }
    if (kind == "progress") {
        std::ifstream in(p);
        const auto store = parse_progress(in, p.stem().string());
        return std::to_string(store.entries.size()) + " entries";
    }
    if (kind == "events") {
        std::ifstream in(p);
        std::string line;
        std::size_t line_no = 0;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                event_from_json(Json::parse(line));
            } catch (const Json::parse_error& e) {
                throw LineError(ErrorKind::Parse, line_no, e.what());
            } catch (const Error& e) {
                throw LineError(e.kind(), line_no, e.what());
            }
            ++n;
        }
        return std::to_string(n) + " events";
    }
    if (kind == "trace") {
        std::ifstream in(p);
        return std::to_string(detail::read_trace(in).size()) + " outputs";
    }
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + p.string());
    const auto clip = parse_clip(in);
    return std::to_string(clip.frames.size()) + " frames";
}

inline int cmd_validate(const Common& c, const std::vector<std::string>& paths, Io io) {
    int failures = 0;
    for (const auto& path : paths) {
        std::string kind;
        Json rec;
        rec["type"] = "validate";
        rec["path"] = path;
        try {
            const auto what = validate_file(path, kind);
            rec["kind"] = kind;
            rec["ok"] = true;
            rec["detail"] = what;
            if (!c.machine) io.out << path << ": OK (" << kind << ", " << what << ")\n";
        } catch (const std::exception& e) {
            ++failures;
            rec["kind"] = kind;
            rec["ok"] = false;
            rec["detail"] = e.what();
            if (const auto* le = dynamic_cast<const LineError*>(&e)) rec["line"] = le->line();
            if (!c.machine) io.out << path << ": FAIL " << e.what() << "\n";
        }
        if (c.machine) io.out << rec.dump() << "\n";
    }
    return failures == 0 ? 0 : 1;
}

inline int cmd_report(const Common& c, const std::string& trace_path, Io io) {
    std::ifstream file;
    std::istream* in = &io.in;
    if (trace_path != "-") {
        file.open(trace_path);
        if (!file) throw Error(ErrorKind::Io, "cannot open " + trace_path);
        in = &file;
    }
    const auto outs = detail::read_trace(*in);

    std::vector<Json> results;
    std::vector<std::string> unlocks;
    std::vector<std::pair<std::int64_t, std::string>> audience;
    std::map<std::string, std::size_t> counts;
    std::map<std::string, std::size_t> noops;
    std::map<std::string, std::size_t> sounds;
    for (const auto& o : outs) {
        const auto type = o.at("type").get<std::string>();
        counts[type] += 1;
        if (type == "results_ready") results.push_back(o);
        if (type == "challenge_unlocked") unlocks.push_back(o.at("id").get<std::string>());
        if (type == "audience_changed") audience.emplace_back(o.at("t_ms").get<std::int64_t>(), o.at("mode").get<std::string>());
        if (type == "noop") noops[o.at("reason").get<std::string>()] += 1;
        if (type == "sound_played") sounds[o.at("cue_id").get<std::string>()] += 1;
    }

    if (c.machine) {
        for (const auto& r : results) {
            Json j;
            j["type"] = "attempt";
            j["t_ms"] = r["t_ms"];
            j["challenge_id"] = r["challenge_id"];
            j["pose_score"] = r["report"]["pose_score"];
            j["timing_score"] = r["report"]["timing_score"];
            j["total"] = r["report"]["total"];
            io.out << j.dump() << "\n";
        }
        for (const auto& u : unlocks) io.out << Json{{"type", "unlock"}, {"id", u}}.dump() << "\n";
        for (const auto& [t, mode] : audience) io.out << Json{{"type", "audience"}, {"t_ms", t}, {"mode", mode}}.dump() << "\n";
        Json s;
        s["type"] = "summary";
        s["outputs"] = outs.size();
        s["attempts"] = results.size();
        s["unlocks"] = unlocks.size();
        s["counts"] = counts;
        s["noops"] = noops;
        s["sounds"] = sounds;
        io.out << s.dump() << "\n";
        return 0;
    }

    io.out << "outputs   " << outs.size() << "\n";
    io.out << "attempts  " << results.size() << "\n";
    for (const auto& r : results) {
        io.out << "  " << detail::pad(r["challenge_id"].get<std::string>(), 10) << "total "
               << detail::fixed(r["report"]["total"].get<double>()) << "  pose "
               << detail::fixed(r["report"]["pose_score"].get<double>()) << "  timing "
               << detail::fixed(r["report"]["timing_score"].get<double>()) << "  at " << r["t_ms"].get<std::int64_t>()
               << " ms\n";
    }
    io.out << "unlocks   " << unlocks.size() << "\n";
    for (const auto& u : unlocks) io.out << "  " << u << "\n";
    io.out << "audience\n";
    for (const auto& [t, mode] : audience) io.out << "  " << detail::pad(std::to_string(t), 9) << mode << "\n";
    if (!noops.empty()) {
        io.out << "ignored events\n";
        for (const auto& [reason, n] : noops) io.out << "  " << detail::pad(std::to_string(n), 6) << reason << "\n";
    }
    if (!sounds.empty()) {
        io.out << "sounds\n";
        for (const auto& [cue, n] : sounds) io.out << "  " << detail::pad(std::to_string(n), 6) << cue << "\n";
    }
    return 0;
}

inline std::vector<SessionEvent> read_events(std::istream& in) {
    std::vector<SessionEvent> events;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            events.push_back(event_from_json(Json::parse(line)));
        } catch (const Json::parse_error& e) {
            throw LineError(ErrorKind::Parse, line_no, e.what());
        } catch (const Error& e) {
            throw LineError(e.kind(), line_no, e.what());
        }
    }
    return events;
}

/// Batch session: event log in, output trace out. Progress starts fresh so runs repeat.
inline int cmd_session(const Common& c, const std::string& events_path, Io io) {
    const auto cfg = detail::engine_config(c.config, c.catalog);
    const auto catalog = load_catalog(cfg.catalog_path);
    const SessionContext ctx(catalog, cfg.scoring, cfg.session, cfg.audio);

    std::ifstream file;
    std::istream* in = &io.in;
    if (events_path != "-") {
        file.open(events_path);
        if (!file) throw Error(ErrorKind::Io, "cannot open " + events_path);
        in = &file;
    }
    const auto events = read_events(*in);
    SessionState state = make_session(ctx, ProgressStore{}, detail::cues_or_empty(cfg), c.seed);
    const auto trace = run_session(events, ctx, state);
    for (const auto& o : trace) {
        const Json j = output_to_json(o);
        if (c.machine) {
            io.out << j.dump() << "\n";
            continue;
        }
        Json rest = j;
        rest.erase("type");
        rest.erase("t_ms");
        io.out << detail::pad(std::to_string(o.t_ms), 8) << detail::pad(j["type"].get<std::string>(), 20) << rest.dump()
               << "\n";
    }
    return 0;
}

inline int cmd_demo(const Common& c, const std::string& dir, Io io) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "clips");
    for (const auto& style : demo::styles()) {
        save_clip(demo::make_clip(style), fs::path(dir) / "clips" / (style.clip_id + ".ndjson"));
    }
    const Catalog catalog = demo::catalog();
    std::string catalog_text;
    for (const auto& ch : catalog.challenges()) {
        Json j;
        j["challenge_id"] = ch.challenge_id;
        j["title"] = ch.title;
        j["clip"] = "clips/" + ch.clip_id + ".ndjson";
        j["segment"] = Json::array({ch.start_ms, ch.end_ms});
        j["order_index"] = ch.order_index;
        j["unlock_threshold"] = ch.unlock_threshold;
        catalog_text += j.dump() + "\n";
    }
    drumcoach::detail::write_atomically(fs::path(dir) / "catalog.ndjson", catalog_text);
    drumcoach::detail::write_atomically(fs::path(dir) / "cues.ndjson", cue_manifest_to_ndjson(demo::cues()));

    EngineConfig cfg;
    cfg.catalog_path = (fs::path(dir) / "catalog.ndjson").string();
    cfg.cue_manifest_path = (fs::path(dir) / "cues.ndjson").string();
    cfg.session.ambient_interval_ms = 20000;
    drumcoach::detail::write_atomically(fs::path(dir) / "drumcoach.toml", emit_config(cfg));

    // Scripted play for `drumcoach session`: a clean-ish first attempt, a try at a locked
    // challenge, a noisier second attempt, then a reset.
    const SessionContext ctx(catalog, cfg.scoring, cfg.session, cfg.audio);
    AttemptPlan first;
    first.challenge_id = "c1";
    first.replay = ReplayConfig{"c1", 4.0, 0.02, 1.0, 60, c.seed};
    auto log = attempt_events(ctx, first);
    const auto after = std::get<event::Tick>(log.back()).now_ms;
    log.push_back(event::StartChallenge{});
    log.push_back(event::Select{SelectKind::challenge, "c3"});
    AttemptPlan second;
    second.challenge_id = "c2";
    second.from_idle = false;
    second.start_ms = after + 500;
    second.replay = ReplayConfig{"c2", 9.0, 0.05, 1.0, 250, c.seed + 1};
    for (auto& ev : attempt_events(ctx, second)) log.push_back(std::move(ev));
    log.push_back(event::Reset{});
    std::string events;
    for (const auto& ev : log) events += event_to_json(ev).dump() + "\n";
    drumcoach::detail::write_atomically(fs::path(dir) / "demo_session.ndjson", events);

    if (c.machine) {
        io.out << Json{{"type", "demo"}, {"dir", dir}, {"clips", demo::styles().size()}, {"challenges", catalog.challenges().size()}}.dump()
               << "\n";
    } else {
        io.out << "wrote demo data to " << dir << "\n";
    }
    return 0;
}

inline int cmd_serve(const Common& c, const std::string& listen, std::int64_t duration_ms, Io io) {
    auto cfg = detail::engine_config(c.config, c.catalog);
    if (!listen.empty()) cfg.listen = listen;
    const auto catalog = load_catalog(cfg.catalog_path);

    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);  // server threads inherit the mask

    net::Server server(catalog, cfg, detail::cues_or_empty(cfg), c.seed);
    server.start();
    const auto ep = net::parse_endpoint(cfg.listen);
    if (c.machine) {
        io.out << Json{{"type", "listening"}, {"host", ep.host}, {"port", server.port()}}.dump() << std::endl;
    } else {
        io.out << "listening on " << ep.host << ":" << server.port() << " (raw NDJSON, ws://.../session, http /)"
               << std::endl;
    }
    if (duration_ms > 0) {
        timespec ts{duration_ms / 1000, (duration_ms % 1000) * 1000000};
        sigtimedwait(&set, nullptr, &ts);
    } else {
        int sig = 0;
        sigwait(&set, &sig);
    }
    server.stop();
    const auto st = server.stats();
    if (c.machine) {
        io.out << Json{{"type", "stopped"},
                       {"connections", st.connections},
                       {"frames", st.frames},
                       {"slow_disconnects", st.slow_disconnects}}
                      .dump()
               << "\n";
    } else {
        io.out << "stopped after " << st.frames << " frames, " << st.connections << " connections\n";
    }
    pthread_sigmask(SIG_UNBLOCK, &set, nullptr);
    return 0;
}

// ---- dispatch -------------------------------------------------------------------

inline int run_cli(int argc, const char* const* argv, Io io) {
    CLI::App app{"drumcoach: Yicheng flower drum training engine"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--config", common.config, "engine config file")->check(CLI::ExistingFile);
    app.add_option("--catalog", common.catalog, "challenge catalog (overrides the config)");
    app.add_flag("--machine", common.machine, "one JSON record per line");
    app.add_option("--seed", common.seed, "random seed");

    auto* score = app.add_subcommand("score", "score a performance against a reference clip (offline DTW)");
    std::string ref_path, perf_path;
    score->add_option("reference", ref_path, "reference clip")->required();
    score->add_option("performance", perf_path, "performance clip, or - for a wire stream on stdin")->required();

    auto* replay = app.add_subcommand("replay", "stream a clip through the simulated camera");
    std::string clip_path;
    ReplayFlags rf;
    replay->add_option("clip", clip_path, "clip file")->required();
    replay->add_option("--noise-deg", rf.noise_deg, "per-bone angular noise sigma (degrees)");
    replay->add_option("--dropout", rf.dropout, "per-frame drop probability");
    replay->add_option("--time-scale", rf.time_scale, "playback speed factor");
    replay->add_option("--offset-ms", rf.offset_ms, "constant delay (ms)");
    auto* out_opt = replay->add_flag("--stdout", rf.to_stdout, "write the wire stream to stdout");
    auto* target_opt = replay->add_option("--target", rf.target, "gateway host:port");
    replay->add_flag("--fast", rf.fast, "do not pace frames in real time");
    out_opt->excludes(target_opt);

    auto* rec = app.add_subcommand("record", "write a wire stream from stdin as a clip file");
    std::string rec_path, rec_id = "recording";
    rec->add_option("output", rec_path, "clip file to write")->required();
    rec->add_option("--clip-id", rec_id, "clip id for the header");

    auto* val = app.add_subcommand("validate", "check clips, catalogs, manifests, configs, event logs and traces");
    std::vector<std::string> val_paths;
    val->add_option("paths", val_paths, "files")->required();

    auto* rep = app.add_subcommand("report", "summarize a session output trace");
    std::string trace_path;
    rep->add_option("trace", trace_path, "trace file, or -")->required();

    auto* ses = app.add_subcommand("session", "run a session over an event log and print the output trace");
    std::string events_path;
    ses->add_option("events", events_path, "event log, or -")->required();

    auto* demo_cmd = app.add_subcommand("demo", "generate the demo clips, catalog, cue manifest and config");
    std::string demo_dir = "data";
    demo_cmd->add_option("dir", demo_dir, "output directory");

    auto* serve = app.add_subcommand("serve", "run the live gateway and session loop until SIGINT/SIGTERM");
    std::string listen;
    std::int64_t duration_ms = 0;
    serve->add_option("--listen", listen, "host:port (overrides the config)");
    serve->add_option("--duration-ms", duration_ms, "stop after this long");

    for (auto* sub : {score, replay, rec, val, rep, ses, demo_cmd, serve}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        io.out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        io.out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        io.err << "usage error: " << e.what() << "\n";
        return 2;
    }
    if (replay->parsed() && !rf.to_stdout && rf.target.empty()) {
        io.err << "usage error: replay needs --stdout or --target\n";
        return 2;
    }

    try {
        if (score->parsed()) return cmd_score(common, ref_path, perf_path, io);
        if (replay->parsed()) return cmd_replay(common, clip_path, rf, io);
        if (rec->parsed()) return cmd_record(common, rec_path, rec_id, io);
        if (val->parsed()) return cmd_validate(common, val_paths, io);
        if (rep->parsed()) return cmd_report(common, trace_path, io);
        if (ses->parsed()) return cmd_session(common, events_path, io);
        if (demo_cmd->parsed()) return cmd_demo(common, demo_dir, io);
        if (serve->parsed()) return cmd_serve(common, listen, duration_ms, io);
    } catch (const std::exception& e) {
        detail::print_error(io.err, e);
        return 1;
    }
    return 2;
}

inline int run_cli(const std::vector<std::string>& args, Io io) {
    std::vector<const char*> argv{"drumcoach"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data(), io);
}

} // namespace drumcoach::cli
