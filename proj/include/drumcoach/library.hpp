#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "drumcoach/error.hpp"
#include "drumcoach/frame_json.hpp"
#include "drumcoach/skeleton.hpp"

namespace drumcoach {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kJointSet = "k20";

struct KeyPose {
    std::int64_t t_ms = 0;
    std::size_t frame_index = 0;
    std::string label;

    friend bool operator==(const KeyPose&, const KeyPose&) = default;
};

struct BeatGrid {
    double bpm = 120.0;
    std::vector<KeyPose> key_poses;

    friend bool operator==(const BeatGrid&, const BeatGrid&) = default;
};

struct MotionClip {
    std::string clip_id;
    std::string title;
    double fps = 30.0;
    std::vector<SkeletonFrame> frames;
    BeatGrid beat_grid;

    std::int64_t start_ms() const { return frames.empty() ? 0 : frames.front().t_ms; }
    std::int64_t end_ms() const { return frames.empty() ? 0 : frames.back().t_ms; }
    std::int64_t duration_ms() const { return end_ms() - start_ms(); }

    friend bool operator==(const MotionClip&, const MotionClip&) = default;
};

/// Returns every violated MotionClip/BeatGrid invariant; empty means valid.
inline std::vector<std::string> clip_violations(const MotionClip& clip) {
    std::vector<std::string> out;
    if (!(clip.fps > 0.0) || !std::isfinite(clip.fps)) out.push_back("fps must be positive");
    if (!(clip.beat_grid.bpm > 0.0) || !std::isfinite(clip.beat_grid.bpm)) out.push_back("bpm must be positive");
    if (clip.frames.size() < 2) out.push_back("clip needs at least 2 frames");
    for (std::size_t i = 0; i < clip.frames.size(); ++i) {
        for (const auto& v : validate_frame(clip.frames[i]).violations) {
            out.push_back("frame " + std::to_string(i) + ": " + v.what);
        }
        if (i > 0 && clip.frames[i].t_ms <= clip.frames[i - 1].t_ms) {
            out.push_back("frame " + std::to_string(i) + ": timestamp not strictly increasing");
        }
    }
    const double period = 1000.0 / clip.fps;
    const auto& keys = clip.beat_grid.key_poses;
    for (std::size_t k = 0; k < keys.size(); ++k) {
        const auto& kp = keys[k];
        const std::string tag = "key pose " + std::to_string(k) + " (" + kp.label + "): ";
        if (k > 0 && kp.t_ms <= keys[k - 1].t_ms) out.push_back(tag + "timestamp not strictly increasing");
        if (kp.t_ms < clip.start_ms() || kp.t_ms > clip.end_ms()) out.push_back(tag + "outside clip duration");
        if (kp.frame_index >= clip.frames.size()) out.push_back(tag + "frame_index out of range");
        const double expected = static_cast<double>(kp.frame_index) * period;
        if (std::abs(static_cast<double>(kp.t_ms - clip.start_ms()) - expected) > period) {
            out.push_back(tag + "frame_index inconsistent with t_ms at clip fps");
        }
    }
    return out;
}

namespace detail {

inline Json parse_line(const std::string& line, std::size_t line_no) {
    try {
        return Json::parse(line);
    } catch (const Json::parse_error& e) {
        throw LineError(ErrorKind::Parse, line_no, e.what());
    }
}

inline void write_atomically(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, "cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) throw Error(ErrorKind::Io, "write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorKind::Io, "cannot rename onto " + path.string());
    }
}

} // namespace detail

inline Json clip_header_json(const MotionClip& clip) {
    Json header;
    header["format_version"] = kFormatVersion;
    header["joint_set"] = kJointSet;
    header["fps"] = clip.fps;
    header["clip_id"] = clip.clip_id;
    header["title"] = clip.title;
    header["bpm"] = clip.beat_grid.bpm;
    return header;
}

inline Json key_poses_json(const std::vector<KeyPose>& keys) {
    Json arr = Json::array();
    for (const auto& kp : keys) {
        Json k;
        k["t_ms"] = kp.t_ms;
        k["frame_index"] = kp.frame_index;
        k["label"] = kp.label;
        arr.push_back(std::move(k));
    }
    Json trailer;
    trailer["key_poses"] = std::move(arr);
    return trailer;
}

inline std::string clip_to_ndjson(const MotionClip& clip) {
    std::string out = clip_header_json(clip).dump() + "\n";
    for (const auto& f : clip.frames) out += frame_to_json(f).dump() + "\n";
    out += key_poses_json(clip.beat_grid.key_poses).dump() + "\n";
    return out;
}

/// Parses and validates a clip. Errors carry the offending 1-based line number.
inline MotionClip parse_clip(std::istream& in) {
    MotionClip clip;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    bool have_trailer = false;
    std::vector<std::size_t> frame_lines;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const Json record = detail::parse_line(line, line_no);
        if (!record.is_object()) throw LineError(ErrorKind::Parse, line_no, "record must be a JSON object");
        if (have_trailer) throw LineError(ErrorKind::Parse, line_no, "record after key_poses trailer");

        if (!have_header) {
            if (!record.contains("format_version") || !record.contains("joint_set")) {
                throw LineError(ErrorKind::Parse, line_no, "first record must be the clip header");
            }
            if (record["format_version"] != kFormatVersion) {
                throw LineError(ErrorKind::Schema, line_no, "unsupported format_version " + record["format_version"].dump());
            }
            if (record["joint_set"] != kJointSet) {
                throw LineError(ErrorKind::Schema, line_no, "unsupported joint_set " + record["joint_set"].dump());
            }
            try {
                clip.fps = record.at("fps").get<double>();
                clip.clip_id = record.at("clip_id").get<std::string>();
                clip.title = record.value("title", std::string{});
                clip.beat_grid.bpm = record.at("bpm").get<double>();
            } catch (const Json::exception& e) {
                throw LineError(ErrorKind::Parse, line_no, std::string("bad header: ") + e.what());
            }
            have_header = true;
            continue;
        }

        if (record.contains("key_poses")) {
            try {
                for (const auto& k : record.at("key_poses")) {
                    clip.beat_grid.key_poses.push_back(
                        {k.at("t_ms").get<std::int64_t>(), k.at("frame_index").get<std::size_t>(),
                         k.at("label").get<std::string>()});
                }
            } catch (const Json::exception& e) {
                throw LineError(ErrorKind::Parse, line_no, std::string("bad key_poses: ") + e.what());
            }
            have_trailer = true;
            continue;
        }

        SkeletonFrame frame;
        try {
            frame = frame_from_json(record);
        } catch (const Error& e) {
            throw LineError(e.kind(), line_no, e.what());
        }
        const auto check = validate_frame(frame);
        if (!check.ok()) throw LineError(ErrorKind::Invariant, line_no, check.violations.front().what);
        if (!clip.frames.empty() && frame.t_ms <= clip.frames.back().t_ms) {
            throw LineError(ErrorKind::Invariant, line_no, "frame timestamp not strictly increasing");
        }
        clip.frames.push_back(frame);
        frame_lines.push_back(line_no);
    }

    if (!have_header) throw LineError(ErrorKind::Parse, line_no + 1, "missing clip header");
    if (clip.frames.size() < 2) {
        throw LineError(ErrorKind::Parse, line_no + 1,
                        "clip has " + std::to_string(clip.frames.size()) + " frames, need at least 2");
    }
    const auto problems = clip_violations(clip);
    if (!problems.empty()) throw LineError(ErrorKind::Invariant, line_no, problems.front());
    return clip;
}

inline MotionClip load_clip(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    return parse_clip(in);
}

inline void save_clip(const MotionClip& clip, const std::filesystem::path& path) {
    const auto problems = clip_violations(clip);
    if (!problems.empty()) throw Error(ErrorKind::Invariant, problems.front());
    detail::write_atomically(path, clip_to_ndjson(clip));
}

struct ChallengeSpec {
    std::string challenge_id;
    std::string clip_id;
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    int order_index = 0;
    double unlock_threshold = 75.0;
    std::string title;
};

/// Frames with start <= t <= end (inclusive), timestamps and key poses re-based to 0.
inline MotionClip segment_challenge(const MotionClip& clip, const ChallengeSpec& spec) {
    if (spec.clip_id != clip.clip_id) {
        throw Error(ErrorKind::Range, "challenge " + spec.challenge_id + " targets clip " + spec.clip_id);
    }
    if (spec.start_ms >= spec.end_ms) throw Error(ErrorKind::Range, "segment start must precede end");
    if (spec.start_ms < clip.start_ms() || spec.end_ms > clip.end_ms()) {
        throw Error(ErrorKind::Range, "segment outside clip duration");
    }

    MotionClip out;
    out.clip_id = clip.clip_id;
    out.title = clip.title;
    out.fps = clip.fps;
    out.beat_grid.bpm = clip.beat_grid.bpm;

    std::size_t first = clip.frames.size();
    for (std::size_t i = 0; i < clip.frames.size(); ++i) {
        const auto t = clip.frames[i].t_ms;
        if (t < spec.start_ms || t > spec.end_ms) continue;
        if (first == clip.frames.size()) first = i;
        out.frames.push_back(clip.frames[i]);
    }
    if (out.frames.size() < 2) throw Error(ErrorKind::Range, "segment holds fewer than 2 frames");

    const auto base = out.frames.front().t_ms;
    for (auto& f : out.frames) f.t_ms -= base;
    for (const auto& kp : clip.beat_grid.key_poses) {
        if (kp.t_ms < spec.start_ms || kp.t_ms > spec.end_ms) continue;
        if (kp.frame_index < first || kp.frame_index - first >= out.frames.size()) continue;
        out.beat_grid.key_poses.push_back({kp.t_ms - base, kp.frame_index - first, kp.label});
    }
    return out;
}

/// Challenges ordered by order_index, with their clips loaded.
class Catalog {
public:
    Catalog() = default;

    void add_clip(MotionClip clip) {
        const auto id = clip.clip_id;
        clips_.insert_or_assign(id, std::move(clip));
    }

    void add_challenge(ChallengeSpec spec) {
        for (const auto& c : challenges_) {
            if (c.challenge_id == spec.challenge_id) {
                throw Error(ErrorKind::Invariant, "duplicate challenge_id " + spec.challenge_id);
            }
            if (c.order_index == spec.order_index) {
                throw Error(ErrorKind::Invariant, "duplicate order_index " + std::to_string(spec.order_index));
            }
        }
        if (spec.order_index < 0) throw Error(ErrorKind::Invariant, "order_index must be >= 0");
        if (!(spec.unlock_threshold >= 0.0 && spec.unlock_threshold <= 100.0)) {
            throw Error(ErrorKind::Invariant, "unlock_threshold must lie in [0,100]");
        }
        const auto it = clips_.find(spec.clip_id);
        if (it == clips_.end()) throw Error(ErrorKind::Invariant, "unknown clip_id " + spec.clip_id);
        segments_.insert_or_assign(spec.challenge_id, segment_challenge(it->second, spec));
        challenges_.push_back(std::move(spec));
        std::sort(challenges_.begin(), challenges_.end(),
                  [](const auto& a, const auto& b) { return a.order_index < b.order_index; });
    }

    const std::vector<ChallengeSpec>& challenges() const { return challenges_; }

    const ChallengeSpec* find(const std::string& challenge_id) const {
        for (const auto& c : challenges_) {
            if (c.challenge_id == challenge_id) return &c;
        }
        return nullptr;
    }

    /// The re-based reference segment for a challenge.
    const MotionClip& segment(const std::string& challenge_id) const {
        const auto it = segments_.find(challenge_id);
        if (it == segments_.end()) throw Error(ErrorKind::UnknownChallenge, challenge_id);
        return it->second;
    }

    const MotionClip* clip(const std::string& clip_id) const {
        const auto it = clips_.find(clip_id);
        return it == clips_.end() ? nullptr : &it->second;
    }

    /// Challenge following `challenge_id` in order_index order, if any.
    const ChallengeSpec* next_after(const std::string& challenge_id) const {
        for (std::size_t i = 0; i + 1 < challenges_.size(); ++i) {
            if (challenges_[i].challenge_id == challenge_id) return &challenges_[i + 1];
        }
        return nullptr;
    }

private:
    std::map<std::string, MotionClip> clips_;
    std::map<std::string, MotionClip> segments_;
    std::vector<ChallengeSpec> challenges_;
};

/// Catalog file: one challenge per line,
/// {challenge_id, title, clip, segment:[start_ms,end_ms], order_index, unlock_threshold}.
/// `clip` is a clip file path relative to the catalog file.
inline Catalog load_catalog(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    Catalog catalog;
    std::map<std::string, std::string> loaded;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const Json r = detail::parse_line(line, line_no);
        ChallengeSpec spec;
        std::string clip_file;
        try {
            spec.challenge_id = r.at("challenge_id").get<std::string>();
            spec.title = r.value("title", spec.challenge_id);
            clip_file = r.at("clip").get<std::string>();
            const auto& seg = r.at("segment");
            spec.start_ms = seg.at(0).get<std::int64_t>();
            spec.end_ms = seg.at(1).get<std::int64_t>();
            spec.order_index = r.at("order_index").get<int>();
            spec.unlock_threshold = r.value("unlock_threshold", 75.0);
        } catch (const Json::exception& e) {
            throw LineError(ErrorKind::Parse, line_no, e.what());
        }
        const auto clip_path = path.parent_path() / clip_file;
        auto it = loaded.find(clip_path.string());
        if (it == loaded.end()) {
            auto clip = load_clip(clip_path);
            it = loaded.emplace(clip_path.string(), clip.clip_id).first;
            catalog.add_clip(std::move(clip));
        }
        spec.clip_id = it->second;
        try {
            catalog.add_challenge(std::move(spec));
        } catch (const Error& e) {
            throw LineError(e.kind(), line_no, e.what());
        }
    }
    return catalog;
}

struct ChallengeProgress {
    std::optional<double> best_score;
    bool unlocked = false;
    int attempts = 0;

    friend bool operator==(const ChallengeProgress&, const ChallengeProgress&) = default;
};

struct ProgressStore {
    std::string participant_id;
    std::map<std::string, ChallengeProgress> entries;

    /// Seeds missing entries; only the first challenge starts unlocked.
    void ensure(const Catalog& catalog) {
        const auto& list = catalog.challenges();
        for (std::size_t i = 0; i < list.size(); ++i) {
            auto& e = entries[list[i].challenge_id];
            if (i == 0) e.unlocked = true;
        }
    }

    bool is_unlocked(const std::string& challenge_id) const {
        const auto it = entries.find(challenge_id);
        return it != entries.end() && it->second.unlocked;
    }

    friend bool operator==(const ProgressStore&, const ProgressStore&) = default;
};

struct UnlockResult {
    ProgressStore store;
    std::vector<std::string> newly_unlocked;
};

/// Records a scored attempt. A score at or above the challenge's threshold unlocks the
/// next challenge by order_index; re-submitting a lower score changes nothing but attempts.
inline UnlockResult unlock_check(ProgressStore store, const Catalog& catalog, const std::string& challenge_id,
                                 double final_score) {
    const auto* spec = catalog.find(challenge_id);
    if (spec == nullptr) throw Error(ErrorKind::UnknownChallenge, challenge_id);
    store.ensure(catalog);
    auto& entry = store.entries[challenge_id];
    if (!entry.unlocked) throw Error(ErrorKind::LockedChallenge, challenge_id + " is locked");

    entry.attempts += 1;
    if (!entry.best_score || final_score > *entry.best_score) entry.best_score = final_score;

    UnlockResult result;
    if (final_score >= spec->unlock_threshold) {
        if (const auto* next = catalog.next_after(challenge_id)) {
            auto& next_entry = store.entries[next->challenge_id];
            if (!next_entry.unlocked) {
                next_entry.unlocked = true;
                result.newly_unlocked.push_back(next->challenge_id);
            }
        }
    }
    result.store = std::move(store);
    return result;
}

/// Counts an unscored attempt (coverage too low).
inline ProgressStore record_unscored_attempt(ProgressStore store, const Catalog& catalog,
                                             const std::string& challenge_id) {
    store.ensure(catalog);
    store.entries[challenge_id].attempts += 1;
    return store;
}

inline std::string progress_to_ndjson(const ProgressStore& store) {
    std::string out;
    for (const auto& [id, e] : store.entries) {
        Json r;
        r["challenge_id"] = id;
        r["best_score"] = e.best_score ? Json(*e.best_score) : Json(nullptr);
        r["unlocked"] = e.unlocked;
        r["attempts"] = e.attempts;
        out += r.dump() + "\n";
    }
    return out;
}

inline ProgressStore parse_progress(std::istream& in, std::string participant_id) {
    ProgressStore store;
    store.participant_id = std::move(participant_id);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const Json r = detail::parse_line(line, line_no);
        try {
            ChallengeProgress e;
            if (!r.at("best_score").is_null()) e.best_score = r.at("best_score").get<double>();
            e.unlocked = r.at("unlocked").get<bool>();
            e.attempts = r.at("attempts").get<int>();
            store.entries[r.at("challenge_id").get<std::string>()] = e;
        } catch (const Json::exception& e) {
            throw LineError(ErrorKind::Parse, line_no, e.what());
        }
    }
    return store;
}

inline std::filesystem::path progress_path(const std::filesystem::path& dir, const std::string& participant_id) {
    return dir / (participant_id + ".ndjson");
}

/// Missing file yields an empty store.
inline ProgressStore load_progress(const std::filesystem::path& dir, const std::string& participant_id) {
    const auto path = progress_path(dir, participant_id);
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        ProgressStore store;
        store.participant_id = participant_id;
        return store;
    }
    return parse_progress(in, participant_id);
}

inline void save_progress(const ProgressStore& store, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);  // first save creates the directory
    detail::write_atomically(progress_path(dir, store.participant_id), progress_to_ndjson(store));
}

} // namespace drumcoach
