#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "drumcoach/error.hpp"
#include "drumcoach/library.hpp"
#include "drumcoach/skeleton.hpp"

namespace drumcoach {

struct ScoringConfig {
    BoneWeights bone_weights = default_bone_weights();
    double e_max = std::numbers::pi / 9.0;  // 20 deg: 20 deg of sensor noise lands near 50
    std::size_t band_frames = 15;
    double timing_full_ms = 100.0;
    double timing_zero_ms = 500.0;
    double pose_weight = 0.7;
    double timing_weight = 0.3;
    double min_confidence = kDefaultMinConfidence;
    double coverage_floor = 0.5;
    std::size_t rolling_window = 30;

    friend bool operator==(const ScoringConfig&, const ScoringConfig&) = default;
};

/// Throws ConfigError describing the first broken invariant.
inline void validate(const ScoringConfig& cfg) {
    for (std::size_t b = 0; b < kBoneCount; ++b) {
        if (!(cfg.bone_weights[b] > 0.0) || !std::isfinite(cfg.bone_weights[b])) {
            throw Error(ErrorKind::Config, "bone weight " + bone_name(b) + " must be positive");
        }
    }
    if (!(cfg.e_max > 0.0)) throw Error(ErrorKind::Config, "e_max must be positive");
    if (cfg.band_frames < 1) throw Error(ErrorKind::Config, "band_frames must be >= 1");
    if (!(cfg.timing_full_ms > 0.0 && cfg.timing_full_ms < cfg.timing_zero_ms)) {
        throw Error(ErrorKind::Config, "need 0 < timing_full_ms < timing_zero_ms");
    }
    if (cfg.pose_weight < 0.0 || cfg.timing_weight < 0.0 ||
        std::abs(cfg.pose_weight + cfg.timing_weight - 1.0) > 1e-12) {
        throw Error(ErrorKind::Config, "pose_weight + timing_weight must equal 1");
    }
    if (!(cfg.min_confidence >= 0.0 && cfg.min_confidence <= 1.0)) {
        throw Error(ErrorKind::Config, "min_confidence must lie in [0,1]");
    }
    if (!(cfg.coverage_floor >= 0.0 && cfg.coverage_floor <= 1.0)) {
        throw Error(ErrorKind::Config, "coverage_floor must lie in [0,1]");
    }
    if (cfg.rolling_window < 1) throw Error(ErrorKind::Config, "rolling_window must be >= 1");
}

/// Weighted mean angle (radians) over bones valid in both poses; e_max when none are.
inline double frame_distance(const NormalizedPose& a, const NormalizedPose& b, const ScoringConfig& cfg) {
    double weighted = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < kBoneCount; ++i) {
        const double w = cfg.bone_weights[i];
        if (!(w > 0.0)) throw Error(ErrorKind::Config, "bone weight " + bone_name(i) + " must be positive");
        if (!a.valid[i] || !b.valid[i]) continue;
        weighted += w * angle_between(a.direction[i], b.direction[i]);
        total += w;
    }
    return total > 0.0 ? weighted / total : cfg.e_max;
}

inline double score_from_error(double error, const ScoringConfig& cfg) {
    return 100.0 * std::max(0.0, 1.0 - error / cfg.e_max);
}

/// 100 inside +-timing_full_ms, linear down to 0 at +-timing_zero_ms.
inline double timing_credit(double offset_ms, const ScoringConfig& cfg) {
    const double off = std::abs(offset_ms);
    if (off <= cfg.timing_full_ms) return 100.0;
    if (off >= cfg.timing_zero_ms) return 0.0;
    return 100.0 * (1.0 - (off - cfg.timing_full_ms) / (cfg.timing_zero_ms - cfg.timing_full_ms));
}

using IndexPair = std::pair<std::size_t, std::size_t>;

struct WarpPath {
    std::vector<IndexPair> path;
    double cost = 0.0;
};

/// Sakoe-Chiba banded DTW over an abstract cost d(ref_index, perf_index).
/// Cells with |i - j| > band are unreachable. Ties prefer the diagonal, then
/// a reference-only step, then a performance-only step.
template <typename Cost>
WarpPath warp(std::size_t ref_len, std::size_t perf_len, std::size_t band, Cost&& cost) {
    if (ref_len == 0 || perf_len == 0) throw Error(ErrorKind::EmptyInput, "empty sequence");
    const std::size_t gap = ref_len > perf_len ? ref_len - perf_len : perf_len - ref_len;
    if (gap > band) {
        throw Error(ErrorKind::BandInfeasible, "length difference " + std::to_string(gap) + " exceeds band " +
                                                   std::to_string(band));
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> acc(ref_len * perf_len, inf);
    auto at = [perf_len](std::size_t i, std::size_t j) { return i * perf_len + j; };

    for (std::size_t i = 0; i < ref_len; ++i) {
        const std::size_t lo = i > band ? i - band : 0;
        const std::size_t hi = std::min(perf_len - 1, i + band);
        for (std::size_t j = lo; j <= hi; ++j) {
            const double d = cost(i, j);
            if (i == 0 && j == 0) {
                acc[at(i, j)] = d;
                continue;
            }
            double best = inf;
            if (i > 0 && j > 0) best = acc[at(i - 1, j - 1)];
            if (i > 0) best = std::min(best, acc[at(i - 1, j)]);
            if (j > 0) best = std::min(best, acc[at(i, j - 1)]);
            acc[at(i, j)] = d + best;
        }
    }

    WarpPath result;
    result.cost = acc[at(ref_len - 1, perf_len - 1)];
    std::size_t i = ref_len - 1;
    std::size_t j = perf_len - 1;
    result.path.emplace_back(i, j);
    while (i > 0 || j > 0) {
        double best = inf;
        IndexPair step{i, j};
        if (i > 0 && j > 0 && acc[at(i - 1, j - 1)] < best) {
            best = acc[at(i - 1, j - 1)];
            step = {i - 1, j - 1};
        }
        if (i > 0 && acc[at(i - 1, j)] < best) {
            best = acc[at(i - 1, j)];
            step = {i - 1, j};
        }
        if (j > 0 && acc[at(i, j - 1)] < best) {
            best = acc[at(i, j - 1)];
            step = {i, j - 1};
        }
        std::tie(i, j) = step;
        result.path.emplace_back(i, j);
    }
    std::reverse(result.path.begin(), result.path.end());
    return result;
}

/// A reference clip with its poses normalized once.
struct Reference {
    MotionClip clip;
    std::vector<NormalizedPose> poses;
    std::vector<std::int64_t> rel_ms;

    std::size_t size() const { return poses.size(); }
    std::int64_t duration_ms() const { return rel_ms.empty() ? 0 : rel_ms.back(); }
    std::int64_t key_rel_ms(const KeyPose& kp) const { return kp.t_ms - clip.start_ms(); }
};

inline std::shared_ptr<const Reference> make_reference(MotionClip clip, const ScoringConfig& cfg) {
    auto ref = std::make_shared<Reference>();
    ref->poses.reserve(clip.frames.size());
    for (const auto& f : clip.frames) {
        ref->poses.push_back(normalize(f, cfg.min_confidence));
        ref->rel_ms.push_back(f.t_ms - clip.start_ms());
    }
    ref->clip = std::move(clip);
    return ref;
}

struct KeyPoseResult {
    std::string label;
    std::int64_t key_t_ms = 0;
    std::optional<std::int64_t> matched_perf_t_ms;
    double angular_error = 0.0;
    std::optional<double> timing_offset_ms;
    double credit = 0.0;
};

struct AlignmentResult {
    std::vector<IndexPair> path;
    double cost = 0.0;
    double mean_error = 0.0;
    std::vector<KeyPoseResult> per_key_pose;
    std::int64_t ref_duration_ms = 0;
    std::int64_t perf_duration_ms = 0;
};

/// Offline scoring route: banded DTW between the reference and a recorded performance.
inline AlignmentResult dtw_align(const MotionClip& ref, const std::vector<SkeletonFrame>& perf,
                                 const ScoringConfig& cfg) {
    validate(cfg);
    if (ref.frames.empty() || perf.empty()) throw Error(ErrorKind::EmptyInput, "empty sequence");
    if (ref.frames.size() < 2 || perf.size() < 2) throw Error(ErrorKind::EmptyInput, "need at least 2 frames");

    std::vector<NormalizedPose> ref_poses;
    std::vector<NormalizedPose> perf_poses;
    ref_poses.reserve(ref.frames.size());
    perf_poses.reserve(perf.size());
    for (const auto& f : ref.frames) ref_poses.push_back(normalize(f, cfg.min_confidence));
    for (const auto& f : perf) perf_poses.push_back(normalize(f, cfg.min_confidence));

    auto cost = [&](std::size_t i, std::size_t j) { return frame_distance(ref_poses[i], perf_poses[j], cfg); };
    auto warped = warp(ref_poses.size(), perf_poses.size(), cfg.band_frames, cost);

    AlignmentResult result;
    result.cost = warped.cost;
    result.mean_error = warped.cost / static_cast<double>(warped.path.size());
    result.ref_duration_ms = ref.duration_ms();
    result.perf_duration_ms = perf.back().t_ms - perf.front().t_ms;

    for (const auto& kp : ref.beat_grid.key_poses) {
        KeyPoseResult k;
        k.label = kp.label;
        k.key_t_ms = kp.t_ms;
        std::optional<std::size_t> best;
        double best_d = 0.0;
        for (const auto& [ri, pj] : warped.path) {
            if (ri != kp.frame_index) continue;
            const double d = cost(ri, pj);
            if (!best || d < best_d) {
                best = pj;
                best_d = d;
            }
        }
        if (best) {
            k.matched_perf_t_ms = perf[*best].t_ms;
            k.angular_error = best_d;
            k.timing_offset_ms = static_cast<double>(perf[*best].t_ms - kp.t_ms);
            k.credit = timing_credit(*k.timing_offset_ms, cfg);
        }
        result.per_key_pose.push_back(std::move(k));
    }
    result.path = std::move(warped.path);
    return result;
}

struct KeyPoseHit {
    std::size_t key_index = 0;
    std::string label;
    double offset_ms = 0.0;
    double credit = 0.0;
};

struct FrameScoreUpdate {
    std::int64_t t_ms = 0;
    std::size_t matched_index = 0;
    double error = 0.0;
    double frame_score = 0.0;
    double rolling_avg = 0.0;
    double total_so_far = 0.0;
    std::vector<KeyPoseHit> hits;
    bool reached_end = false;
};

/// Live matching state. Single owner; copy to snapshot.
struct OnlineMatcherState {
    std::shared_ptr<const Reference> ref;
    std::int64_t start_ms = 0;
    std::optional<std::size_t> cursor;
    std::optional<std::int64_t> last_t_ms;
    std::deque<double> window;
    double window_sum = 0.0;
    double score_sum = 0.0;
    std::size_t frames_scored = 0;
    std::vector<std::optional<KeyPoseHit>> key_hits;

    OnlineMatcherState() = default;
    OnlineMatcherState(std::shared_ptr<const Reference> reference, std::int64_t start)
        : ref(std::move(reference)), start_ms(start), key_hits(ref->clip.beat_grid.key_poses.size()) {}

    double rolling_avg() const { return window.empty() ? 0.0 : window_sum / static_cast<double>(window.size()); }

    double timing_so_far() const {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& h : key_hits) {
            if (!h) continue;
            sum += h->credit;
            ++n;
        }
        return n == 0 ? 100.0 : sum / static_cast<double>(n);
    }

    double coverage() const {
        if (!cursor || !ref || ref->duration_ms() <= 0) return 0.0;
        return static_cast<double>(ref->rel_ms[*cursor]) / static_cast<double>(ref->duration_ms());
    }
};

namespace detail {

inline std::size_t nearest_index(const std::vector<std::int64_t>& rel_ms, std::int64_t t) {
    const auto it = std::lower_bound(rel_ms.begin(), rel_ms.end(), t);
    if (it == rel_ms.begin()) return 0;
    if (it == rel_ms.end()) return rel_ms.size() - 1;
    const auto hi = static_cast<std::size_t>(it - rel_ms.begin());
    return (*it - t) < (t - rel_ms[hi - 1]) ? hi : hi - 1;
}

} // namespace detail

/// Matches one live frame against the reference frames within +-band of the frame's
/// time-derived position. The cursor only moves forward; key poses whose reference
/// index the cursor crosses are credited by the current lag.
inline FrameScoreUpdate online_step(OnlineMatcherState& state, const SkeletonFrame& frame, const ScoringConfig& cfg) {
    if (!state.ref || state.ref->size() == 0) throw Error(ErrorKind::EmptyInput, "matcher has no reference");
    if (state.last_t_ms && frame.t_ms < *state.last_t_ms) {
        throw Error(ErrorKind::OutOfOrderFrame, "t_ms " + std::to_string(frame.t_ms) + " precedes " +
                                                    std::to_string(*state.last_t_ms));
    }
    const Reference& ref = *state.ref;
    const NormalizedPose pose = normalize(frame, cfg.min_confidence);
    const std::int64_t rel = frame.t_ms - state.start_ms;
    const std::size_t expected = detail::nearest_index(ref.rel_ms, rel);
    const std::size_t lo = expected > cfg.band_frames ? expected - cfg.band_frames : 0;
    const std::size_t hi = std::min(ref.size() - 1, expected + cfg.band_frames);

    std::size_t matched = expected;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_gap = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = lo; i <= hi; ++i) {
        const double d = frame_distance(ref.poses[i], pose, cfg);
        const std::size_t gap = i > expected ? i - expected : expected - i;
        if (d < best || (d == best && gap < best_gap)) {
            best = d;
            best_gap = gap;
            matched = i;
        }
    }

    FrameScoreUpdate update;
    update.t_ms = frame.t_ms;
    update.matched_index = matched;
    update.error = best;
    update.frame_score = score_from_error(best, cfg);

    const std::optional<std::size_t> previous = state.cursor;
    if (!previous || matched > *previous) state.cursor = matched;
    state.last_t_ms = frame.t_ms;

    const auto& keys = ref.clip.beat_grid.key_poses;
    for (std::size_t k = 0; k < keys.size(); ++k) {
        const std::size_t idx = keys[k].frame_index;
        const bool crossed = (!previous || idx > *previous) && idx <= *state.cursor;
        if (!crossed || state.key_hits[k]) continue;
        KeyPoseHit hit;
        hit.key_index = k;
        hit.label = keys[k].label;
        hit.offset_ms = static_cast<double>(rel - ref.rel_ms[*state.cursor]);
        hit.credit = timing_credit(hit.offset_ms, cfg);
        state.key_hits[k] = hit;
        update.hits.push_back(std::move(hit));
    }

    state.window.push_back(update.frame_score);
    state.window_sum += update.frame_score;
    while (state.window.size() > cfg.rolling_window) {
        state.window_sum -= state.window.front();
        state.window.pop_front();
    }
    state.score_sum += update.frame_score;
    state.frames_scored += 1;

    update.rolling_avg = state.rolling_avg();
    const double pose_so_far = state.score_sum / static_cast<double>(state.frames_scored);
    update.total_so_far = cfg.pose_weight * pose_so_far + cfg.timing_weight * state.timing_so_far();
    update.reached_end = *state.cursor + 1 == ref.size();
    return update;
}

struct ScoreReport {
    double pose_score = 0.0;
    double timing_score = 0.0;
    double total = 0.0;
    std::vector<KeyPoseResult> key_poses;
};

namespace detail {

inline ScoreReport combine(double pose, double timing, std::vector<KeyPoseResult> keys, const ScoringConfig& cfg) {
    ScoreReport report;
    report.pose_score = std::clamp(pose, 0.0, 100.0);
    report.timing_score = std::clamp(timing, 0.0, 100.0);
    report.total = std::clamp(cfg.pose_weight * report.pose_score + cfg.timing_weight * report.timing_score, 0.0, 100.0);
    report.key_poses = std::move(keys);
    return report;
}

} // namespace detail

/// Live route. Key poses never crossed earn 0 timing credit.
inline ScoreReport finalize(const OnlineMatcherState& state, const ScoringConfig& cfg) {
    if (state.frames_scored == 0 || state.coverage() < cfg.coverage_floor) {
        throw Error(ErrorKind::IncompleteAttempt,
                    "covered " + std::to_string(state.coverage() * 100.0) + "% of the reference");
    }
    const auto& keys = state.ref->clip.beat_grid.key_poses;
    std::vector<KeyPoseResult> per_key;
    double credit_sum = 0.0;
    for (std::size_t k = 0; k < keys.size(); ++k) {
        KeyPoseResult r;
        r.label = keys[k].label;
        r.key_t_ms = keys[k].t_ms;
        if (const auto& hit = state.key_hits[k]) {
            r.timing_offset_ms = hit->offset_ms;
            r.matched_perf_t_ms = state.start_ms + state.ref->key_rel_ms(keys[k]) +
                                  static_cast<std::int64_t>(std::llround(hit->offset_ms));
            r.credit = hit->credit;
        }
        credit_sum += r.credit;
        per_key.push_back(std::move(r));
    }
    const double pose = state.score_sum / static_cast<double>(state.frames_scored);
    const double timing = keys.empty() ? 100.0 : credit_sum / static_cast<double>(keys.size());
    return detail::combine(pose, timing, std::move(per_key), cfg);
}

/// Offline route.
inline ScoreReport finalize(const AlignmentResult& alignment, const ScoringConfig& cfg) {
    const double coverage = alignment.ref_duration_ms > 0 ? static_cast<double>(alignment.perf_duration_ms) /
                                                                 static_cast<double>(alignment.ref_duration_ms)
                                                           : 0.0;
    if (coverage < cfg.coverage_floor) {
        throw Error(ErrorKind::IncompleteAttempt, "covered " + std::to_string(coverage * 100.0) + "% of the reference");
    }
    double credit_sum = 0.0;
    for (const auto& k : alignment.per_key_pose) credit_sum += k.credit;
    const double timing = alignment.per_key_pose.empty()
                              ? 100.0
                              : credit_sum / static_cast<double>(alignment.per_key_pose.size());
    return detail::combine(score_from_error(alignment.mean_error, cfg), timing, alignment.per_key_pose, cfg);
}

} // namespace drumcoach
