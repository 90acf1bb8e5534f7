#pragma once

// Fixed-frequency resampling of pose streams, eye-tracker clock alignment,
// eye/head synchronization check, and per-run data-issue corrections.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "vrsom/core_model.hpp"
#include "vrsom/dataset_io.hpp"
#include "vrsom/error.hpp"
#include "vrsom/reference_tables.hpp"
#include "vrsom/stats.hpp"

namespace vrsom::preprocess {

struct ResampleSpec {
    double nominal_hz = kPoseHz;

    double period() const noexcept { return 1.0 / nominal_hz; }
};

/// t_first + k / hz for k = 0 .. floor((t_last - t_first) * hz).
inline std::vector<Seconds> make_target_timeline(Seconds t_first, Seconds t_last, const ResampleSpec& spec = {}) {
    if (!(spec.nominal_hz > 0.0) || !std::isfinite(spec.nominal_hz)) throw DomainError("nominal frequency must be > 0");
    if (!std::isfinite(t_first) || !std::isfinite(t_last)) throw DomainError("timeline bounds must be finite");
    if (t_last < t_first) throw DomainError("timeline: t_last < t_first");
    // The slack absorbs representation error in (t_last - t_first) * hz, e.g. 2.9999999999999996.
    const double span = (t_last - t_first) * spec.nominal_hz;
    const auto k_max = static_cast<std::size_t>(std::floor(span + 1e-9));
    std::vector<Seconds> out;
    out.reserve(k_max + 1);
    for (std::size_t k = 0; k <= k_max; ++k) out.push_back(t_first + static_cast<double>(k) / spec.nominal_hz);
    return out;
}

/// p0 + ratio (p1 - p0); ratio must lie in [0, 1].
inline Vec3 interp_position(Vec3 p0, Vec3 p1, double ratio) {
    if (!(ratio >= 0.0 && ratio <= 1.0)) throw DomainError("interp_position: ratio outside [0, 1]; no extrapolation");
    return {p0.x + ratio * (p1.x - p0.x), p0.y + ratio * (p1.y - p0.y), p0.z + ratio * (p1.z - p0.z)};
}

/// Spherical linear interpolation along the shorter arc. Falls back to normalized
/// linear interpolation when the two rotations nearly coincide.
inline QuatRot slerp(const QuatRot& q0, const QuatRot& q1_in, double ratio) {
    if (!(ratio >= 0.0 && ratio <= 1.0)) throw DomainError("slerp: ratio outside [0, 1]");
    if (ratio == 0.0) return q0;
    QuatRot q1 = q1_in;
    if (q0.dot(q1) < 0.0) q1 = -q1;
    if (ratio == 1.0) return q1;

    const QuatRot diff{q1.w - q0.w, q1.x - q0.x, q1.y - q0.y, q1.z - q0.z};
    const QuatRot sum{q1.w + q0.w, q1.x + q0.x, q1.y + q0.y, q1.z + q0.z};
    const double omega = 2.0 * std::atan2(diff.norm(), sum.norm());
    const double s = std::sin(omega);
    double a, b;
    if (s < 1e-8) {
        a = 1.0 - ratio;
        b = ratio;
    } else {
        a = std::sin((1.0 - ratio) * omega) / s;
        b = std::sin(ratio * omega) / s;
    }
    return QuatRot{a * q0.w + b * q1.w, a * q0.x + b * q1.x, a * q0.y + b * q1.y, a * q0.z + b * q1.z}.normalized();
}

/// Resamples a sorted stream onto the uniform timeline spanning its first and last stamps.
/// Each target stamp t uses the bracketing samples t0 <= t < t1 with ratio (t - t0) / (t1 - t0);
/// positions are interpolated linearly and rotations with slerp.
inline PoseStream resample_pose_stream(const PoseStream& stream, const ResampleSpec& spec = {}) {
    if (stream.size() < 2) throw DomainError("resample_pose_stream: need at least two samples");
    for (std::size_t i = 1; i < stream.size(); ++i)
        if (stream[i].t < stream[i - 1].t) throw DomainError("resample_pose_stream: stream not sorted");

    const auto timeline = make_target_timeline(stream.front().t, stream.back().t, spec);
    PoseStream out;
    out.reserve(timeline.size());
    std::size_t hi = 0;  // first sample with stamp > t
    for (Seconds t : timeline) {
        while (hi < stream.size() && stream[hi].t <= t) ++hi;
        PoseSample s;
        s.t = t;
        s.body_part = stream.front().body_part;
        if (hi == 0) {
            s.pos = stream.front().pos;
            s.rot = stream.front().rot;
        } else if (hi == stream.size()) {
            // t at (or within rounding of) the last stamp
            s.pos = stream.back().pos;
            s.rot = stream.back().rot;
        } else {
            const auto& a = stream[hi - 1];
            const auto& b = stream[hi];
            const double dt = b.t - a.t;
            const double ratio = dt > 0.0 ? std::clamp((t - a.t) / dt, 0.0, 1.0) : 0.0;
            s.pos = interp_position(a.pos, b.pos, ratio);
            s.rot = slerp(a.rot, b.rot, ratio);
        }
        s.rot = s.rot.canonical();
        out.push_back(s);
    }
    return out;
}

/// Shifts every eye stamp by (first eye stamp - first motion stamp). No resampling.
inline GazeStream sync_eye_timestamps(const GazeStream& eye, Seconds motion_first_t) {
    if (eye.empty()) throw DomainError("sync_eye_timestamps: empty eye stream");
    const double offset = eye.front().t - motion_first_t;
    GazeStream out = eye;
    for (auto& g : out) g.t -= offset;
    out.front().t = motion_first_t;
    return out;
}

struct SyncReport {
    stats::PearsonResult x;
    stats::PearsonResult z;
    std::size_t pairs = 0;
    bool defined = false;
    bool pass_x = false;
    bool pass_z = false;
};

inline bool sync_axis_passes(const stats::PearsonResult& r) { return r.defined && r.r > 0.8 && r.p < 0.05; }

/// Pairs every valid eye sample inside the head stream's span with the nearest head
/// stamp and correlates eye origin against head position on x and z (y is left out).
inline SyncReport validate_sync(const GazeStream& eye, const PoseStream& head) {
    SyncReport rep;
    if (eye.empty() || head.empty()) return rep;
    std::vector<double> ex, hx, ez, hz;
    for (const auto& g : eye) {
        if (!g.valid || g.t < head.front().t || g.t > head.back().t) continue;
        auto it = std::lower_bound(head.begin(), head.end(), g.t, [](const PoseSample& p, double t) { return p.t < t; });
        if (it == head.end()) it = std::prev(it);
        if (it != head.begin() && std::abs(std::prev(it)->t - g.t) <= std::abs(it->t - g.t)) it = std::prev(it);
        ex.push_back(g.origin.x);
        hx.push_back(it->pos.x);
        ez.push_back(g.origin.z);
        hz.push_back(it->pos.z);
    }
    rep.pairs = ex.size();
    if (rep.pairs < 3) return rep;
    rep.x = stats::pearson(ex, hx);
    rep.z = stats::pearson(ez, hz);
    rep.defined = rep.x.defined && rep.z.defined;
    rep.pass_x = sync_axis_passes(rep.x);
    rep.pass_z = sync_axis_passes(rep.z);
    return rep;
}

// ---------------------------------------------------------------------------
// Issue corrections

struct CorrectionResult {
    EventLog events;
    std::vector<std::string> log;
    std::string excluded_reason;  ///< tolerance / technical runs
    bool eye_usable = true;
};

/// Applies the issue-table entries matching ctx:
///  - missing_system_end: appends System/end at the last event's timestamp (if no end is logged)
///  - destroy_after_end: drops User/destroy events stamped after the first System/end
///  - subject_tolerance / technical: marks the run excluded
///  - eye_invalid: marks eye data unusable
/// Applying the result a second time changes nothing.
inline CorrectionResult apply_issue_corrections(const EventLog& events, const RunContext& ctx, const IssueTable& issues) {
    CorrectionResult out;
    out.events = events;
    for (const auto& issue : issues.matching(ctx.subject_id, ctx.run_order)) {
        switch (issue.kind) {
            case IssueKind::missing_system_end: {
                const bool has_end = std::any_of(out.events.begin(), out.events.end(),
                                                 [](const Event& e) { return e.is(Initiator::System, Action::end); });
                if (!has_end && !out.events.empty()) {
                    Event end;
                    end.t = out.events.back().t;
                    end.initiator = Initiator::System;
                    end.action = Action::end;
                    end.info = "added by correction";
                    out.events.push_back(end);
                    out.log.push_back(ctx.run_id() + ": appended System end at t=" + text::format_double(end.t));
                }
                break;
            }
            case IssueKind::destroy_after_end: {
                const auto end_it = std::find_if(out.events.begin(), out.events.end(),
                                                 [](const Event& e) { return e.is(Initiator::System, Action::end); });
                if (end_it == out.events.end()) break;
                const double t_end = end_it->t;
                const auto end_pos = static_cast<std::size_t>(end_it - out.events.begin());
                EventLog kept;
                std::size_t removed = 0;
                for (std::size_t i = 0; i < out.events.size(); ++i) {
                    const auto& e = out.events[i];
                    if (i > end_pos && e.t >= t_end && e.is(Initiator::User, Action::destroy)) {
                        ++removed;
                        continue;
                    }
                    kept.push_back(e);
                }
                if (removed) {
                    out.events = std::move(kept);
                    out.log.push_back(ctx.run_id() + ": removed " + std::to_string(removed) + " destroy event(s) after System end");
                }
                break;
            }
            case IssueKind::subject_tolerance:
            case IssueKind::technical:
                if (out.excluded_reason.empty()) {
                    out.excluded_reason = issues.exclusion_reason(ctx.subject_id, ctx.run_order);
                    out.log.push_back(ctx.run_id() + ": excluded, " + out.excluded_reason);
                }
                break;
            case IssueKind::eye_invalid:
                if (out.eye_usable) {
                    out.eye_usable = false;
                    out.log.push_back(ctx.run_id() + ": eye data flagged unusable");
                }
                break;
        }
    }
    return out;
}

/// Issue entries whose run is absent from `runs` (warnings only).
inline std::vector<std::string> unmatched_issues(const IssueTable& issues, const std::vector<RunContext>& runs) {
    std::vector<std::string> out;
    for (const auto& i : issues.entries()) {
        const bool found = std::any_of(runs.begin(), runs.end(), [&](const RunContext& r) {
            return r.subject_id == i.subject_id && r.run_order == i.run_order;
        });
        if (!found)
            out.push_back("issue " + std::string(to_string(i.kind)) + " references run " + std::to_string(i.subject_id) + "-" +
                          i.run_order.label() + " which is not in the dataset");
    }
    return out;
}

struct PreprocessOutcome {
    io::RunRecord run;
    std::vector<std::string> log;
    SyncReport sync;
};

/// Corrections, resampling of head/body/hand, and eye clock alignment for one run.
inline PreprocessOutcome preprocess_run(io::RunRecord run, const IssueTable& issues, const ResampleSpec& spec = {}) {
    PreprocessOutcome out;
    auto corr = apply_issue_corrections(run.events, run.ctx, issues);
    run.events = std::move(corr.events);
    run.excluded_reason = corr.excluded_reason;
    run.eye_usable = run.eye_usable && corr.eye_usable;
    out.log = std::move(corr.log);

    if (run.head.size() >= 2) run.head = resample_pose_stream(run.head, spec);
    else out.log.push_back(run.ctx.run_id() + ": head stream too short to resample");
    if (run.body.size() >= 2) run.body = resample_pose_stream(run.body, spec);
    if (run.hand.size() >= 2) run.hand = resample_pose_stream(run.hand, spec);

    if (!run.eye.empty() && !run.head.empty()) {
        run.eye = sync_eye_timestamps(run.eye, run.head.front().t);
        if (run.eye_usable) out.sync = validate_sync(run.eye, run.head);
    }
    out.run = std::move(run);
    return out;
}

}  // namespace vrsom::preprocess
