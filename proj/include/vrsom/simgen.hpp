#pragma once

// Synthetic runs: an agent walks the middle points of a course at constant
// speed, sees objects through a fixed head-mounted field of view and destroys
// the bright-enough ones. Emits the raw dataset layout plus the exact metrics
// the emitted logs encode.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "vrsom/behavior.hpp"
#include "vrsom/core_model.hpp"
#include "vrsom/dataset_io.hpp"
#include "vrsom/error.hpp"
#include "vrsom/metrics.hpp"
#include "vrsom/parallel.hpp"
#include "vrsom/photometry.hpp"
#include "vrsom/reference_tables.hpp"
#include "vrsom/text.hpp"

namespace vrsom::simgen {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Portable randomness (std distributions differ between standard libraries)

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : g_(splitmix64(seed)) {}

    double uniform() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 g_;
};

// ---------------------------------------------------------------------------
// Built-in course geometry

inline constexpr double kBuiltinPathLength = 60.0;
inline constexpr double kHalfWidth = 0.9;
inline constexpr double kNarrowHalfWidth = 0.55;
inline constexpr double kHeadHeight = 1.6;

/// Unit floor direction of heading `deg` (0 = +z, positive turns toward +x).
inline Point2 heading_dir(double deg) { return {std::sin(deg2rad(deg)), std::cos(deg2rad(deg))}; }
/// Right-hand normal of a floor direction.
inline Point2 right_of(Point2 d) { return {d.z, -d.x}; }

namespace detail {

inline ObjectSpec make_object(const ObjectFeatures& f, Point2 at) {
    ObjectSpec o;
    o.label = std::string(f.label);
    o.shape = parse_object_label(f.label).first;
    o.grey = f.grey;
    o.vertical = f.vertical;
    o.horizontal = f.horizontal;
    switch (f.vertical) {
        case VerticalPos::low:
            o.scale = {0.35, 0.35, 0.35};
            o.ground_clearance = 0.0;
            break;
        case VerticalPos::medium:
            o.scale = {0.9, 0.9, 0.9};
            o.ground_clearance = 0.0;
            break;
        case VerticalPos::high:
            o.scale = {0.5, 0.5, 0.5};
            o.ground_clearance = 2.2;
            break;
    }
    o.centroid = {at.x, o.ground_clearance + o.scale.y / 2.0, at.z};
    return o;
}

}  // namespace detail

/// True when p lies in one of the quads spanned by consecutive boundary pairs.
inline bool inside_path_polygon(const CourseGeometry& g, Point2 p) {
    auto cross = [](Point2 o, Point2 a, Point2 b) { return (a.x - o.x) * (b.z - o.z) - (a.z - o.z) * (b.x - o.x); };
    constexpr double eps = 1e-9;
    for (std::size_t i = 0; i + 1 < g.boundary_endpoints.size(); ++i) {
        const Point2 quad[4] = {g.boundary_endpoints[i].first, g.boundary_endpoints[i + 1].first,
                                g.boundary_endpoints[i + 1].second, g.boundary_endpoints[i].second};
        bool neg = false, pos = false;
        for (int k = 0; k < 4; ++k) {
            const double c = cross(quad[k], quad[(k + 1) % 4], p);
            if (c < -eps) neg = true;
            if (c > eps) pos = true;
        }
        if (!(neg && pos)) return true;
    }
    return false;
}

/// Deterministic snake-shaped course for an evaluation course id: 13 middle
/// points (11 turns), equal total length, four narrowings, and the nine
/// objects of that course with their tabulated features.
inline CourseGeometry builtin_course(Course c) {
    if (!is_evaluation_course(c)) throw DomainError("builtin_course: only courses A-F carry objects");
    Rng rng(0xC0FFEEULL + static_cast<std::uint64_t>(c));
    constexpr int n_segments = 12;

    std::vector<double> headings;
    double h = 0.0;
    headings.push_back(h);
    for (int i = 1; i < n_segments; ++i) {
        const double mag = rng.uniform() < 0.5 ? 45.0 : 90.0;
        double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        if (std::abs(h + sign * mag) > 90.0) sign = -sign;
        h += sign * mag;
        headings.push_back(h);
    }
    std::vector<double> lengths;
    double raw_total = 0.0;
    for (int i = 0; i < n_segments; ++i) {
        lengths.push_back(rng.uniform(3.0, 7.0));
        raw_total += lengths.back();
    }

    CourseGeometry g;
    g.course_id = c;
    Point2 p{0.0, 0.0};
    g.middle_points.push_back(p);
    for (int i = 0; i < n_segments; ++i) {
        const auto d = heading_dir(headings[i]);
        const double len = lengths[i] * kBuiltinPathLength / raw_total;
        p = {p.x + d.x * len, p.z + d.z * len};
        g.middle_points.push_back(p);
    }

    const std::size_t n = g.middle_points.size();
    for (std::size_t i = 0; i < n; ++i) {
        const bool narrow = i == 3 || i == 5 || i == 8 || i == 10;
        const double w = narrow ? kNarrowHalfWidth : kHalfWidth;
        const double h_in = headings[std::min<std::size_t>(i == 0 ? 0 : i - 1, n_segments - 1)];
        const double h_out = headings[std::min<std::size_t>(i, n_segments - 1)];
        const auto r_in = right_of(heading_dir(h_in));
        const auto r_out = right_of(heading_dir(h_out));
        Point2 m{r_in.x + r_out.x, r_in.z + r_out.z};
        const double mn = std::hypot(m.x, m.z);
        m = {m.x / mn, m.z / mn};
        const double miter = w / std::cos(deg2rad(std::abs(h_out - h_in) / 2.0));
        const auto& c0 = g.middle_points[i];
        g.boundary_endpoints.push_back({{c0.x - m.x * miter, c0.z - m.z * miter}, {c0.x + m.x * miter, c0.z + m.z * miter}});
    }

    // Objects at evenly spaced arc fractions, alternating sides.
    const auto features = course_object_features(c);
    std::vector<double> cum{0.0};
    for (std::size_t i = 1; i < n; ++i)
        cum.push_back(cum.back() + std::hypot(g.middle_points[i].x - g.middle_points[i - 1].x,
                                              g.middle_points[i].z - g.middle_points[i - 1].z));
    for (std::size_t j = 0; j < features.size(); ++j) {
        const double s = cum.back() * (0.12 + 0.09 * static_cast<double>(j));
        std::size_t seg = 0;
        while (seg + 2 < n && cum[seg + 1] < s) ++seg;
        const double f = (s - cum[seg]) / (cum[seg + 1] - cum[seg]);
        const auto& a = g.middle_points[seg];
        const auto& b = g.middle_points[seg + 1];
        const Point2 on{a.x + f * (b.x - a.x), a.z + f * (b.z - a.z)};
        const auto r = right_of(heading_dir(headings[seg]));
        double lateral = 0.0;
        switch (features[j].horizontal) {
            case HorizontalPos::on_path: lateral = 0.0; break;
            case HorizontalPos::partial: lateral = kHalfWidth; break;
            case HorizontalPos::off_path: lateral = kHalfWidth + 0.8; break;
        }
        if (j % 2 == 1) lateral = -lateral;
        Point2 at{on.x + r.x * lateral, on.z + r.z * lateral};
        if (features[j].horizontal == HorizontalPos::off_path) {
            // Near a bend the nominal spot can fall on a neighbouring segment.
            for (double extra : {0.0, 0.6, 1.2, 1.8}) {
                bool placed = false;
                for (double side : {1.0, -1.0}) {
                    const double l = side * (lateral + std::copysign(extra, lateral));
                    const Point2 cand{on.x + r.x * l, on.z + r.z * l};
                    if (!inside_path_polygon(g, cand)) {
                        at = cand;
                        placed = true;
                        break;
                    }
                }
                if (placed) break;
            }
        }
        g.objects.push_back(detail::make_object(features[j], at));
    }
    g.start_zone = {g.middle_points.front(), io::kZoneRadius};
    g.end_zone = {g.middle_points.back(), io::kZoneRadius};
    return g;
}

// ---------------------------------------------------------------------------
// Agent

struct AgentParams {
    double speed = 1.0;  ///< m/s
    behavior::FovModel fov;
    double detect_luminance_threshold = 1.0;  ///< cd/m2
    double dwell_to_destroy_s = 2.0;
    double reaction_delay_s = 0.5;
    double start_delay_s = 3.0;
    double timestamp_jitter_sd = 0.0008;  ///< s, pose stamps only
    std::uint64_t rng_seed = 0;
    double detect_range_m = 8.0;
    int n_pauses = 0;
    double pause_duration_s = 2.0;
    int n_off_path_events = 0;
    int n_collision_events = 0;
    double eye_invalid_fraction = 0.02;

    void validate() const {
        if (!(speed > 0.0) || !std::isfinite(speed)) throw DomainError("AgentParams: speed must be > 0");
        if (!(dwell_to_destroy_s >= 0.0)) throw DomainError("AgentParams: dwell must be >= 0");
        if (!(reaction_delay_s >= 0.0) || !(start_delay_s >= 0.0)) throw DomainError("AgentParams: delays must be >= 0");
        if (!(timestamp_jitter_sd >= 0.0)) throw DomainError("AgentParams: jitter sd must be >= 0");
        if (!(detect_range_m > 0.0)) throw DomainError("AgentParams: detection range must be > 0");
        if (n_pauses < 0 || n_off_path_events < 0 || n_collision_events < 0) throw DomainError("AgentParams: negative event count");
        if (!(pause_duration_s > 0.0)) throw DomainError("AgentParams: pause duration must be > 0");
        if (!(eye_invalid_fraction >= 0.0 && eye_invalid_fraction < 1.0)) throw DomainError("AgentParams: eye invalid fraction outside [0, 1)");
        fov.validate();
    }
};

struct ObjectOutcome {
    std::string label;
    bool detected = false;
};

struct GroundTruth {
    metrics::RunMetrics metrics;
    std::vector<ObjectOutcome> objects;

    std::vector<std::string> missed_labels() const {
        std::vector<std::string> out;
        for (const auto& o : objects)
            if (!o.detected) out.push_back(o.label);
        return out;
    }
};

struct SimulatedRun {
    io::RunRecord run;
    GroundTruth truth;
};

/// Arc-length parametrisation of the middle-point polyline.
class PathFollower {
public:
    explicit PathFollower(const std::vector<Point2>& pts) : pts_(pts) {
        if (pts_.empty()) throw DomainError("unreachable end zone: course has no middle points");
        cum_.push_back(0.0);
        for (std::size_t i = 1; i < pts_.size(); ++i)
            cum_.push_back(cum_.back() + std::hypot(pts_[i].x - pts_[i - 1].x, pts_[i].z - pts_[i - 1].z));
    }

    double length() const noexcept { return cum_.back(); }

    Point2 point(double s) const {
        if (pts_.size() == 1) return pts_.front();
        const std::size_t seg = segment(s);
        const double len = cum_[seg + 1] - cum_[seg];
        const double f = len > 0.0 ? std::clamp((s - cum_[seg]) / len, 0.0, 1.0) : 0.0;
        return {pts_[seg].x + f * (pts_[seg + 1].x - pts_[seg].x), pts_[seg].z + f * (pts_[seg + 1].z - pts_[seg].z)};
    }

    /// Heading in degrees of the segment containing s.
    double heading(double s) const {
        if (pts_.size() == 1) return 0.0;
        const std::size_t seg = segment(s);
        return rad2deg(std::atan2(pts_[seg + 1].x - pts_[seg].x, pts_[seg + 1].z - pts_[seg].z));
    }

private:
    std::size_t segment(double s) const {
        std::size_t seg = 0;
        while (seg + 2 < pts_.size() && cum_[seg + 1] <= s) ++seg;
        return seg;
    }

    std::vector<Point2> pts_;
    std::vector<double> cum_;
};

/// Motion timeline: stationary until start_delay, then constant speed with
/// evenly spaced pauses.
class Trajectory {
public:
    Trajectory(const CourseGeometry& course, const AgentParams& p) : path_(course.middle_points), p_(p) {
        for (int i = 0; i < p.n_pauses; ++i) pause_s_.push_back(path_.length() * (i + 1) / (p.n_pauses + 1));
        t_end_ = p.start_delay_s + path_.length() / p.speed + p.n_pauses * p.pause_duration_s;
    }

    Seconds t_end() const noexcept { return t_end_; }
    const std::vector<double>& pause_arcs() const noexcept { return pause_s_; }

    /// Motion time at which the agent reaches arc s (arriving side of a pause).
    Seconds time_at_arc(double s) const {
        double t = p_.start_delay_s + s / p_.speed;
        for (double ps : pause_s_)
            if (ps < s) t += p_.pause_duration_s;
        return t;
    }

    double arc(Seconds t) const {
        double moving = t - p_.start_delay_s;
        if (moving <= 0.0) return 0.0;
        for (double ps : pause_s_) {
            const double reach = ps / p_.speed;
            if (moving <= reach) break;
            if (moving <= reach + p_.pause_duration_s) return ps;
            moving -= p_.pause_duration_s;
        }
        return std::min(moving * p_.speed, path_.length());
    }

    PoseSample head(Seconds t) const {
        const double s = arc(t);
        const auto at = path_.point(s);
        PoseSample out;
        out.t = t;
        out.body_part = BodyPart::head;
        out.pos = {at.x, kHeadHeight, at.z};
        const double bob = 2.0 * std::numbers::pi * 0.5 * t;
        out.rot = euler_yxz_to_quaternion({path_.heading(s), 3.0 * std::sin(bob), 1.5 * std::sin(0.5 * bob)});
        return out;
    }

    PoseSample body(Seconds t) const {
        const double s = arc(t);
        const auto at = path_.point(s);
        PoseSample out;
        out.t = t;
        out.body_part = BodyPart::body;
        out.pos = {at.x, 0.9, at.z};
        out.rot = euler_yxz_to_quaternion({path_.heading(s), 0.0, 0.0});
        return out;
    }

    PoseSample hand(Seconds t) const {
        auto h = head(t);
        h.body_part = BodyPart::hand;
        const auto yaw_only = euler_yxz_to_quaternion({path_.heading(arc(t)), 0.0, 0.0});
        h.pos = h.pos + yaw_only.rotate({0.25, -0.5, 0.35});
        return h;
    }

private:
    PathFollower path_;
    AgentParams p_;
    std::vector<double> pause_s_;
    Seconds t_end_ = 0.0;
};

namespace detail {

inline Event make_event(Seconds t, Initiator who, Action a, std::string recipient = {}, std::string info = {}) {
    Event e;
    e.t = t;
    e.initiator = who;
    e.action = a;
    e.recipient = std::move(recipient);
    e.info = std::move(info);
    return e;
}

inline PoseStream jittered_stream(const Trajectory& tr, PoseSample (Trajectory::*sample)(Seconds) const, Rng& rng,
                                  double sd) {
    const auto k_last = static_cast<std::size_t>(std::ceil(tr.t_end() * kPoseHz - 1e-9));
    const double cap = 0.45 / kPoseHz;
    PoseStream out;
    out.reserve(k_last + 1);
    for (std::size_t k = 0; k <= k_last; ++k) {
        double t = static_cast<double>(k) / kPoseHz;
        if (k > 0 && k < k_last && sd > 0.0) t += std::clamp(sd * rng.normal(), -cap, cap);
        out.push_back((tr.*sample)(t));
    }
    return out;
}

}  // namespace detail

/// One run over `course` at `level`. Object events are derived from head poses
/// on the nominal 90 Hz grid; pose stamps carry jitter, events never do.
inline SimulatedRun simulate_run(const CourseGeometry& course, LightLevel level, const AgentParams& params,
                                 RunContext ctx = {}) {
    params.validate();
    if (course.middle_points.empty()) throw DomainError("unreachable end zone: course has no middle points");
    ctx.course_id = course.course_id;
    ctx.light_level = level;
    Rng rng(params.rng_seed);
    const Trajectory tr(course, params);
    const Seconds t_end = tr.t_end();
    const Seconds t_start = params.start_delay_s;

    SimulatedRun out;
    out.run.ctx = ctx;
    EventLog ev;
    ev.push_back(detail::make_event(0.0, Initiator::System, Action::launch));
    ev.push_back(detail::make_event(t_start, Initiator::User, Action::start));
    for (double ps : tr.pause_arcs()) {
        const Seconds t_stop = tr.time_at_arc(ps);
        ev.push_back(detail::make_event(t_stop, Initiator::User, Action::stop));
        ev.push_back(detail::make_event(t_stop + params.pause_duration_s, Initiator::User, Action::start));
    }
    const double moving = t_end - t_start;
    for (int i = 0; i < params.n_off_path_events; ++i)
        ev.push_back(detail::make_event(t_start + moving * (i + 0.5) / (params.n_off_path_events + 1), Initiator::User,
                                        Action::exit, "Path"));
    for (int i = 0; i < params.n_collision_events; ++i)
        ev.push_back(detail::make_event(t_start + moving * (i + 0.3) / (params.n_collision_events + 1), Initiator::User,
                                        Action::collide, "Wall"));

    // Perception on the nominal grid.
    const auto k_last = static_cast<std::size_t>(std::floor(t_end * kPoseHz + 1e-9));
    std::vector<PoseSample> grid;
    grid.reserve(k_last + 1);
    for (std::size_t k = 0; k <= k_last; ++k) grid.push_back(tr.head(static_cast<double>(k) / kPoseHz));
    const double hold = params.reaction_delay_s + params.dwell_to_destroy_s;

    int destroyed = 0;
    for (const auto& obj : course.objects) {
        ObjectOutcome oc{obj.label, false};
        const bool bright = photometry::object_luminance(obj.grey, level) >= params.detect_luminance_threshold;
        if (bright) {
            auto visible = [&](std::size_t k) {
                return (obj.centroid - grid[k].pos).norm() <= params.detect_range_m && behavior::in_fov(grid[k], obj.centroid, params.fov);
            };
            std::size_t k = 0;
            while (k < grid.size() && !oc.detected) {
                if (!visible(k)) {
                    ++k;
                    continue;
                }
                const Seconds t_in = grid[k].t;
                ev.push_back(detail::make_event(t_in, Initiator::User, Action::gaze_in, obj.label));
                const Seconds t_done = t_in + hold;
                std::size_t j = k + 1;
                while (j < grid.size() && grid[j].t <= t_done && visible(j)) ++j;
                if (j < grid.size() && grid[j].t <= t_done) {
                    ev.push_back(detail::make_event(grid[j].t, Initiator::User, Action::gaze_out, obj.label));
                    k = j + 1;
                } else if (t_done < t_end) {
                    ev.push_back(detail::make_event(t_done, Initiator::User, Action::destroy, obj.label));
                    ev.push_back(detail::make_event(t_done, Initiator::User, Action::gaze_out, obj.label));
                    oc.detected = true;
                } else {
                    break;  // still looking when the run ends; the episode stays open
                }
            }
        }
        if (oc.detected) ++destroyed;
        out.truth.objects.push_back(oc);
    }
    ev.push_back(detail::make_event(t_end, Initiator::System, Action::end, "", "end zone reached"));
    std::stable_sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
    // System end closes the log even when a same-stamp object event was produced.
    auto end_it = std::find_if(ev.begin(), ev.end(), [](const Event& e) { return e.is(Initiator::System, Action::end); });
    std::rotate(end_it, end_it + 1, std::find_if(end_it, ev.end(), [&](const Event& e) { return e.t > t_end; }));
    out.run.events = std::move(ev);

    out.run.head = detail::jittered_stream(tr, &Trajectory::head, rng, params.timestamp_jitter_sd);
    out.run.body = out.run.head;
    for (auto& s : out.run.body) s = tr.body(s.t);
    out.run.hand = detail::jittered_stream(tr, &Trajectory::hand, rng, params.timestamp_jitter_sd);

    // Eye tracker: 120 Hz on its own clock, first sample aligned with motion t = 0.
    const double clock_offset = 1000.0 + std::floor(rng.uniform(0.0, 500.0) * 1000.0) / 1000.0;
    const auto n_eye = static_cast<std::size_t>(std::floor(t_end * kEyeHz + 1e-9)) + 1;
    for (std::size_t k = 0; k < n_eye; ++k) {
        const Seconds t = static_cast<double>(k) / kEyeHz;
        const auto h = tr.head(t);
        GazeSample g;
        g.t = t + clock_offset;
        g.valid = k == 0 || rng.uniform() >= params.eye_invalid_fraction;
        if (g.valid) {
            g.origin = h.pos + h.rot.rotate({0.0, -0.05, 0.08}) + Vec3{0.003 * rng.normal(), 0.003 * rng.normal(), 0.003 * rng.normal()};
            g.direction = h.rot.rotate({0.0, 0.0, 1.0});
        }
        out.run.eye.push_back(g);
    }

    auto& m = out.truth.metrics;
    m.time_duration_s = t_end - t_start;
    m.time_before_first_step_s = t_start;
    m.n_off_path = params.n_off_path_events;
    m.n_collisions = params.n_collision_events;
    m.n_stops = params.n_pauses;
    m.n_missed_objects = static_cast<int>(course.objects.size()) - destroyed;
    return out;
}

// ---------------------------------------------------------------------------
// Suites

struct SuiteSpec {
    std::vector<Course> courses{kEvaluationCourses.begin(), kEvaluationCourses.end()};
    std::vector<int> levels{1, 2, 3, 4, 5, 6};
    int n_runs = 36;
    AgentParams base;
    std::uint64_t seed = 0;
    bool inject_issues = false;  ///< plants destroy-after-end and missing-end defects and lists them in meta_data/issues.csv
    unsigned jobs = 1;
};

struct SuiteRun {
    RunContext ctx;
    GroundTruth truth;
};

struct Suite {
    fs::path root;
    std::vector<SuiteRun> runs;
    IssueTable issues;
};

inline constexpr int kSuiteFirstSubject = 101;

/// Run i: course courses[i % nc], level levels[(i / nc + i) % nl], so a run count
/// of nc * nl crosses every course with every level once.
inline RunContext suite_context(const SuiteSpec& spec, int i) {
    RunContext ctx;
    ctx.subject_id = kSuiteFirstSubject + i / 12;
    ctx.run_order = RunOrder::evaluation(1 + i % 12);
    const auto nc = static_cast<int>(spec.courses.size());
    const auto nl = static_cast<int>(spec.levels.size());
    ctx.course_id = spec.courses[static_cast<std::size_t>(i % nc)];
    ctx.light_level = LightLevel(spec.levels[static_cast<std::size_t>((i / nc + i) % nl)]);
    ctx.experimenter_notes = "synthetic";
    return ctx;
}

inline std::string ground_truth_header() {
    return "subject_id,run_order,course,light_level,time_duration_s,time_before_first_step_s,n_off_path,"
           "n_missed_objects,n_collisions,n_stops,missed_objects";
}

inline std::string format_ground_truth(const std::vector<SuiteRun>& runs) {
    std::string out = ground_truth_header() + "\n";
    for (const auto& r : runs) {
        const auto& m = r.truth.metrics;
        out += std::to_string(r.ctx.subject_id) + "," + r.ctx.run_order.label() + "," + course_letter(r.ctx.course_id) + "," +
               std::to_string(r.ctx.light_level.value()) + "," + text::format_double(m.time_duration_s) + "," +
               text::format_double(m.time_before_first_step_s) + "," + std::to_string(m.n_off_path) + "," +
               std::to_string(m.n_missed_objects) + "," + std::to_string(m.n_collisions) + "," + std::to_string(m.n_stops) + "," +
               text::join(r.truth.missed_labels(), '|') + "\n";
    }
    return out;
}

/// Reads ground_truth.csv; per-object flags are rebuilt as "missed" entries only.
inline std::vector<SuiteRun> read_ground_truth(const fs::path& path) {
    const auto lines = text::read_lines(path);
    if (lines.empty() || text::trim(lines.front()) != ground_truth_header())
        throw ParseError(path, 1, "unexpected ground-truth header");
    std::vector<SuiteRun> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (text::trim(lines[i]).empty()) continue;
        const auto f = text::split(lines[i], ',');
        if (f.size() != 11) throw ParseError(path, i + 1, "expected 11 fields");
        SuiteRun r;
        auto need_int = [&](std::string_view s) {
            const auto v = text::parse_int(s);
            if (!v) throw ParseError(path, i + 1, "bad integer '" + std::string(s) + "'");
            return static_cast<int>(*v);
        };
        auto need_double = [&](std::string_view s) {
            const auto v = text::parse_double(s);
            if (!v) throw ParseError(path, i + 1, "bad number '" + std::string(s) + "'");
            return *v;
        };
        r.ctx.subject_id = need_int(f[0]);
        r.ctx.run_order = parse_run_order(f[1]);
        r.ctx.course_id = parse_course(f[2]);
        r.ctx.light_level = LightLevel(need_int(f[3]));
        auto& m = r.truth.metrics;
        m.time_duration_s = need_double(f[4]);
        m.time_before_first_step_s = need_double(f[5]);
        m.n_off_path = need_int(f[6]);
        m.n_missed_objects = need_int(f[7]);
        m.n_collisions = need_int(f[8]);
        m.n_stops = need_int(f[9]);
        for (auto label : text::split(f[10], '|'))
            if (!label.empty()) r.truth.objects.push_back({std::string(label), false});
        out.push_back(std::move(r));
    }
    return out;
}

namespace detail {

/// Defect planted in run i when issue injection is on.
inline std::optional<IssueKind> planted_issue(int i) {
    if (i % 10 == 3) return IssueKind::destroy_after_end;
    if (i % 10 == 7) return IssueKind::missing_system_end;
    return std::nullopt;
}

inline void plant(io::RunRecord& run, IssueKind kind, const GroundTruth& truth) {
    const auto end_it = std::find_if(run.events.begin(), run.events.end(), [](const Event& e) { return e.is(Initiator::System, Action::end); });
    const Seconds t_end = end_it->t;
    if (kind == IssueKind::missing_system_end) {
        Event marker = make_event(t_end, Initiator::System, Action::other, "", "log closed without end");
        marker.other_action = "save";
        *end_it = marker;
    } else {
        // A late destroy on an object the agent never reached (or on the first object again).
        const auto missed = truth.missed_labels();
        const std::string label = missed.empty() ? truth.objects.front().label : missed.front();
        run.events.push_back(make_event(t_end + 0.5, Initiator::User, Action::destroy, label));
    }
}

}  // namespace detail

/// Writes meta_data/ (course files, Result_H.csv, optional issues.csv),
/// test_data/<subject>/<run>/ raw files and ground_truth.csv under `root`.
inline Suite generate_suite(const fs::path& root, const SuiteSpec& spec) {
    if (spec.n_runs <= 0) throw DomainError("generate_suite: n_runs must be positive");
    if (spec.courses.empty() || spec.levels.empty()) throw DomainError("generate_suite: need at least one course and one level");
    for (Course c : spec.courses)
        if (!is_evaluation_course(c)) throw DomainError("generate_suite: courses must be evaluation courses A-F");
    for (int l : spec.levels) (void)LightLevel(l);
    spec.base.validate();

    const auto layout = io::DatasetRoot::at(root);
    std::map<Course, CourseGeometry> geometry;
    for (Course c : kEvaluationCourses) {
        geometry.emplace(c, builtin_course(c));
        io::write_course_meta(layout.meta_dir, geometry.at(c));
    }

    Suite suite;
    suite.root = root;
    suite.runs.resize(static_cast<std::size_t>(spec.n_runs));
    std::vector<IssueKind> planted(static_cast<std::size_t>(spec.n_runs));
    std::vector<char> has_plant(static_cast<std::size_t>(spec.n_runs), 0);
    parallel_for(static_cast<std::size_t>(spec.n_runs), spec.jobs, [&](std::size_t idx) {
        const int i = static_cast<int>(idx);
        auto ctx = suite_context(spec, i);
        AgentParams p = spec.base;
        p.rng_seed = splitmix64(spec.seed ^ (0x9E3779B97F4A7C15ULL * (idx + 1)));
        auto sim = simulate_run(geometry.at(ctx.course_id), ctx.light_level, p, ctx);
        if (spec.inject_issues) {
            if (const auto kind = detail::planted_issue(i)) {
                detail::plant(sim.run, *kind, sim.truth);
                planted[idx] = *kind;
                has_plant[idx] = 1;
            }
        }
        io::write_raw_run(layout.raw_dir, sim.run);
        suite.runs[idx] = {sim.run.ctx, std::move(sim.truth)};
    });

    std::vector<RunContext> contexts;
    for (const auto& r : suite.runs) contexts.push_back(r.ctx);
    text::write_file(io::summary_file(layout.meta_dir), io::format_results_summary(contexts));
    if (spec.inject_issues) {
        std::vector<Issue> issues;
        for (std::size_t i = 0; i < suite.runs.size(); ++i)
            if (has_plant[i]) issues.push_back({suite.runs[i].ctx.subject_id, suite.runs[i].ctx.run_order, planted[i], false});
        suite.issues = IssueTable(std::move(issues));
        text::write_file(layout.meta_dir / "issues.csv", io::format_issue_table(suite.issues));
    }
    text::write_file(root / "ground_truth.csv", format_ground_truth(suite.runs));
    return suite;
}

}  // namespace vrsom::simgen
