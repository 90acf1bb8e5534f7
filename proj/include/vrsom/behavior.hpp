#pragma once

// Missed-object behaviour: gaze episodes from the interaction log, time spent
// inside the head's field of view, and the feature cross-tabulations of the
// missed objects.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "vrsom/core_model.hpp"
#include "vrsom/dataset_io.hpp"
#include "vrsom/error.hpp"
#include "vrsom/text.hpp"

namespace vrsom::behavior {

struct GazeEpisode {
    std::string object_label;
    Seconds t_in = 0.0;
    Seconds t_out = 0.0;

    double duration() const noexcept { return t_out - t_in; }
};

struct EpisodeResult {
    std::vector<GazeEpisode> episodes;
    std::vector<std::string> log;

    double total_duration() const noexcept {
        double s = 0.0;
        for (const auto& e : episodes) s += e.duration();
        return s;
    }
};

/// Pairs gaze in/out events on one object. A gaze out with no open episode is
/// dropped; an episode still open at the end is closed at System end (or at the
/// last logged event when the log has no end).
inline EpisodeResult gaze_episodes(const EventLog& events, const std::string& object_label) {
    EpisodeResult out;
    std::optional<Seconds> open;
    std::optional<Seconds> t_end;
    for (const auto& e : events) {
        if (e.is(Initiator::System, Action::end) && !t_end) t_end = e.t;
        if (e.recipient != object_label) continue;
        if (e.action == Action::gaze_in) {
            if (open) {
                out.log.push_back(object_label + ": nested gaze in at t=" + text::format_double(e.t) + " ignored");
                continue;
            }
            open = e.t;
        } else if (e.action == Action::gaze_out) {
            if (!open) {
                out.log.push_back(object_label + ": gaze out at t=" + text::format_double(e.t) + " without gaze in dropped");
                continue;
            }
            out.episodes.push_back({object_label, *open, e.t});
            open.reset();
        }
    }
    if (open) {
        const Seconds close = t_end ? *t_end : (events.empty() ? *open : events.back().t);
        out.episodes.push_back({object_label, *open, std::max(*open, close)});
        out.log.push_back(object_label + ": open gaze closed at t=" + text::format_double(close));
    }
    return out;
}

/// Symmetric angular field of view around the head's forward (+Z) axis.
struct FovModel {
    double horizontal_half_angle_deg = kEffectiveHorizontalFovDeg / 2.0;
    double vertical_half_angle_deg = kEffectiveHorizontalFovDeg / 2.0;

    void validate() const {
        for (double a : {horizontal_half_angle_deg, vertical_half_angle_deg})
            if (!(a > 0.0 && a < 90.0)) throw DomainError("field-of-view half angles must lie in (0, 90) degrees");
    }
};

/// Horizontal bearing and elevation (degrees) of `target` in the head frame.
struct Bearing {
    double azimuth_deg = 0.0;
    double elevation_deg = 0.0;
};

inline Bearing head_local_bearing(const PoseSample& head, Vec3 target) {
    const Vec3 local = head.rot.conjugate().rotate(target - head.pos);
    return {rad2deg(std::atan2(local.x, local.z)), rad2deg(std::atan2(local.y, std::hypot(local.x, local.z)))};
}

/// Boundary inclusive.
inline bool in_fov(const PoseSample& head, Vec3 target, const FovModel& fov) {
    if ((target - head.pos).norm() == 0.0) return false;
    const auto b = head_local_bearing(head, target);
    constexpr double eps = 1e-9;
    return std::abs(b.azimuth_deg) <= fov.horizontal_half_angle_deg + eps &&
           std::abs(b.elevation_deg) <= fov.vertical_half_angle_deg + eps;
}

/// Time the object's centroid spends inside the field of view. Each frame k
/// contributes the interval to frame k + 1 when visible.
inline double in_fov_duration(const PoseStream& head_stream, const ObjectSpec& obj, const FovModel& fov = {}) {
    fov.validate();
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < head_stream.size(); ++k)
        if (in_fov(head_stream[k], obj.centroid, fov)) total += head_stream[k + 1].t - head_stream[k].t;
    return total;
}

struct MissedObjectRow {
    int subject_id = 0;
    RunOrder run_order;
    Course course_id = Course::A;
    int light_level = 1;
    std::string object_label;
    Shape shape = Shape::cube;
    int grey = 83;
    VerticalPos vertical = VerticalPos::low;
    HorizontalPos horizontal = HorizontalPos::on_path;
    int n_gazes = 0;
    double gaze_duration_s = 0.0;
    double in_fov_duration_s = 0.0;

    friend bool operator==(const MissedObjectRow&, const MissedObjectRow&) = default;
};

/// Rows for every object a run did not destroy.
inline std::vector<MissedObjectRow> missed_objects_for_run(const io::RunRecord& run, const CourseGeometry& course,
                                                           const FovModel& fov = {}) {
    std::set<std::string> destroyed;
    for (const auto& e : run.events) {
        const bool object_event = e.action == Action::destroy || e.action == Action::gaze_in || e.action == Action::gaze_out;
        if (!object_event || e.recipient.empty()) continue;
        if (!course.find_object(e.recipient))
            throw DomainError("run " + run.ctx.run_id() + ": event names object '" + e.recipient +
                              "' which is not in course " + course_letter(course.course_id));
        if (e.is(Initiator::User, Action::destroy)) destroyed.insert(e.recipient);
    }
    std::vector<MissedObjectRow> rows;
    for (const auto& obj : course.objects) {
        if (destroyed.contains(obj.label)) continue;
        const auto ep = gaze_episodes(run.events, obj.label);
        MissedObjectRow r;
        r.subject_id = run.ctx.subject_id;
        r.run_order = run.ctx.run_order;
        r.course_id = course.course_id;
        r.light_level = run.ctx.light_level.value();
        r.object_label = obj.label;
        r.shape = obj.shape;
        r.grey = obj.grey;
        r.vertical = obj.vertical;
        r.horizontal = obj.horizontal;
        r.n_gazes = static_cast<int>(ep.episodes.size());
        r.gaze_duration_s = ep.total_duration();
        r.in_fov_duration_s = in_fov_duration(run.head, obj, fov);
        rows.push_back(std::move(r));
    }
    return rows;
}

inline void sort_rows(std::vector<MissedObjectRow>& rows) {
    std::sort(rows.begin(), rows.end(), [](const MissedObjectRow& a, const MissedObjectRow& b) {
        return std::tie(a.subject_id, a.run_order, a.object_label) < std::tie(b.subject_id, b.run_order, b.object_label);
    });
}

/// One row per (run, undestroyed object) over all runs, sorted by subject, run order, label.
inline std::vector<MissedObjectRow> missed_object_table(const std::vector<io::RunRecord>& runs,
                                                        const std::map<Course, CourseGeometry>& course_meta,
                                                        const FovModel& fov = {}) {
    std::vector<MissedObjectRow> rows;
    for (const auto& run : runs) {
        const auto it = course_meta.find(run.ctx.course_id);
        if (it == course_meta.end())
            throw DomainError(std::string("no metadata for course ") + course_letter(run.ctx.course_id));
        auto r = missed_objects_for_run(run, it->second, fov);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    sort_rows(rows);
    return rows;
}

// ---------------------------------------------------------------------------
// Cross-tabulations

enum class Feature { grey, light_level, n_gazes, vertical, horizontal };

inline std::string_view to_string(Feature f) noexcept {
    switch (f) {
        case Feature::grey: return "grey";
        case Feature::light_level: return "light_level";
        case Feature::n_gazes: return "n_gazes";
        case Feature::vertical: return "vertical";
        case Feature::horizontal: return "horizontal";
    }
    return "?";
}

inline std::string feature_value(const MissedObjectRow& r, Feature f) {
    switch (f) {
        case Feature::grey: return std::to_string(r.grey);
        case Feature::light_level: return "L" + std::to_string(r.light_level);
        case Feature::n_gazes: return std::to_string(r.n_gazes);
        case Feature::vertical: return std::string(to_string(r.vertical));
        case Feature::horizontal: return std::string(to_string(r.horizontal));
    }
    return {};
}

/// Full category domain of a feature (n_gazes: the values observed, ascending).
inline std::vector<std::string> feature_domain(Feature f, const std::vector<MissedObjectRow>& rows) {
    switch (f) {
        case Feature::grey: return {"83", "111", "134"};
        case Feature::light_level: return {"L1", "L2", "L3", "L4", "L5", "L6"};
        case Feature::vertical: return {"low", "medium", "high"};
        case Feature::horizontal: return {"on_path", "partial", "off_path"};
        case Feature::n_gazes: {
            std::set<int> seen;
            for (const auto& r : rows) seen.insert(r.n_gazes);
            std::vector<std::string> out;
            for (int g : seen) out.push_back(std::to_string(g));
            return out;
        }
    }
    return {};
}

struct CrossTab {
    Feature row_feature;
    Feature col_feature;
    std::vector<std::string> row_values;
    std::vector<std::string> col_values;
    std::vector<std::vector<int>> counts;  ///< [row][col]

    int count(std::string_view row, std::string_view col) const {
        const auto r = std::find(row_values.begin(), row_values.end(), row);
        const auto c = std::find(col_values.begin(), col_values.end(), col);
        if (r == row_values.end() || c == col_values.end()) return 0;
        return counts[static_cast<std::size_t>(r - row_values.begin())][static_cast<std::size_t>(c - col_values.begin())];
    }
    int row_total(std::string_view row) const {
        int s = 0;
        for (const auto& c : col_values) s += count(row, c);
        return s;
    }
};

inline CrossTab cross_tabulate(const std::vector<MissedObjectRow>& rows, Feature row_f, Feature col_f) {
    CrossTab t{row_f, col_f, feature_domain(row_f, rows), feature_domain(col_f, rows), {}};
    t.counts.assign(t.row_values.size(), std::vector<int>(t.col_values.size(), 0));
    for (const auto& r : rows) {
        const auto rv = std::find(t.row_values.begin(), t.row_values.end(), feature_value(r, row_f));
        const auto cv = std::find(t.col_values.begin(), t.col_values.end(), feature_value(r, col_f));
        ++t.counts[static_cast<std::size_t>(rv - t.row_values.begin())][static_cast<std::size_t>(cv - t.col_values.begin())];
    }
    return t;
}

/// The six missed-object panels: grey x light, gazes x light, gazes x grey,
/// vertical x horizontal, grey x vertical, grey x horizontal.
inline std::vector<CrossTab> missed_object_panels(const std::vector<MissedObjectRow>& rows) {
    using F = Feature;
    return {cross_tabulate(rows, F::grey, F::light_level),    cross_tabulate(rows, F::n_gazes, F::light_level),
            cross_tabulate(rows, F::n_gazes, F::grey),        cross_tabulate(rows, F::vertical, F::horizontal),
            cross_tabulate(rows, F::grey, F::vertical),       cross_tabulate(rows, F::grey, F::horizontal)};
}

// ---------------------------------------------------------------------------
// missed_obj_info.txt

inline constexpr std::string_view kMissedHeader =
    "subject_id;run_order;course;light_level;object;shape;grey;vertical;horizontal;n_gazes;gaze_duration_s;in_fov_duration_s";

inline std::string format_missed_obj_info(const std::vector<MissedObjectRow>& rows) {
    std::string out(kMissedHeader);
    out += '\n';
    for (const auto& r : rows) {
        out += std::to_string(r.subject_id) + ";" + r.run_order.label() + ";" + course_letter(r.course_id) + ";" +
               std::to_string(r.light_level) + ";" + r.object_label + ";" + std::string(to_string(r.shape)) + ";" +
               std::to_string(r.grey) + ";" + std::string(to_string(r.vertical)) + ";" +
               std::string(to_string(r.horizontal)) + ";" + std::to_string(r.n_gazes) + ";" +
               text::format_double(r.gaze_duration_s) + ";" + text::format_double(r.in_fov_duration_s) + "\n";
    }
    return out;
}

inline std::vector<MissedObjectRow> read_missed_obj_info(const std::filesystem::path& path) {
    const auto lines = text::read_lines(path);
    std::vector<MissedObjectRow> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (text::trim(lines[i]).empty()) continue;
        const auto f = text::split(lines[i], ';');
        if (f.size() != 12) throw ParseError(path, i + 1, "expected 12 fields");
        MissedObjectRow r;
        try {
            const auto subj = text::parse_int(f[0]);
            const auto lvl = text::parse_int(f[3]);
            const auto grey = text::parse_int(f[6]);
            const auto ng = text::parse_int(f[9]);
            const auto gd = text::parse_double(f[10]);
            const auto fd = text::parse_double(f[11]);
            const auto shape = parse_shape(f[5]);
            const auto v = parse_vertical(f[7]);
            const auto h = parse_horizontal(f[8]);
            if (!subj || !lvl || !grey || !ng || !gd || !fd || !shape || !v || !h) throw DomainError("malformed field");
            r.subject_id = static_cast<int>(*subj);
            r.run_order = parse_run_order(f[1]);
            r.course_id = parse_course(f[2]);
            r.light_level = LightLevel(static_cast<int>(*lvl)).value();
            r.object_label = std::string(f[4]);
            r.shape = *shape;
            r.grey = static_cast<int>(*grey);
            r.vertical = *v;
            r.horizontal = *h;
            r.n_gazes = static_cast<int>(*ng);
            r.gaze_duration_s = *gd;
            r.in_fov_duration_s = *fd;
        } catch (const DomainError& e) {
            throw ParseError(path, i + 1, e.what());
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace vrsom::behavior
