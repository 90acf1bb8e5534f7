#pragma once

// On-disk dataset layout.
//
//   <root>/meta_data/            Course X.csv, middle_points_X.txt, endpoints_X.txt,
//                                Result_H.csv (run summary), missed_obj_info.txt,
//                                issues.csv (optional, extra issue entries)
//   <root>/test_data/<subject>/<run>/        Events.txt, Position_Data.txt,
//                                            Hand_Data.txt, RawEye_Data.txt
//   <root>/test_data_processed/<subject>/<run>/  CorrectedEvents.txt,
//                                            CorrectedEye_Data.txt,
//                                            InterpolatedPosition_Data.txt
//
// Column layouts of the raw streams are described by a ColumnSchema; the
// defaults are listed in default_schemas() and can be overridden from JSON.

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vrsom/core_model.hpp"
#include "vrsom/error.hpp"
#include "vrsom/reference_tables.hpp"
#include "vrsom/text.hpp"

namespace vrsom::io {

namespace fs = std::filesystem;

struct DatasetRoot {
    fs::path meta_dir;
    fs::path raw_dir;
    fs::path processed_dir;

    static DatasetRoot at(const fs::path& root) {
        return {root / "meta_data", root / "test_data", root / "test_data_processed"};
    }

    /// Throws unless meta_dir holds the course files of A..F.
    void validate() const;
};

inline fs::path course_meta_file(const fs::path& meta_dir, Course c) {
    return meta_dir / (std::string("Course ") + course_letter(c) + ".csv");
}
inline fs::path middle_points_file(const fs::path& meta_dir, Course c) {
    return meta_dir / (std::string("middle_points_") + course_letter(c) + ".txt");
}
inline fs::path endpoints_file(const fs::path& meta_dir, Course c) {
    return meta_dir / (std::string("endpoints_") + course_letter(c) + ".txt");
}
inline fs::path summary_file(const fs::path& meta_dir) { return meta_dir / "Result_H.csv"; }
inline fs::path run_directory(const fs::path& data_dir, int subject, const RunOrder& order) {
    return data_dir / std::to_string(subject) / order.label();
}

inline void DatasetRoot::validate() const {
    for (Course c : kEvaluationCourses) {
        for (const auto& p : {course_meta_file(meta_dir, c), middle_points_file(meta_dir, c), endpoints_file(meta_dir, c)})
            if (!fs::exists(p)) throw IoError("dataset meta_data incomplete: missing " + p.string());
    }
}

// ---------------------------------------------------------------------------
// Column schemas

enum class StreamKind { events, position, hand, eye };

inline std::string_view to_string(StreamKind k) noexcept {
    switch (k) {
        case StreamKind::events: return "events";
        case StreamKind::position: return "position";
        case StreamKind::hand: return "hand";
        case StreamKind::eye: return "eye";
    }
    return "?";
}

inline std::vector<std::string> required_fields(StreamKind k) {
    auto pose = [](std::string_view part) {
        std::vector<std::string> f;
        for (auto kind : {"pos", "rot"})
            for (auto ax : {"x", "y", "z"}) f.push_back(std::string(part) + "." + kind + "." + ax);
        return f;
    };
    std::vector<std::string> out{"timestamp"};
    switch (k) {
        case StreamKind::events:
            out.insert(out.end(), {"initiator", "action", "recipient"});
            break;
        case StreamKind::position: {
            auto h = pose("head"), b = pose("body");
            out.insert(out.end(), h.begin(), h.end());
            out.insert(out.end(), b.begin(), b.end());
            break;
        }
        case StreamKind::hand: {
            auto h = pose("hand");
            out.insert(out.end(), h.begin(), h.end());
            break;
        }
        case StreamKind::eye:
            out.insert(out.end(), {"valid", "origin.x", "origin.y", "origin.z", "direction.x", "direction.y", "direction.z"});
            break;
    }
    return out;
}

/// Maps logical fields to 0-based column indices. delimiter == 0 means autodetect.
struct ColumnSchema {
    char delimiter = 0;
    int header_rows = 1;
    std::map<std::string, int> columns;

    int column(const std::string& field) const {
        const auto it = columns.find(field);
        if (it == columns.end()) throw DomainError("schema does not map field '" + field + "'");
        return it->second;
    }
    std::optional<int> optional_column(const std::string& field) const {
        const auto it = columns.find(field);
        if (it == columns.end()) return std::nullopt;
        return it->second;
    }
    int max_column() const {
        int m = -1;
        for (const auto& [k, v] : columns) m = std::max(m, v);
        return m;
    }

    /// Every required field present, indices non-negative and distinct.
    void validate(StreamKind kind) const {
        for (const auto& f : required_fields(kind))
            if (!columns.contains(f))
                throw DomainError("schema for " + std::string(to_string(kind)) + " stream lacks field '" + f + "'");
        std::set<int> used;
        for (const auto& [f, idx] : columns) {
            if (idx < 0) throw DomainError("schema field '" + f + "' has a negative column");
            if (!used.insert(idx).second)
                throw DomainError("schema for " + std::string(to_string(kind)) + " maps two fields to column " + std::to_string(idx));
        }
        if (header_rows < 0) throw DomainError("header_rows must be >= 0");
    }

    /// Header line naming each mapped column, joined with `delim`.
    std::string header_line(char delim) const {
        std::vector<std::string> names(static_cast<std::size_t>(max_column() + 1), "");
        for (const auto& [f, idx] : columns) names[static_cast<std::size_t>(idx)] = f;
        return text::join(names, delim);
    }
};

struct SchemaSet {
    ColumnSchema events;
    ColumnSchema position;
    ColumnSchema hand;
    ColumnSchema eye;

    const ColumnSchema& get(StreamKind k) const {
        switch (k) {
            case StreamKind::events: return events;
            case StreamKind::position: return position;
            case StreamKind::hand: return hand;
            case StreamKind::eye: return eye;
        }
        return events;
    }
    ColumnSchema& get(StreamKind k) { return const_cast<ColumnSchema&>(std::as_const(*this).get(k)); }

    void validate() const {
        for (auto k : {StreamKind::events, StreamKind::position, StreamKind::hand, StreamKind::eye}) get(k).validate(k);
    }
};

/// Timestamp first, then per body part position x,y,z followed by Euler rotation x,y,z
/// (x = pitch, y = yaw, z = roll, degrees).
inline SchemaSet default_schemas() {
    SchemaSet s;
    auto sequential = [](const std::vector<std::string>& fields) {
        ColumnSchema c;
        for (std::size_t i = 0; i < fields.size(); ++i) c.columns[fields[i]] = static_cast<int>(i);
        return c;
    };
    s.events = sequential({"timestamp", "initiator", "action", "recipient", "info"});
    s.position = sequential(required_fields(StreamKind::position));
    s.hand = sequential(required_fields(StreamKind::hand));
    s.eye = sequential(required_fields(StreamKind::eye));
    return s;
}

/// JSON overrides, e.g. {"eye": {"delimiter": "tab", "header_rows": 0, "columns": {...}}}.
/// Streams not mentioned keep their default layout.
inline SchemaSet load_schemas(const fs::path& path) {
    SchemaSet s = default_schemas();
    nlohmann::json j;
    try {
        const auto lines = text::read_lines(path);
        std::string all;
        for (const auto& l : lines) all += l + "\n";
        j = nlohmann::json::parse(all);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path, 0, std::string("invalid schema JSON: ") + e.what());
    }
    for (auto k : {StreamKind::events, StreamKind::position, StreamKind::hand, StreamKind::eye}) {
        const std::string key(to_string(k));
        if (!j.contains(key)) continue;
        const auto& o = j.at(key);
        ColumnSchema c;
        try {
            const std::string d = o.value("delimiter", std::string("auto"));
            if (d == "auto") c.delimiter = 0;
            else if (d == "tab" || d == "\t") c.delimiter = '\t';
            else if (d.size() == 1) c.delimiter = d[0];
            else throw ParseError(path, 0, "bad delimiter '" + d + "' for " + key);
            c.header_rows = o.value("header_rows", 1);
            for (const auto& [field, idx] : o.at("columns").items()) c.columns[field] = idx.get<int>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path, 0, "schema entry '" + key + "': " + e.what());
        }
        s.get(k) = std::move(c);
    }
    try {
        s.validate();
    } catch (const DomainError& e) {
        throw ParseError(path, 0, e.what());
    }
    return s;
}

// ---------------------------------------------------------------------------
// Parse reports

struct FileReport {
    std::string file;
    std::size_t rows_read = 0;
    std::size_t rows_parsed = 0;
    std::size_t rows_dropped = 0;
    std::size_t reordered = 0;  ///< rows out of timestamp order before the stable sort
    std::map<std::string, std::size_t> unknown_actions;
    std::vector<std::string> warnings;
};

struct ParseReport {
    std::vector<FileReport> files;

    std::size_t total_dropped() const {
        std::size_t n = 0;
        for (const auto& f : files) n += f.rows_dropped;
        return n;
    }
    std::size_t total_unknown_actions() const {
        std::size_t n = 0;
        for (const auto& f : files)
            for (const auto& [k, v] : f.unknown_actions) n += v;
        return n;
    }
};

inline nlohmann::json to_json(const FileReport& f) {
    return {{"file", f.file},
            {"rows_read", f.rows_read},
            {"rows_parsed", f.rows_parsed},
            {"rows_dropped", f.rows_dropped},
            {"reordered", f.reordered},
            {"unknown_actions", f.unknown_actions},
            {"warnings", f.warnings}};
}

// ---------------------------------------------------------------------------
// Run records

struct RunRecord {
    RunContext ctx;
    EventLog events;
    PoseStream head;
    PoseStream body;
    PoseStream hand;
    GazeStream eye;
    ParseReport report;
    bool eye_usable = true;
    std::string excluded_reason;

    friend bool operator==(const RunRecord& a, const RunRecord& b) {
        return a.ctx == b.ctx && a.events == b.events && a.head == b.head && a.body == b.body && a.hand == b.hand &&
               a.eye == b.eye;
    }
};

namespace detail {

/// Rows of a delimited file after the header, with the resolved delimiter.
struct DelimitedRows {
    char delimiter = ';';
    std::vector<std::pair<std::size_t, std::vector<std::string_view>>> rows;  // (1-based line, fields)
    std::vector<std::string> storage;
};

inline DelimitedRows read_delimited(const fs::path& path, const ColumnSchema& schema) {
    DelimitedRows out;
    out.storage = text::read_lines(path);
    std::size_t first_data = static_cast<std::size_t>(schema.header_rows);
    char delim = schema.delimiter;
    if (delim == 0) {
        for (std::size_t i = std::min(first_data, out.storage.size()); i < out.storage.size(); ++i)
            if (const auto& l = out.storage[i]; !text::trim(l).empty()) {
                delim = text::detect_delimiter(l);
                break;
            }
        if (delim == 0) delim = ';';
    }
    out.delimiter = delim;
    const int need = schema.max_column();
    bool first_row_checked = false;
    for (std::size_t i = first_data; i < out.storage.size(); ++i) {
        const auto& line = out.storage[i];
        if (text::trim(line).empty()) continue;
        auto fields = text::split(line, delim);
        if (!first_row_checked) {
            if (static_cast<int>(fields.size()) <= need)
                throw ParseError(path, i + 1,
                                 "schema references column " + std::to_string(need) + " but the row has only " +
                                     std::to_string(fields.size()) + " fields");
            first_row_checked = true;
        }
        out.rows.emplace_back(i + 1, std::move(fields));
    }
    return out;
}

template <typename Sample>
void stable_sort_by_time(std::vector<Sample>& v, FileReport& rep) {
    std::size_t inversions = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i].t < v[i - 1].t) ++inversions;
    if (inversions) {
        rep.reordered = inversions;
        rep.warnings.push_back("non-monotonic timestamps (" + std::to_string(inversions) + " inversions); stable-sorted");
        std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
    }
}

inline std::optional<double> field_double(const std::vector<std::string_view>& f, int idx) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= f.size()) return std::nullopt;
    return text::parse_double(f[static_cast<std::size_t>(idx)]);
}

/// Engine Euler columns (x = pitch, y = yaw, z = roll), any range, to a quaternion.
inline QuatRot engine_euler_to_quat(double rx, double ry, double rz) {
    return euler_yxz_to_quaternion({wrap_degrees(ry), wrap_degrees(rx), wrap_degrees(rz)});
}

/// Quaternion to engine Euler columns wrapped to [0, 360).
inline std::array<double, 3> quat_to_engine_euler(const QuatRot& q) {
    const auto e = quaternion_to_euler_yxz(q);
    auto unwrap = [](double d) {
        double w = std::fmod(d, 360.0);
        if (w < 0.0) w += 360.0;
        if (w >= 360.0) w -= 360.0;
        return w == 0.0 ? 0.0 : w;
    };
    return {unwrap(e.pitch_x), unwrap(e.yaw_y), unwrap(e.roll_z)};
}

inline std::optional<PoseSample> parse_pose(const std::vector<std::string_view>& f, const ColumnSchema& s,
                                            const std::string& part, double t, BodyPart bp) {
    auto get = [&](const std::string& k) { return field_double(f, s.column(part + "." + k)); };
    const auto px = get("pos.x"), py = get("pos.y"), pz = get("pos.z");
    const auto rx = get("rot.x"), ry = get("rot.y"), rz = get("rot.z");
    if (!px || !py || !pz || !rx || !ry || !rz) return std::nullopt;
    PoseSample p{t, {*px, *py, *pz}, {}, bp};
    if (!p.pos.finite() || !std::isfinite(*rx) || !std::isfinite(*ry) || !std::isfinite(*rz)) return std::nullopt;
    p.rot = engine_euler_to_quat(*rx, *ry, *rz);
    return p;
}

}  // namespace detail

inline EventLog read_events(const fs::path& path, const ColumnSchema& schema, FileReport& rep) {
    rep.file = path.string();
    const auto rows = detail::read_delimited(path, schema);
    const int ct = schema.column("timestamp"), ci = schema.column("initiator"), ca = schema.column("action"),
              cr = schema.column("recipient");
    const auto cinfo = schema.optional_column("info");
    EventLog out;
    for (const auto& [lineno, f] : rows.rows) {
        ++rep.rows_read;
        const auto t = detail::field_double(f, ct);
        const auto who = static_cast<std::size_t>(ci) < f.size() ? parse_initiator(text::trim(f[ci])) : std::nullopt;
        if (!t || !std::isfinite(*t) || !who || static_cast<std::size_t>(ca) >= f.size() ||
            static_cast<std::size_t>(cr) >= f.size()) {
            ++rep.rows_dropped;
            rep.warnings.push_back("line " + std::to_string(lineno) + ": unparsable event row dropped");
            continue;
        }
        Event e;
        e.t = *t;
        e.initiator = *who;
        const auto token = text::trim(f[ca]);
        if (auto a = parse_action(token)) {
            e.action = *a;
        } else {
            e.action = Action::other;
            e.other_action = std::string(token);
            ++rep.unknown_actions[e.other_action];
        }
        e.recipient = std::string(text::trim(f[cr]));
        if (cinfo && static_cast<std::size_t>(*cinfo) < f.size()) {
            // Trailing extra fields belong to the info text.
            std::vector<std::string_view> rest(f.begin() + *cinfo, f.end());
            e.info = std::string(text::trim(text::join(rest, rows.delimiter)));
        }
        out.push_back(std::move(e));
        ++rep.rows_parsed;
    }
    detail::stable_sort_by_time(out, rep);
    return out;
}

/// Position_Data: head and body poses sharing one timestamp column.
inline std::pair<PoseStream, PoseStream> read_position(const fs::path& path, const ColumnSchema& schema, FileReport& rep) {
    rep.file = path.string();
    const auto rows = detail::read_delimited(path, schema);
    const int ct = schema.column("timestamp");
    PoseStream head, body;
    for (const auto& [lineno, f] : rows.rows) {
        ++rep.rows_read;
        const auto t = detail::field_double(f, ct);
        std::optional<PoseSample> h, b;
        if (t && std::isfinite(*t)) {
            h = detail::parse_pose(f, schema, "head", *t, BodyPart::head);
            b = detail::parse_pose(f, schema, "body", *t, BodyPart::body);
        }
        if (!h || !b) {
            ++rep.rows_dropped;
            rep.warnings.push_back("line " + std::to_string(lineno) + ": unparsable pose row dropped");
            continue;
        }
        head.push_back(*h);
        body.push_back(*b);
        ++rep.rows_parsed;
    }
    detail::stable_sort_by_time(head, rep);
    FileReport scratch;
    detail::stable_sort_by_time(body, scratch);
    return {std::move(head), std::move(body)};
}

inline PoseStream read_hand(const fs::path& path, const ColumnSchema& schema, FileReport& rep) {
    rep.file = path.string();
    const auto rows = detail::read_delimited(path, schema);
    const int ct = schema.column("timestamp");
    PoseStream hand;
    for (const auto& [lineno, f] : rows.rows) {
        ++rep.rows_read;
        const auto t = detail::field_double(f, ct);
        std::optional<PoseSample> h;
        if (t && std::isfinite(*t)) h = detail::parse_pose(f, schema, "hand", *t, BodyPart::hand);
        if (!h) {
            ++rep.rows_dropped;
            rep.warnings.push_back("line " + std::to_string(lineno) + ": unparsable hand row dropped");
            continue;
        }
        hand.push_back(*h);
        ++rep.rows_parsed;
    }
    detail::stable_sort_by_time(hand, rep);
    return hand;
}

inline GazeStream read_eye(const fs::path& path, const ColumnSchema& schema, FileReport& rep) {
    rep.file = path.string();
    const auto rows = detail::read_delimited(path, schema);
    GazeStream eye;
    const int ct = schema.column("timestamp"), cv = schema.column("valid");
    for (const auto& [lineno, f] : rows.rows) {
        ++rep.rows_read;
        GazeSample g;
        const auto t = detail::field_double(f, ct);
        bool valid = false;
        const bool valid_ok = static_cast<std::size_t>(cv) < f.size() && text::parse_bool(f[cv], valid);
        auto get = [&](const char* k) { return detail::field_double(f, schema.column(k)); };
        const auto ox = get("origin.x"), oy = get("origin.y"), oz = get("origin.z");
        const auto dx = get("direction.x"), dy = get("direction.y"), dz = get("direction.z");
        if (!t || !std::isfinite(*t) || !valid_ok || !ox || !oy || !oz || !dx || !dy || !dz) {
            ++rep.rows_dropped;
            rep.warnings.push_back("line " + std::to_string(lineno) + ": unparsable eye row dropped");
            continue;
        }
        g.t = *t;
        g.valid = valid;
        g.origin = {*ox, *oy, *oz};
        g.direction = {*dx, *dy, *dz};
        if (g.valid) {
            const double n = g.direction.norm();
            if (!g.origin.finite() || !(n > 0.0) || !std::isfinite(n)) {
                g.valid = false;
            } else if (std::abs(n - 1.0) > 1e-6) {
                g.direction = (1.0 / n) * g.direction;
            }
        }
        eye.push_back(g);
        ++rep.rows_parsed;
    }
    detail::stable_sort_by_time(eye, rep);
    return eye;
}

/// Loads the four raw streams of one run. Only subject and run order of the
/// returned context are filled in; use the summary overload for the full context.
inline RunRecord load_run(const fs::path& raw_dir, int subject_id, const RunOrder& run_order,
                          const SchemaSet& schema = default_schemas()) {
    schema.validate();
    const auto dir = run_directory(raw_dir, subject_id, run_order);
    RunRecord r;
    r.ctx.subject_id = subject_id;
    r.ctx.run_order = run_order;
    for (const char* name : {"Events.txt", "Position_Data.txt", "Hand_Data.txt", "RawEye_Data.txt"})
        if (!fs::exists(dir / name)) throw IoError("run " + r.ctx.run_id() + ": missing " + (dir / name).string());
    FileReport fe, fp, fh, fy;
    r.events = read_events(dir / "Events.txt", schema.events, fe);
    std::tie(r.head, r.body) = read_position(dir / "Position_Data.txt", schema.position, fp);
    r.hand = read_hand(dir / "Hand_Data.txt", schema.hand, fh);
    r.eye = read_eye(dir / "RawEye_Data.txt", schema.eye, fy);
    r.report.files = {std::move(fe), std::move(fp), std::move(fh), std::move(fy)};
    return r;
}

inline RunRecord load_run(const fs::path& raw_dir, const RunContext& ctx, const SchemaSet& schema = default_schemas()) {
    auto r = load_run(raw_dir, ctx.subject_id, ctx.run_order, schema);
    r.ctx = ctx;
    return r;
}

// ---------------------------------------------------------------------------
// Writers

inline std::string format_events(const EventLog& events, char delim = ';') {
    std::string out = default_schemas().events.header_line(delim) + "\n";
    for (const auto& e : events) {
        out += text::format_double(e.t);
        out += delim;
        out += to_string(e.initiator);
        out += delim;
        out += e.action_text();
        out += delim;
        out += e.recipient;
        out += delim;
        out += e.info;
        out += '\n';
    }
    return out;
}

/// Raw Position_Data text; head and body must share timestamps.
inline std::string format_raw_position(const PoseStream& head, const PoseStream& body, char delim = ';') {
    if (head.size() != body.size()) throw DomainError("head and body streams differ in length");
    std::string out = default_schemas().position.header_line(delim) + "\n";
    auto pose_fields = [&](const PoseSample& p) {
        const auto e = detail::quat_to_engine_euler(p.rot);
        std::string s;
        for (double v : {p.pos.x, p.pos.y, p.pos.z, e[0], e[1], e[2]}) {
            s += delim;
            s += text::format_double(v);
        }
        return s;
    };
    for (std::size_t i = 0; i < head.size(); ++i) {
        if (head[i].t != body[i].t) throw DomainError("head and body timestamps differ");
        out += text::format_double(head[i].t) + pose_fields(head[i]) + pose_fields(body[i]) + "\n";
    }
    return out;
}

inline std::string format_raw_hand(const PoseStream& hand, char delim = ';') {
    std::string out = default_schemas().hand.header_line(delim) + "\n";
    for (const auto& p : hand) {
        const auto e = detail::quat_to_engine_euler(p.rot);
        out += text::format_double(p.t);
        for (double v : {p.pos.x, p.pos.y, p.pos.z, e[0], e[1], e[2]}) {
            out += delim;
            out += text::format_double(v);
        }
        out += '\n';
    }
    return out;
}

inline std::string format_eye(const GazeStream& eye, char delim = ';') {
    std::string out = default_schemas().eye.header_line(delim) + "\n";
    for (const auto& g : eye) {
        out += text::format_double(g.t);
        out += delim;
        out += g.valid ? "1" : "0";
        for (double v : {g.origin.x, g.origin.y, g.origin.z, g.direction.x, g.direction.y, g.direction.z}) {
            out += delim;
            out += text::format_double(v);
        }
        out += '\n';
    }
    return out;
}

inline void write_raw_run(const fs::path& raw_dir, const RunRecord& run) {
    const auto dir = run_directory(raw_dir, run.ctx.subject_id, run.ctx.run_order);
    text::write_file(dir / "Events.txt", format_events(run.events));
    text::write_file(dir / "Position_Data.txt", format_raw_position(run.head, run.body));
    text::write_file(dir / "Hand_Data.txt", format_raw_hand(run.hand));
    text::write_file(dir / "RawEye_Data.txt", format_eye(run.eye));
}

// Processed layout --------------------------------------------------------

struct ProcessedPaths {
    fs::path events;
    fs::path eye;
    fs::path position;
};

/// Long format: Timestamp;Part;pos.x;pos.y;pos.z;rot.w;rot.x;rot.y;rot.z (quaternions).
inline std::string format_interpolated_position(const RunRecord& run, char delim = ';') {
    std::string out = "timestamp;part;pos.x;pos.y;pos.z;rot.w;rot.x;rot.y;rot.z\n";
    if (delim != ';') std::replace(out.begin(), out.end(), ';', delim);
    for (const PoseStream* s : {&run.head, &run.body, &run.hand}) {
        for (const auto& p : *s) {
            out += text::format_double(p.t);
            out += delim;
            out += to_string(p.body_part);
            for (double v : {p.pos.x, p.pos.y, p.pos.z, p.rot.w, p.rot.x, p.rot.y, p.rot.z}) {
                out += delim;
                out += text::format_double(v);
            }
            out += '\n';
        }
    }
    return out;
}

inline ProcessedPaths write_processed(const RunRecord& run, const fs::path& processed_dir) {
    const auto dir = run_directory(processed_dir, run.ctx.subject_id, run.ctx.run_order);
    ProcessedPaths p{dir / "CorrectedEvents.txt", dir / "CorrectedEye_Data.txt", dir / "InterpolatedPosition_Data.txt"};
    text::write_file(p.events, format_events(run.events));
    text::write_file(p.eye, format_eye(run.eye));
    text::write_file(p.position, format_interpolated_position(run));
    return p;
}

/// Reads back a processed run directory. Streams are compared value-for-value
/// with what write_processed was given.
inline RunRecord read_processed(const fs::path& processed_dir, int subject_id, const RunOrder& order) {
    const auto dir = run_directory(processed_dir, subject_id, order);
    RunRecord r;
    r.ctx.subject_id = subject_id;
    r.ctx.run_order = order;
    const auto s = default_schemas();
    FileReport fe, fy, fp;
    r.events = read_events(dir / "CorrectedEvents.txt", s.events, fe);
    r.eye = read_eye(dir / "CorrectedEye_Data.txt", s.eye, fy);
    fp.file = (dir / "InterpolatedPosition_Data.txt").string();
    const auto lines = text::read_lines(dir / "InterpolatedPosition_Data.txt");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (text::trim(lines[i]).empty()) continue;
        ++fp.rows_read;
        const auto f = text::split(lines[i], text::detect_delimiter(lines[i]));
        std::optional<BodyPart> part = f.size() == 9 ? parse_body_part(text::trim(f[1])) : std::nullopt;
        std::array<double, 8> v{};
        bool ok = part.has_value();
        for (std::size_t k = 0; ok && k < 8; ++k) {
            const auto d = text::parse_double(f[k == 0 ? 0 : k + 1]);
            ok = d.has_value();
            if (ok) v[k] = *d;
        }
        if (!ok) throw ParseError(fp.file, i + 1, "malformed interpolated pose row");
        PoseSample p{v[0], {v[1], v[2], v[3]}, {v[4], v[5], v[6], v[7]}, *part};
        (*part == BodyPart::head ? r.head : *part == BodyPart::body ? r.body : r.hand).push_back(p);
        ++fp.rows_parsed;
    }
    r.report.files = {std::move(fe), std::move(fy), std::move(fp)};
    return r;
}

// ---------------------------------------------------------------------------
// Course metadata

namespace detail {

inline std::vector<std::vector<double>> read_number_rows(const fs::path& path) {
    const auto lines = text::read_lines(path);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto fields = text::split_loose(lines[i]);
        if (fields.empty() || fields.front().starts_with('#')) continue;
        std::vector<double> row;
        bool numeric = true;
        for (auto f : fields) {
            auto v = text::parse_double(f);
            if (!v) {
                numeric = false;
                break;
            }
            row.push_back(*v);
        }
        if (!numeric) {
            if (rows.empty()) continue;  // header line
            throw ParseError(path, i + 1, "non-numeric value");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

enum class CourseColumn { name, cx, cy, cz, sx, sy, sz, grey, vertical, horizontal, clearance };

inline std::optional<CourseColumn> match_course_header(std::string_view raw) {
    const auto k = text::squash(raw);
    using C = CourseColumn;
    static const std::vector<std::pair<C, std::vector<std::string>>> synonyms{
        {C::name, {"name", "objname", "object", "objectname", "label"}},
        {C::cx, {"x", "centroidx", "centerx", "centrex", "positionx", "posx"}},
        {C::cy, {"y", "centroidy", "centery", "centrey", "positiony", "posy"}},
        {C::cz, {"z", "centroidz", "centerz", "centrez", "positionz", "posz"}},
        {C::sx, {"scalex", "sizex", "sx"}},
        {C::sy, {"scaley", "sizey", "sy"}},
        {C::sz, {"scalez", "sizez", "sz"}},
        {C::grey, {"grey", "gray", "greylevel", "graylevel", "greyvalue", "grayvalue"}},
        {C::vertical, {"vertical", "verticalposition", "verticalpos"}},
        {C::horizontal, {"horizontal", "horizontalposition", "horizontalpos"}},
        {C::clearance, {"groundclearance", "grounddistance", "distancetoground", "bottomtoground", "clearance", "distance"}},
    };
    for (const auto& [col, names] : synonyms)
        if (std::find(names.begin(), names.end(), k) != names.end()) return col;
    return std::nullopt;
}

}  // namespace detail

inline std::string format_course_csv(const CourseGeometry& g) {
    std::string out = "name,centroid_x,centroid_y,centroid_z,scale_x,scale_y,scale_z,grey,vertical,horizontal,ground_distance\n";
    for (const auto& o : g.objects) {
        out += o.label;
        for (double v : {o.centroid.x, o.centroid.y, o.centroid.z, o.scale.x, o.scale.y, o.scale.z}) {
            out += ',';
            out += text::format_double(v);
        }
        out += "," + std::to_string(o.grey) + "," + std::string(to_string(o.vertical)) + "," +
               std::string(to_string(o.horizontal)) + "," + text::format_double(o.ground_clearance) + "\n";
    }
    return out;
}

inline void write_course_meta(const fs::path& meta_dir, const CourseGeometry& g) {
    text::write_file(course_meta_file(meta_dir, g.course_id), format_course_csv(g));
    std::string mp = "x z\n";
    for (const auto& p : g.middle_points) mp += text::format_double(p.x) + " " + text::format_double(p.z) + "\n";
    text::write_file(middle_points_file(meta_dir, g.course_id), mp);
    std::string ep = "x1 z1 x2 z2\n";
    for (const auto& [a, b] : g.boundary_endpoints)
        ep += text::format_double(a.x) + " " + text::format_double(a.z) + " " + text::format_double(b.x) + " " +
              text::format_double(b.z) + "\n";
    text::write_file(endpoints_file(meta_dir, g.course_id), ep);
}

/// Radius of the start and end discs placed on the first and last middle point.
inline constexpr double kZoneRadius = 1.0;

inline CourseGeometry load_course_meta(const fs::path& meta_dir, Course course) {
    CourseGeometry g;
    g.course_id = course;

    const auto mp_path = middle_points_file(meta_dir, course);
    for (const auto& row : detail::read_number_rows(mp_path)) {
        if (row.size() != 2) throw ParseError(mp_path, 0, "middle point rows must hold 'x z'");
        g.middle_points.push_back({row[0], row[1]});
    }
    if (g.middle_points.empty()) throw ParseError(mp_path, 0, "no middle points");
    for (std::size_t i = 1; i < g.middle_points.size(); ++i)
        if (g.middle_points[i] == g.middle_points[i - 1])
            throw ParseError(mp_path, 0, "consecutive middle points " + std::to_string(i) + " and " + std::to_string(i + 1) + " coincide");

    const auto ep_path = endpoints_file(meta_dir, course);
    std::vector<Point2> loose;
    for (const auto& row : detail::read_number_rows(ep_path)) {
        if (row.size() == 4) {
            g.boundary_endpoints.push_back({{row[0], row[1]}, {row[2], row[3]}});
        } else if (row.size() == 2) {
            loose.push_back({row[0], row[1]});
        } else {
            throw ParseError(ep_path, 0, "endpoint rows must hold 'x1 z1 x2 z2' or 'x z'");
        }
    }
    if (!loose.empty()) {
        if (!g.boundary_endpoints.empty() || loose.size() % 2 != 0)
            throw ParseError(ep_path, 0, "endpoints must come in pairs");
        for (std::size_t i = 0; i < loose.size(); i += 2) g.boundary_endpoints.push_back({loose[i], loose[i + 1]});
    }

    const auto csv = course_meta_file(meta_dir, course);
    const auto lines = text::read_lines(csv);
    std::size_t first = 0;
    while (first < lines.size() && text::trim(lines[first]).empty()) ++first;
    if (first == lines.size()) throw ParseError(csv, 1, "empty course file");
    const char delim = text::detect_delimiter(lines[first]);

    using C = detail::CourseColumn;
    std::map<C, std::size_t> col;
    {
        const auto head = text::split(lines[first], delim);
        for (std::size_t i = 0; i < head.size(); ++i)
            if (auto c = detail::match_course_header(head[i])) col.emplace(*c, i);
        if (col.contains(C::name) && col.contains(C::grey)) {
            ++first;
        } else {
            col.clear();
            for (int i = 0; i <= static_cast<int>(C::clearance); ++i) col[static_cast<C>(i)] = static_cast<std::size_t>(i);
            if (!text::parse_double(head.size() > 1 ? head[1] : std::string_view{})) ++first;  // unrecognized header
        }
    }
    for (C required : {C::name, C::cx, C::cy, C::cz, C::grey, C::vertical, C::horizontal})
        if (!col.contains(required)) throw ParseError(csv, first, "course file lacks a required column");

    for (std::size_t i = first; i < lines.size(); ++i) {
        if (text::trim(lines[i]).empty()) continue;
        const auto f = text::split(lines[i], delim);
        auto cell = [&](C c) -> std::string_view {
            const auto it = col.find(c);
            if (it == col.end()) return {};
            if (it->second >= f.size()) throw ParseError(csv, i + 1, "missing column");
            return text::trim(f[it->second]);
        };
        auto num = [&](C c, double fallback) {
            if (!col.contains(c)) return fallback;
            auto v = text::parse_double(cell(c));
            if (!v) throw ParseError(csv, i + 1, "non-numeric field '" + std::string(cell(c)) + "'");
            return *v;
        };
        ObjectSpec o;
        o.label = std::string(cell(C::name));
        try {
            o.shape = parse_object_label(o.label).first;
        } catch (const DomainError& e) {
            throw ParseError(csv, i + 1, e.what());
        }
        if (o.label.front() != course_letter(course))
            throw ParseError(csv, i + 1, "object '" + o.label + "' does not belong to course " + course_letter(course));
        o.centroid = {num(C::cx, 0), num(C::cy, 0), num(C::cz, 0)};
        o.scale = {num(C::sx, 1), num(C::sy, 1), num(C::sz, 1)};
        o.ground_clearance = num(C::clearance, 0);
        const double grey = num(C::grey, 0);
        if (std::find(kObjectGreyLevels.begin(), kObjectGreyLevels.end(), static_cast<int>(grey)) == kObjectGreyLevels.end() ||
            grey != std::floor(grey))
            throw ParseError(csv, i + 1, "grey level " + std::string(cell(C::grey)) + " not one of 83, 111, 134");
        o.grey = static_cast<int>(grey);
        const auto v = parse_vertical(cell(C::vertical));
        const auto h = parse_horizontal(cell(C::horizontal));
        if (!v) throw ParseError(csv, i + 1, "vertical position '" + std::string(cell(C::vertical)) + "' not low/medium/high");
        if (!h) throw ParseError(csv, i + 1, "horizontal position '" + std::string(cell(C::horizontal)) + "' not recognized");
        o.vertical = *v;
        o.horizontal = *h;
        if (is_evaluation_course(course)) {
            const auto* ref = find_object_features(o.label);
            if (!ref) throw ParseError(csv, i + 1, "object '" + o.label + "' is not part of the reference object table");
            if (ref->grey != o.grey || ref->vertical != o.vertical || ref->horizontal != o.horizontal)
                throw ParseError(csv, i + 1, "features of '" + o.label + "' disagree with the reference object table");
        }
        if (g.find_object(o.label)) throw ParseError(csv, i + 1, "duplicate object '" + o.label + "'");
        g.objects.push_back(std::move(o));
    }
    if (is_evaluation_course(course) && g.objects.size() != static_cast<std::size_t>(kObjectsPerCourse))
        throw ParseError(csv, 0, "expected 9 objects, found " + std::to_string(g.objects.size()));

    g.start_zone = {g.middle_points.front(), kZoneRadius};
    g.end_zone = {g.middle_points.back(), kZoneRadius};
    return g;
}

// ---------------------------------------------------------------------------
// Run summary

inline std::string format_results_summary(const std::vector<RunContext>& runs) {
    std::string out = "subject_id,run_order,course,light_level,notes\n";
    for (const auto& r : runs) {
        std::string notes = r.experimenter_notes;
        std::replace(notes.begin(), notes.end(), ',', ' ');
        out += std::to_string(r.subject_id) + "," + r.run_order.label() + "," + course_letter(r.course_id) + "," +
               std::to_string(r.light_level.value()) + "," + notes + "\n";
    }
    return out;
}

/// Reads the delimited-text export of the run summary. Columns are located by
/// header name (subject, run order, course/labyrinth, light level, notes).
inline std::vector<RunContext> load_results_summary(const fs::path& meta_dir) {
    fs::path path = summary_file(meta_dir);
    if (!fs::exists(path) && fs::exists(meta_dir / "Result_H.txt")) path = meta_dir / "Result_H.txt";
    const auto lines = text::read_lines(path);
    std::size_t first = 0;
    while (first < lines.size() && text::trim(lines[first]).empty()) ++first;
    if (first == lines.size()) return {};
    const char delim = text::detect_delimiter(lines[first]);
    const auto head = text::split(lines[first], delim);
    std::optional<std::size_t> cs, cr, cc, cl, cn;
    for (std::size_t i = 0; i < head.size(); ++i) {
        const auto k = text::squash(head[i]);
        if (k == "subject" || k == "subjectid" || k == "participant" || k == "participantid" || k == "id") cs = i;
        else if (k == "run" || k == "runorder" || k == "order") cr = i;
        else if (k == "course" || k == "labyrinth" || k == "laby" || k == "courseid") cc = i;
        else if (k == "light" || k == "lightlevel" || k == "lighting" || k == "lightinglevel" || k == "level") cl = i;
        else if (k == "notes" || k == "note" || k == "experimenternotes" || k == "comment" || k == "comments") cn = i;
    }
    if (!cs || !cr || !cc || !cl) throw ParseError(path, first + 1, "summary header must name subject, run order, course and light level");

    std::vector<RunContext> out;
    std::set<std::pair<int, std::string>> seen;
    for (std::size_t i = first + 1; i < lines.size(); ++i) {
        if (text::trim(lines[i]).empty()) continue;
        const auto f = text::split(lines[i], delim);
        auto cell = [&](std::optional<std::size_t> c) -> std::string_view {
            return c && *c < f.size() ? text::trim(f[*c]) : std::string_view{};
        };
        RunContext ctx;
        try {
            const auto s = text::parse_int(cell(cs));
            const auto l = text::parse_int(cell(cl));
            if (!s || !l) throw DomainError("subject and light level must be integers");
            ctx.subject_id = static_cast<int>(*s);
            ctx.run_order = parse_run_order(cell(cr));
            ctx.course_id = parse_course(cell(cc));
            ctx.light_level = LightLevel(static_cast<int>(*l));
        } catch (const DomainError& e) {
            throw ParseError(path, i + 1, e.what());
        }
        if (ctx.run_order.training == is_evaluation_course(ctx.course_id))
            throw ParseError(path, i + 1, "evaluation runs use courses A-F and training runs G/H");
        if (cn) {
            std::vector<std::string_view> rest(f.begin() + static_cast<std::ptrdiff_t>(std::min(*cn, f.size())), f.end());
            ctx.experimenter_notes = std::string(text::trim(text::join(rest, delim)));
        }
        if (!seen.insert({ctx.subject_id, ctx.run_order.label()}).second)
            throw ParseError(path, i + 1, "duplicate run " + ctx.run_id());
        out.push_back(std::move(ctx));
    }
    return out;
}

/// Evaluation runs left after removing runs the issue table marks as excluded.
inline std::vector<RunContext> included_evaluation_runs(const std::vector<RunContext>& runs, const IssueTable& issues) {
    std::vector<RunContext> out;
    for (const auto& r : runs)
        if (!r.run_order.training && issues.exclusion_reason(r.subject_id, r.run_order).empty()) out.push_back(r);
    return out;
}

// ---------------------------------------------------------------------------
// Issue files: subject_id,run_order,issue_kind,cascade

inline std::string format_issue_table(const IssueTable& t) {
    std::string out = "subject_id,run_order,issue_kind,cascade\n";
    for (const auto& i : t.entries())
        out += std::to_string(i.subject_id) + "," + i.run_order.label() + "," + std::string(to_string(i.kind)) + "," +
               (i.cascade ? "1" : "0") + "\n";
    return out;
}

inline IssueTable load_issue_table(const fs::path& path) {
    const auto lines = text::read_lines(path);
    std::vector<Issue> v;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto t = text::trim(lines[i]);
        if (t.empty() || t.starts_with('#') || (i == 0 && t.starts_with("subject"))) continue;
        const auto f = text::split(t, text::detect_delimiter(t));
        if (f.size() < 3) throw ParseError(path, i + 1, "expected subject_id,run_order,issue_kind[,cascade]");
        Issue is;
        try {
            const auto s = text::parse_int(f[0]);
            if (!s) throw DomainError("subject id must be an integer");
            is.subject_id = static_cast<int>(*s);
            is.run_order = parse_run_order(f[1]);
        } catch (const DomainError& e) {
            throw ParseError(path, i + 1, e.what());
        }
        const auto k = parse_issue_kind(text::trim(f[2]));
        if (!k) throw ParseError(path, i + 1, "unknown issue kind '" + std::string(f[2]) + "'");
        is.kind = *k;
        if (f.size() > 3 && !text::parse_bool(f[3], is.cascade)) throw ParseError(path, i + 1, "cascade must be 0/1");
        v.push_back(is);
    }
    return IssueTable(std::move(v));
}

}  // namespace vrsom::io
