#pragma once

// End-to-end batch run over a dataset root: ingest, corrections, resampling,
// metrics, missed-object behaviour and group statistics, written as tables.

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vrsom/behavior.hpp"
#include "vrsom/core_model.hpp"
#include "vrsom/dataset_io.hpp"
#include "vrsom/error.hpp"
#include "vrsom/metrics.hpp"
#include "vrsom/parallel.hpp"
#include "vrsom/preprocess.hpp"
#include "vrsom/reference_tables.hpp"
#include "vrsom/stats.hpp"
#include "vrsom/text.hpp"

namespace vrsom::pipeline {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Tables

struct Cell {
    std::string text;  ///< empty = missing value
    bool numeric = false;

    friend bool operator==(const Cell&, const Cell&) = default;
};

inline Cell num(double v) { return {text::format_double(v), true}; }
inline Cell num(long long v) { return {std::to_string(v), true}; }
inline Cell num(int v) { return {std::to_string(v), true}; }
inline Cell num(std::size_t v) { return {std::to_string(v), true}; }
inline Cell str(std::string s) { return {std::move(s), false}; }
inline Cell na() { return {"", true}; }

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row) {
        if (row.size() != columns.size()) throw DomainError("table " + name + ": row width does not match the header");
        rows.push_back(std::move(row));
    }
};

enum class Format { csv, json };

inline std::optional<Format> parse_format(std::string_view s) noexcept {
    const auto t = text::lower(text::trim(s));
    if (t == "csv") return Format::csv;
    if (t == "json") return Format::json;
    return std::nullopt;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string to_csv(const Table& t) {
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + csv_escape(t.columns[i]);
    out += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_escape(row[i].text);
        out += '\n';
    }
    return out;
}

/// Array of objects; numeric cells become JSON numbers, missing values null.
inline nlohmann::ordered_json to_json(const Table& t) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
        nlohmann::ordered_json obj = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < row.size(); ++i) {
            const auto& c = row[i];
            if (c.numeric && c.text.empty()) obj[t.columns[i]] = nullptr;
            else if (c.numeric && c.text.find_first_of(".eE") == std::string::npos && c.text != "inf" && c.text != "nan") {
                const auto v = text::parse_int(c.text);
                obj[t.columns[i]] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(c.text);
            } else if (c.numeric) {
                const auto v = text::parse_double(c.text);
                obj[t.columns[i]] = v && std::isfinite(*v) ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(c.text);
            } else {
                obj[t.columns[i]] = c.text;
            }
        }
        arr.push_back(std::move(obj));
    }
    return arr;
}

inline fs::path write_table(const fs::path& dir, const Table& t, Format f) {
    const auto path = dir / (t.name + (f == Format::csv ? ".csv" : ".json"));
    text::write_file(path, f == Format::csv ? to_csv(t) : to_json(t).dump(1) + "\n");
    return path;
}

// ---------------------------------------------------------------------------
// Run stage

enum class Stage { ingest, preprocess, metrics, behavior };

struct Options {
    fs::path dataset_root;
    fs::path out_dir = "vrsom_out";
    io::SchemaSet schema = io::default_schemas();
    std::optional<fs::path> issues_file;  ///< default: meta_data/issues.csv if present, else the published table
    std::vector<int> subjects;            ///< empty = all
    unsigned jobs = 1;
    preprocess::ResampleSpec resample;
    behavior::FovModel fov;
    stats::Adjustment adjustment = stats::Adjustment::holm;
    Format format = Format::csv;
    bool write_processed = true;
    bool include_training = false;  ///< training runs in the run-order statistics
};

struct RunResult {
    RunContext ctx;
    bool failed = false;
    std::string error;
    std::string excluded_reason;
    bool eye_usable = true;
    std::optional<metrics::RunMetrics> metrics;
    preprocess::SyncReport sync;
    std::vector<behavior::MissedObjectRow> missed;
    std::vector<std::string> log;
    io::ParseReport report;

    bool included() const noexcept { return !failed && excluded_reason.empty() && metrics.has_value(); }
};

struct Bundle {
    std::vector<RunResult> runs;
    IssueTable issues;
    std::vector<std::string> warnings;

    std::size_t failed() const {
        return static_cast<std::size_t>(std::count_if(runs.begin(), runs.end(), [](const RunResult& r) { return r.failed; }));
    }
    int exit_code() const { return failed() ? 1 : 0; }
};

inline IssueTable resolve_issue_table(const Options& o, const io::DatasetRoot& layout, std::vector<std::string>& warnings) {
    if (o.issues_file) return io::load_issue_table(*o.issues_file);
    const auto local = layout.meta_dir / "issues.csv";
    if (fs::exists(local)) return io::load_issue_table(local);
    warnings.push_back("no meta_data/issues.csv; using the built-in issue table of the published dataset");
    return published_issue_table();
}

/// Runs every listed run through the stages up to `upto`. Per-run failures are
/// recorded and do not stop the batch. Rows keep the summary order (sorted by
/// subject and run order) regardless of `jobs`.
inline Bundle run_pipeline(const Options& o, Stage upto = Stage::behavior) {
    o.fov.validate();
    const auto layout = io::DatasetRoot::at(o.dataset_root);
    if (!fs::is_directory(o.dataset_root)) throw IoError("dataset root " + o.dataset_root.string() + " is not a directory");
    Bundle b;
    b.issues = resolve_issue_table(o, layout, b.warnings);
    auto contexts = io::load_results_summary(layout.meta_dir);
    if (!o.subjects.empty())
        std::erase_if(contexts, [&](const RunContext& c) {
            return std::find(o.subjects.begin(), o.subjects.end(), c.subject_id) == o.subjects.end();
        });
    std::stable_sort(contexts.begin(), contexts.end(), [](const RunContext& a, const RunContext& b) {
        return std::tie(a.subject_id, a.run_order) < std::tie(b.subject_id, b.run_order);
    });
    for (auto& w : preprocess::unmatched_issues(b.issues, contexts)) b.warnings.push_back(std::move(w));

    std::map<Course, CourseGeometry> courses;
    std::map<Course, std::string> course_errors;
    if (upto == Stage::behavior) {
        for (Course c : kEvaluationCourses) {
            try {
                courses.emplace(c, io::load_course_meta(layout.meta_dir, c));
            } catch (const Error& e) {
                course_errors.emplace(c, e.what());
                b.warnings.push_back(std::string("course ") + course_letter(c) + ": " + e.what());
            }
        }
    }

    const auto processed_dir = o.out_dir / "test_data_processed";
    b.runs.resize(contexts.size());
    parallel_for(contexts.size(), o.jobs, [&](std::size_t i) {
        RunResult& r = b.runs[i];
        r.ctx = contexts[i];
        try {
            auto rec = io::load_run(layout.raw_dir, contexts[i], o.schema);
            r.report = rec.report;
            for (const auto& f : rec.report.files)
                for (const auto& w : f.warnings) r.log.push_back(r.ctx.run_id() + ": " + f.file + ": " + w);
            r.excluded_reason = b.issues.exclusion_reason(r.ctx.subject_id, r.ctx.run_order);
            if (upto == Stage::ingest) return;

            auto pre = preprocess::preprocess_run(std::move(rec), b.issues, o.resample);
            r.log.insert(r.log.end(), pre.log.begin(), pre.log.end());
            r.sync = pre.sync;
            r.eye_usable = pre.run.eye_usable;
            r.excluded_reason = pre.run.excluded_reason;
            if (o.write_processed) io::write_processed(pre.run, processed_dir);
            if (upto == Stage::preprocess) return;

            r.metrics = metrics::synthesize_run_metrics(pre.run.events);
            if (upto == Stage::metrics || r.ctx.run_order.training) return;

            if (const auto e = course_errors.find(r.ctx.course_id); e != course_errors.end())
                throw DomainError("course metadata unusable: " + e->second);
            r.missed = behavior::missed_objects_for_run(pre.run, courses.at(r.ctx.course_id), o.fov);
        } catch (const Error& e) {
            r.failed = true;
            r.error = e.what();
        } catch (const std::exception& e) {
            r.failed = true;
            r.error = std::string("unexpected: ") + e.what();
        }
    });
    return b;
}

// ---------------------------------------------------------------------------
// Report tables

inline std::vector<Cell> run_key(const RunContext& c) {
    return {num(c.subject_id), str(c.run_order.label()), str(std::string(1, course_letter(c.course_id))),
            num(c.light_level.value())};
}

inline Table ingest_table(const Bundle& b) {
    Table t{"ingest", {"subject_id", "run_order", "course", "light_level", "status", "error", "rows_parsed", "rows_dropped",
                       "rows_reordered", "unknown_actions"}, {}};
    for (const auto& r : b.runs) {
        std::size_t parsed = 0, reordered = 0;
        for (const auto& f : r.report.files) {
            parsed += f.rows_parsed;
            reordered += f.reordered;
        }
        auto row = run_key(r.ctx);
        row.insert(row.end(), {str(r.failed ? "failed" : "ok"), str(r.error), num(parsed), num(r.report.total_dropped()),
                               num(reordered), num(r.report.total_unknown_actions())});
        t.add(std::move(row));
    }
    return t;
}

inline Table metrics_table(const Bundle& b, const metrics::PenaltyPolicy& policy = {}) {
    Table t{"metrics", {"subject_id", "run_order", "course", "light_level", "excluded_reason", "status", "error",
                        "time_duration_s", "time_before_first_step_s", "n_off_path", "n_missed_objects", "n_collisions",
                        "n_stops", "time_score_s", "accuracy_score"}, {}};
    for (const auto& r : b.runs) {
        auto row = run_key(r.ctx);
        row.insert(row.end(), {str(r.excluded_reason), str(r.failed ? "failed" : "ok"), str(r.error)});
        if (r.metrics) {
            const auto& m = *r.metrics;
            const auto s = metrics::score_run(m, policy);
            row.insert(row.end(), {num(m.time_duration_s), num(m.time_before_first_step_s), num(m.n_off_path),
                                   num(m.n_missed_objects), num(m.n_collisions), num(m.n_stops), num(s.time_score_s),
                                   num(s.accuracy_score)});
        } else {
            row.insert(row.end(), 8, na());
        }
        t.add(std::move(row));
    }
    return t;
}

inline Table sync_table(const Bundle& b) {
    Table t{"sync", {"subject_id", "run_order", "course", "light_level", "eye_usable", "pairs", "r_x", "p_x", "r_z", "p_z",
                     "pass_x", "pass_z"}, {}};
    for (const auto& r : b.runs) {
        if (r.failed) continue;
        auto row = run_key(r.ctx);
        const auto& s = r.sync;
        auto opt = [](const stats::PearsonResult& p, double v) { return p.defined ? num(v) : na(); };
        row.insert(row.end(), {num(static_cast<int>(r.eye_usable)), num(s.pairs), opt(s.x, s.x.r), opt(s.x, s.x.p),
                               opt(s.z, s.z.r), opt(s.z, s.z.p), num(static_cast<int>(s.pass_x)),
                               num(static_cast<int>(s.pass_z))});
        t.add(std::move(row));
    }
    return t;
}

inline std::vector<behavior::MissedObjectRow> missed_rows(const Bundle& b, bool included_only = true) {
    std::vector<behavior::MissedObjectRow> rows;
    for (const auto& r : b.runs)
        if (!included_only || r.included()) rows.insert(rows.end(), r.missed.begin(), r.missed.end());
    behavior::sort_rows(rows);
    return rows;
}

/// Long format: one row per cell of each missed-object panel.
inline Table crosstab_table(const std::vector<behavior::MissedObjectRow>& rows) {
    Table t{"missed_crosstabs", {"row_feature", "row_value", "col_feature", "col_value", "count"}, {}};
    for (const auto& ct : behavior::missed_object_panels(rows))
        for (const auto& rv : ct.row_values)
            for (const auto& cv : ct.col_values)
                t.add({str(std::string(to_string(ct.row_feature))), str(rv), str(std::string(to_string(ct.col_feature))), str(cv),
                       num(ct.count(rv, cv))});
    return t;
}

// ---------------------------------------------------------------------------
// Statistics

enum class Variable { time_duration, n_missed, time_before_first_step, n_off_path, n_collisions, n_stops };

inline constexpr std::array<Variable, 3> kTableVariables{Variable::time_duration, Variable::n_missed,
                                                         Variable::time_before_first_step};
inline constexpr std::array<stats::Factor, 3> kTableFactors{stats::Factor::light_level, stats::Factor::course,
                                                            stats::Factor::run_order};

inline std::string_view to_string(Variable v) noexcept {
    switch (v) {
        case Variable::time_duration: return "time_duration";
        case Variable::n_missed: return "n_missed";
        case Variable::time_before_first_step: return "time_before_first_step";
        case Variable::n_off_path: return "n_off_path";
        case Variable::n_collisions: return "n_collisions";
        case Variable::n_stops: return "n_stops";
    }
    return "?";
}

inline std::optional<Variable> parse_variable(std::string_view s) noexcept {
    const auto t = text::squash(s);
    for (auto v : {Variable::time_duration, Variable::n_missed, Variable::time_before_first_step, Variable::n_off_path,
                   Variable::n_collisions, Variable::n_stops})
        if (text::squash(to_string(v)) == t) return v;
    if (t == "nmissedobjects" || t == "missed") return Variable::n_missed;
    if (t == "duration" || t == "timedurations") return Variable::time_duration;
    if (t == "tbfs" || t == "timebeforefirststeps") return Variable::time_before_first_step;
    return std::nullopt;
}

inline double variable_value(const metrics::RunMetrics& m, Variable v) {
    switch (v) {
        case Variable::time_duration: return m.time_duration_s;
        case Variable::n_missed: return m.n_missed_objects;
        case Variable::time_before_first_step: return m.time_before_first_step_s;
        case Variable::n_off_path: return m.n_off_path;
        case Variable::n_collisions: return m.n_collisions;
        case Variable::n_stops: return m.n_stops;
    }
    return 0.0;
}

/// Included runs split by factor, groups in natural order. Training runs enter
/// only the run-order factor, and only when asked for.
inline stats::GroupedSample group_runs(const std::vector<RunResult>& runs, stats::Factor f, Variable v,
                                       bool include_training = false) {
    struct Key {
        int rank;
        std::string label;
    };
    std::map<int, std::pair<std::string, std::vector<double>>> groups;
    for (const auto& r : runs) {
        if (!r.included()) continue;
        if (r.ctx.run_order.training && !(include_training && f == stats::Factor::run_order)) continue;
        Key k{0, ""};
        switch (f) {
            case stats::Factor::light_level: k = {r.ctx.light_level.value(), std::to_string(r.ctx.light_level.value())}; break;
            case stats::Factor::course: k = {static_cast<int>(r.ctx.course_id), std::string(1, course_letter(r.ctx.course_id))}; break;
            case stats::Factor::run_order:
                k = {r.ctx.run_order.training ? r.ctx.run_order.index - 10 : r.ctx.run_order.index, r.ctx.run_order.label()};
                break;
        }
        auto& g = groups[k.rank];
        g.first = k.label;
        g.second.push_back(variable_value(*r.metrics, v));
    }
    stats::GroupedSample g;
    g.factor = f;
    for (auto& [rank, gv] : groups) g.groups.push_back({gv.first, std::move(gv.second)});
    return g;
}

/// Factor x variable rows with H (also under the column name F), df, p and stars.
inline Table kw_table(const Bundle& b, const std::vector<stats::Factor>& factors, const std::vector<Variable>& vars,
                      bool include_training = false) {
    Table t{"kruskal_wallis", {"factor", "variable", "n", "k", "df", "H", "F", "p_value", "stars", "note"}, {}};
    for (auto f : factors)
        for (auto v : vars) {
            const auto g = group_runs(b.runs, f, v, include_training);
            std::vector<Cell> row{str(std::string(stats::to_string(f))), str(std::string(to_string(v))), num(g.total()),
                                  num(g.non_empty())};
            try {
                const auto kw = stats::kruskal_wallis(g);
                row.insert(row.end(), {num(kw.df), num(kw.h_statistic), num(kw.h_statistic), num(kw.p_value),
                                       str(stats::significance_stars(kw.p_value)), str("")});
            } catch (const DomainError& e) {
                row.insert(row.end(), {na(), na(), na(), na(), str(""), str(e.what())});
            }
            t.add(std::move(row));
        }
    return t;
}

/// Long-format pairwise table of one Dunn matrix (upper triangle).
inline Table dunn_table(const stats::DunnMatrix& d, stats::Factor f, Variable v) {
    Table t{"dunn_" + std::string(stats::to_string(f)) + "_" + std::string(to_string(v)),
            {"group_a", "group_b", "z", "p_unadjusted", "p_adjusted", "adjustment", "stars"}, {}};
    for (std::size_t i = 0; i < d.labels.size(); ++i)
        for (std::size_t j = i + 1; j < d.labels.size(); ++j)
            t.add({str(d.labels[i]), str(d.labels[j]), num(d.z[i][j]), num(d.p_unadjusted[i][j]), num(d.p_adjusted[i][j]),
                   str(std::string(stats::to_string(d.adjustment))), str(stats::significance_stars(d.p_adjusted[i][j]))});
    return t;
}

/// Plot-ready long format: factor, group, variable, value per included run.
inline Table groups_long_table(const Bundle& b, const std::vector<stats::Factor>& factors, const std::vector<Variable>& vars,
                               bool include_training = false) {
    Table t{"groups_long", {"factor", "group", "variable", "value"}, {}};
    for (auto f : factors)
        for (auto v : vars)
            for (const auto& g : group_runs(b.runs, f, v, include_training).groups)
                for (double x : g.values)
                    t.add({str(std::string(stats::to_string(f))), str(g.label), str(std::string(to_string(v))), num(x)});
    return t;
}

// ---------------------------------------------------------------------------
// SSQ: meta_data/ssq.csv holds a subject column followed by the 16 item ratings.

struct SsqRecord {
    std::string subject;
    stats::SsqResponse response;
};

inline std::vector<SsqRecord> load_ssq_file(const fs::path& path) {
    const auto lines = text::read_lines(path);
    if (lines.empty()) return {};
    const char delim = text::detect_delimiter(lines.front());
    std::vector<SsqRecord> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (text::trim(lines[i]).empty()) continue;
        const auto f = text::split(lines[i], delim);
        if (f.size() != stats::kSsqItems + 1) throw ParseError(path, i + 1, "expected a subject column and 16 ratings");
        SsqRecord r;
        r.subject = std::string(text::trim(f[0]));
        for (std::size_t k = 0; k < stats::kSsqItems; ++k) {
            const auto v = text::parse_int(f[k + 1]);
            if (!v) throw ParseError(path, i + 1, "rating '" + std::string(f[k + 1]) + "' is not an integer");
            r.response.ratings[k] = static_cast<int>(*v);
        }
        out.push_back(std::move(r));
    }
    return out;
}

inline Table ssq_table(const std::vector<SsqRecord>& records) {
    Table t{"ssq", {"subject", "total", "nausea", "oculomotor", "disorientation"}, {}};
    for (const auto& r : records) {
        const auto s = stats::ssq_score(r.response);
        t.add({str(r.subject), num(s.total), num(s.per_subscale.at(stats::SsqSubscale::nausea)),
               num(s.per_subscale.at(stats::SsqSubscale::oculomotor)),
               num(s.per_subscale.at(stats::SsqSubscale::disorientation))});
    }
    return t;
}

// ---------------------------------------------------------------------------
// Sidecar log

inline std::string format_log_jsonl(const Bundle& b) {
    std::string out;
    for (const auto& w : b.warnings) out += nlohmann::ordered_json{{"level", "warning"}, {"message", w}}.dump() + "\n";
    for (const auto& r : b.runs) {
        nlohmann::ordered_json j;
        j["run"] = r.ctx.run_id();
        j["status"] = r.failed ? "failed" : "ok";
        if (r.failed) j["error"] = r.error;
        if (!r.excluded_reason.empty()) j["excluded_reason"] = r.excluded_reason;
        j["log"] = r.log;
        auto files = nlohmann::ordered_json::array();
        for (const auto& f : r.report.files) files.push_back(nlohmann::ordered_json::parse(io::to_json(f).dump()));
        j["files"] = files;
        out += j.dump() + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Report bundle

struct ReportSelection {
    std::vector<stats::Factor> factors{kTableFactors.begin(), kTableFactors.end()};
    std::vector<Variable> variables{kTableVariables.begin(), kTableVariables.end()};
};

/// Every report table for a finished pipeline run, in a fixed order.
inline std::vector<Table> report_tables(const Bundle& b, const Options& o, const ReportSelection& sel = {}) {
    std::vector<Table> out;
    out.push_back(metrics_table(b));
    out.push_back(sync_table(b));
    out.push_back(crosstab_table(missed_rows(b)));
    out.push_back(kw_table(b, sel.factors, sel.variables, o.include_training));
    out.push_back(groups_long_table(b, sel.factors, sel.variables, o.include_training));
    for (auto f : sel.factors)
        for (auto v : sel.variables) {
            const auto g = group_runs(b.runs, f, v, o.include_training);
            if (g.non_empty() < 2) continue;
            out.push_back(dunn_table(stats::dunn_posthoc(g, o.adjustment), f, v));
        }
    const auto ssq = io::DatasetRoot::at(o.dataset_root).meta_dir / "ssq.csv";
    if (fs::exists(ssq)) out.push_back(ssq_table(load_ssq_file(ssq)));
    return out;
}

/// Writes the tables, missed_obj_info.txt and the pipeline_log.jsonl sidecar.
inline std::vector<fs::path> write_report(const Bundle& b, const Options& o, const ReportSelection& sel = {}) {
    std::vector<fs::path> written;
    for (const auto& t : report_tables(b, o, sel)) written.push_back(write_table(o.out_dir, t, o.format));
    const auto missed = o.out_dir / "missed_obj_info.txt";
    text::write_file(missed, behavior::format_missed_obj_info(missed_rows(b)));
    written.push_back(missed);
    const auto log = o.out_dir / "pipeline_log.jsonl";
    text::write_file(log, format_log_jsonl(b));
    written.push_back(log);
    return written;
}

}  // namespace vrsom::pipeline
