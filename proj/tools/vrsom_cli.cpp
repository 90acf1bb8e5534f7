// vrsom: batch pipeline over a recorded or synthetic dataset root.
//
// Exit codes: 0 success, 1 data errors (some run failed, unreadable input),
// 2 usage errors.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vrsom/vrsom.hpp"

namespace {

using namespace vrsom;
namespace fs = std::filesystem;

struct Shared {
    std::string dataset_root;
    std::string schema;
    std::string out;
    std::string format = "csv";
    unsigned jobs = 1;
    std::uint64_t seed = 0;
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void add_shared(CLI::App* cmd, Shared& s) {
    cmd->add_option("--dataset-root", s.dataset_root, "dataset root holding meta_data/ and test_data/")
        ->envname("VRSOM_DATASET_ROOT");
    cmd->add_option("--schema", s.schema, "JSON column-schema overrides");
    cmd->add_option("--out", s.out, "output directory (default vrsom_out, vrsom_sim for simulate, stdout for photometry)");
    cmd->add_option("--format", s.format, "table format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    cmd->add_option("--jobs", s.jobs, "worker threads (0 = all cores)")->capture_default_str();
    cmd->add_option("--seed", s.seed, "random seed")->capture_default_str();
}

pipeline::Options make_options(const Shared& s) {
    if (s.dataset_root.empty()) throw UsageError("--dataset-root (or VRSOM_DATASET_ROOT) is required");
    pipeline::Options o;
    o.dataset_root = s.dataset_root;
    o.out_dir = s.out;
    o.jobs = s.jobs;
    o.format = *pipeline::parse_format(s.format);
    if (!s.schema.empty()) o.schema = io::load_schemas(s.schema);
    return o;
}

void write_log(const pipeline::Bundle& b, const pipeline::Options& o) {
    text::write_file(o.out_dir / "pipeline_log.jsonl", pipeline::format_log_jsonl(b));
}

int finish(const pipeline::Bundle& b, const std::vector<fs::path>& written) {
    for (const auto& p : written) std::cout << p.string() << "\n";
    for (const auto& r : b.runs)
        if (r.failed) std::cerr << "run " << r.ctx.run_id() << " failed: " << r.error << "\n";
    std::cerr << b.runs.size() << " runs, " << b.failed() << " failed\n";
    return b.exit_code();
}

std::vector<stats::Factor> parse_factors(const std::vector<std::string>& in) {
    std::vector<stats::Factor> out;
    for (const auto& s : in) {
        const auto f = stats::parse_factor(s);
        if (!f) throw UsageError("unknown factor '" + s + "' (light_level, course, run_order)");
        out.push_back(*f);
    }
    if (out.empty()) out.assign(pipeline::kTableFactors.begin(), pipeline::kTableFactors.end());
    return out;
}

std::vector<pipeline::Variable> parse_variables(const std::vector<std::string>& in) {
    std::vector<pipeline::Variable> out;
    for (const auto& s : in) {
        const auto v = pipeline::parse_variable(s);
        if (!v) throw UsageError("unknown variable '" + s + "'");
        out.push_back(*v);
    }
    if (out.empty()) out.assign(pipeline::kTableVariables.begin(), pipeline::kTableVariables.end());
    return out;
}

stats::Adjustment parse_adjust(const std::string& s) {
    const auto a = stats::parse_adjustment(s);
    if (!a) throw UsageError("unknown adjustment '" + s + "' (none, bonferroni, holm)");
    return *a;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"VR orientation-and-mobility test data pipeline"};
    app.require_subcommand(1, 1);

    Shared sh;
    std::vector<std::string> factors, variables;
    std::string adjust = "holm";
    bool include_training = false;
    bool no_processed = false;

    auto* ingest = app.add_subcommand("ingest", "parse raw runs and report row counts");
    auto* prep = app.add_subcommand("preprocess", "apply corrections, resample, align eye clock, write processed files");
    auto* met = app.add_subcommand("metrics", "per-run metric table");
    auto* beh = app.add_subcommand("behavior", "missed-object table and feature cross-tabulations");
    auto* st = app.add_subcommand("stats", "Kruskal-Wallis table and Dunn matrices");
    auto* photo = app.add_subcommand("photometry", "lighting tables and grey-to-luminance lookup");
    auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
    auto* rep = app.add_subcommand("report", "full pipeline with every report table");

    for (auto* c : {ingest, prep, met, beh, st, rep}) add_shared(c, sh);
    for (auto* c : {prep, met, beh, st, rep}) c->add_flag("--no-processed", no_processed, "skip writing processed run files");
    for (auto* c : {st, rep}) {
        c->add_option("--factor", factors, "light_level, course, run_order (repeatable)");
        c->add_option("--var", variables, "time_duration, n_missed, time_before_first_step, ... (repeatable)");
        c->add_option("--adjust", adjust, "Dunn p-value adjustment")->capture_default_str();
        c->add_flag("--include-training", include_training, "add T1/T2 to the run-order groups");
    }

    add_shared(photo, sh);
    std::vector<double> greys;
    std::string anchors;
    photo->add_option("--grey", greys, "rendered grey values to convert to cd/m2");
    photo->add_option("--anchors", anchors, "calibration anchors file (grey,luminance per line)");

    add_shared(sim, sh);
    simgen::SuiteSpec spec;
    std::vector<std::string> courses;
    std::vector<int> levels;
    sim->add_option("--runs", spec.n_runs, "number of runs")->capture_default_str()->check(CLI::PositiveNumber);
    sim->add_option("--courses", courses, "evaluation courses to cycle through (default A-F)");
    sim->add_option("--levels", levels, "light levels to cycle through (default 1-6)")->check(CLI::Range(1, 6));
    sim->add_option("--threshold", spec.base.detect_luminance_threshold, "detection luminance threshold, cd/m2")->capture_default_str();
    sim->add_option("--speed", spec.base.speed, "walking speed, m/s")->capture_default_str();
    sim->add_option("--start-delay", spec.base.start_delay_s, "seconds before the first step")->capture_default_str();
    sim->add_option("--dwell", spec.base.dwell_to_destroy_s, "seconds of contact to destroy an object")->capture_default_str();
    sim->add_option("--reaction", spec.base.reaction_delay_s, "reaction delay, s")->capture_default_str();
    sim->add_option("--jitter", spec.base.timestamp_jitter_sd, "pose stamp jitter sd, s")->capture_default_str();
    sim->add_option("--pauses", spec.base.n_pauses, "stop/start pauses per run")->capture_default_str();
    sim->add_flag("--inject-issues", spec.inject_issues, "plant log defects and list them in meta_data/issues.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (sh.out.empty() && !*photo) sh.out = *sim ? "vrsom_sim" : "vrsom_out";

    try {
        if (*sim) {
            spec.seed = sh.seed;
            spec.jobs = sh.jobs;
            if (!courses.empty()) {
                spec.courses.clear();
                for (const auto& c : courses) spec.courses.push_back(parse_course(c));
            }
            if (!levels.empty()) spec.levels = levels;
            const auto suite = simgen::generate_suite(sh.out, spec);
            std::cout << suite.root.string() << ": " << suite.runs.size() << " runs\n";
            return 0;
        }

        if (*photo) {
            pipeline::Table t{"photometry", {"element", "light_level", "ambient", "material_grey", "rendered_grey", "luminance_cd_m2"}, {}};
            for (auto e : photometry::kAllElements)
                for (int l = 1; l <= 6; ++l) {
                    const LightLevel lv(l);
                    t.add({pipeline::str(std::string(photometry::to_string(e))), pipeline::num(l),
                           pipeline::num(photometry::ambient_intensity(lv)), pipeline::num(photometry::material_grey(e)),
                           pipeline::num(photometry::rendered_grey(e, lv)), pipeline::num(photometry::estimated_luminance(e, lv))});
                }
            const auto fmt = *pipeline::parse_format(sh.format);
            std::vector<pipeline::Table> tables{t};
            if (!greys.empty()) {
                const auto curve = anchors.empty() ? photometry::builtin_curve() : photometry::load_anchor_file(anchors);
                pipeline::Table g{"grey_luminance", {"grey", "luminance_cd_m2"}, {}};
                for (double v : greys) g.add({pipeline::num(v), pipeline::num(photometry::luminance_from_grey(v, curve))});
                tables.push_back(g);
            }
            for (const auto& tb : tables) {
                if (sh.out.empty()) std::cout << (fmt == pipeline::Format::csv ? pipeline::to_csv(tb) : pipeline::to_json(tb).dump(1) + "\n");
                else std::cout << pipeline::write_table(sh.out, tb, fmt).string() << "\n";
            }
            return 0;
        }

        auto o = make_options(sh);
        o.write_processed = !no_processed;
        o.include_training = include_training;
        o.adjustment = parse_adjust(adjust);

        if (*ingest) {
            o.write_processed = false;
            const auto b = pipeline::run_pipeline(o, pipeline::Stage::ingest);
            write_log(b, o);
            return finish(b, {pipeline::write_table(o.out_dir, pipeline::ingest_table(b), o.format)});
        }
        if (*prep) {
            const auto b = pipeline::run_pipeline(o, pipeline::Stage::preprocess);
            write_log(b, o);
            return finish(b, {pipeline::write_table(o.out_dir, pipeline::ingest_table(b), o.format),
                              pipeline::write_table(o.out_dir, pipeline::sync_table(b), o.format)});
        }
        if (*met) {
            const auto b = pipeline::run_pipeline(o, pipeline::Stage::metrics);
            write_log(b, o);
            return finish(b, {pipeline::write_table(o.out_dir, pipeline::metrics_table(b), o.format)});
        }
        if (*beh) {
            const auto b = pipeline::run_pipeline(o, pipeline::Stage::behavior);
            write_log(b, o);
            const auto rows = pipeline::missed_rows(b);
            const auto missed = o.out_dir / "missed_obj_info.txt";
            text::write_file(missed, behavior::format_missed_obj_info(rows));
            return finish(b, {missed, pipeline::write_table(o.out_dir, pipeline::crosstab_table(rows), o.format)});
        }
        if (*st) {
            const auto b = pipeline::run_pipeline(o, pipeline::Stage::metrics);
            write_log(b, o);
            const auto sel_factors = parse_factors(factors);
            const auto vs = parse_variables(variables);
            const auto kw = pipeline::kw_table(b, sel_factors, vs, o.include_training);
            std::vector<fs::path> written{pipeline::write_table(o.out_dir, kw, o.format)};
            for (auto f : sel_factors)
                for (auto v : vs) {
                    const auto g = pipeline::group_runs(b.runs, f, v, o.include_training);
                    if (g.non_empty() < 2) continue;
                    written.push_back(pipeline::write_table(o.out_dir, pipeline::dunn_table(stats::dunn_posthoc(g, o.adjustment), f, v), o.format));
                }
            std::cout << pipeline::to_csv(kw);
            return finish(b, written);
        }
        if (*rep) {
            const auto b = pipeline::run_pipeline(o, pipeline::Stage::behavior);
            return finish(b, pipeline::write_report(b, o, {parse_factors(factors), parse_variables(variables)}));
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
