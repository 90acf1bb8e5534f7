#include <gtest/gtest.h>

#include <cstdlib>
#include <sys/wait.h>

#include "oracles.hpp"
#include "vrsom/pipeline.hpp"
#include "vrsom/simgen.hpp"

using namespace vrsom;
namespace fs = std::filesystem;

namespace {

const fs::path& small_suite() {
    static const fs::path root = [] {
        const auto r = oracle::fresh_dir("pipeline_suite");
        simgen::SuiteSpec spec;
        spec.n_runs = 24;
        spec.seed = 5;
        spec.inject_issues = true;
        simgen::generate_suite(r, spec);
        return r;
    }();
    return root;
}

pipeline::Options options(const std::string& out, unsigned jobs = 1) {
    pipeline::Options o;
    o.dataset_root = small_suite();
    o.out_dir = oracle::fresh_dir(out);
    o.jobs = jobs;
    return o;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(VRSOM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Tables, CsvEscapingAndJsonTypes) {
    pipeline::Table t{"t", {"a", "b"}, {}};
    t.add({pipeline::str("x,\"y\""), pipeline::num(1.5)});
    t.add({pipeline::str("plain"), pipeline::na()});
    EXPECT_EQ(pipeline::to_csv(t), "a,b\n\"x,\"\"y\"\"\",1.5\nplain,\n");
    const auto j = pipeline::to_json(t);
    EXPECT_EQ(j[0]["a"], "x,\"y\"");
    EXPECT_EQ(j[0]["b"], 1.5);
    EXPECT_TRUE(j[1]["b"].is_null());
    EXPECT_FALSE(pipeline::parse_format("xml"));
}

TEST(Pipeline, ReportsAgreeAcrossFormats) {
    auto o = options("pipeline_csv");
    const auto b = pipeline::run_pipeline(o);
    EXPECT_EQ(b.failed(), 0u);
    const auto tables = pipeline::report_tables(b, o);
    for (const auto& t : tables) {
        const auto j = pipeline::to_json(t);
        ASSERT_EQ(j.size(), t.rows.size());
        for (std::size_t r = 0; r < t.rows.size(); ++r)
            for (std::size_t c = 0; c < t.columns.size(); ++c) {
                const auto& cell = t.rows[r][c];
                const auto& v = j[r][t.columns[c]];
                if (cell.text.empty() && cell.numeric) EXPECT_TRUE(v.is_null());
                else if (cell.numeric) EXPECT_EQ(v.get<double>(), *text::parse_double(cell.text)) << t.name;
                else EXPECT_EQ(v.get<std::string>(), cell.text);
            }
    }
}

TEST(Pipeline, IdenticalAcrossJobsAndRepeats) {
    auto a = options("pipeline_j1", 1);
    auto b = options("pipeline_j3", 3);
    auto c = options("pipeline_j1_again", 1);
    pipeline::write_report(pipeline::run_pipeline(a), a);
    pipeline::write_report(pipeline::run_pipeline(b), b);
    pipeline::write_report(pipeline::run_pipeline(c), c);
    const auto sa = oracle::snapshot(a.out_dir);
    EXPECT_GT(sa.size(), 10u);
    EXPECT_EQ(sa, oracle::snapshot(b.out_dir));
    EXPECT_EQ(sa, oracle::snapshot(c.out_dir));
}

TEST(Pipeline, ExcludedAndInjectedRunsHandled) {
    auto o = options("pipeline_issues");
    const auto b = pipeline::run_pipeline(o, pipeline::Stage::metrics);
    ASSERT_EQ(b.runs.size(), 24u);
    EXPECT_FALSE(b.issues.empty());
    for (const auto& r : b.runs) {
        EXPECT_FALSE(r.failed) << r.error;
        ASSERT_TRUE(r.metrics.has_value());
    }
    const auto g = pipeline::group_runs(b.runs, stats::Factor::light_level, pipeline::Variable::n_missed);
    EXPECT_EQ(g.total(), 24u);
    EXPECT_TRUE(fs::exists(o.out_dir / "test_data_processed" / "101" / "1" / "CorrectedEvents.txt"));
}

TEST(Pipeline, BrokenRunIsRecordedNotFatal) {
    const auto root = oracle::fresh_dir("pipeline_broken");
    simgen::SuiteSpec spec;
    spec.n_runs = 3;
    simgen::generate_suite(root, spec);
    fs::remove(root / "test_data" / "101" / "2" / "Events.txt");
    pipeline::Options o;
    o.dataset_root = root;
    o.out_dir = oracle::fresh_dir("pipeline_broken_out");
    const auto b = pipeline::run_pipeline(o);
    EXPECT_EQ(b.failed(), 1u);
    EXPECT_EQ(b.exit_code(), 1);
    EXPECT_TRUE(b.runs[1].failed);
    EXPECT_NE(pipeline::format_log_jsonl(b).find("\"status\":\"failed\""), std::string::npos);
    // no issues.csv: the published table is used with a warning
    EXPECT_FALSE(b.warnings.empty());
}

TEST(Pipeline, MissingRootIsIoError) {
    pipeline::Options o;
    o.dataset_root = oracle::fresh_dir("pipeline_none") / "absent";
    EXPECT_THROW(pipeline::run_pipeline(o), IoError);
}

TEST(Cli, ExitCodes) {
    const auto out = oracle::fresh_dir("cli_out");
    const auto root = small_suite().string();
    EXPECT_EQ(run_cli(""), 2);
    EXPECT_EQ(run_cli("frobnicate"), 2);
    EXPECT_EQ(run_cli("report --dataset-root " + root + " --format xml"), 2);
    EXPECT_EQ(run_cli("stats --dataset-root " + root + " --factor colour --out " + out.string()), 2);
    EXPECT_EQ(run_cli("metrics --dataset-root " + (out / "absent").string() + " --out " + out.string()), 1);
    EXPECT_EQ(run_cli("report --dataset-root " + root + " --out " + (out / "rep").string() + " --jobs 2"), 0);
    EXPECT_TRUE(fs::exists(out / "rep" / "kruskal_wallis.csv"));
    EXPECT_EQ(run_cli("photometry --grey 58 --grey 20"), 0);
    EXPECT_EQ(run_cli("photometry --grey 500"), 1);
    EXPECT_EQ(run_cli("simulate --runs 2 --out " + (out / "sim").string()), 0);
    EXPECT_TRUE(fs::exists(out / "sim" / "meta_data" / "Result_H.csv"));
    EXPECT_EQ(run_cli("--help"), 0);
}
