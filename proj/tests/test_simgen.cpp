#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vrsom/metrics.hpp"
#include "vrsom/preprocess.hpp"
#include "vrsom/simgen.hpp"

using namespace vrsom;
using namespace vrsom::simgen;

namespace {

CourseGeometry straight(double length) {
    CourseGeometry g;
    g.course_id = Course::A;
    g.middle_points = {{0, 0}, {0, length}};
    g.boundary_endpoints = {{{-1, 0}, {1, 0}}, {{-1, length}, {1, length}}};
    g.start_zone = {g.middle_points.front(), 1};
    g.end_zone = {g.middle_points.back(), 1};
    return g;
}

}  // namespace

TEST(Rng, Deterministic) {
    Rng a(5), b(5), c(6);
    for (int i = 0; i < 100; ++i) {
        const double x = a.uniform(0, 1);
        EXPECT_EQ(x, b.uniform(0, 1));
        EXPECT_GE(x, 0.0);
        EXPECT_LT(x, 1.0);
    }
    EXPECT_NE(a.uniform(0, 1), c.uniform(0, 1));
}

TEST(Course, BuiltinGeometryIsConsistent) {
    for (Course c : kEvaluationCourses) {
        const auto g = builtin_course(c);
        EXPECT_EQ(g.objects.size(), 9u);
        EXPECT_EQ(g.boundary_endpoints.size(), g.middle_points.size());
        EXPECT_NEAR(g.path_length(), kBuiltinPathLength, 1e-9);
        for (const auto& p : g.middle_points) EXPECT_TRUE(inside_path_polygon(g, p));
        for (const auto& o : g.objects) {
            const auto* ref = find_object_features(o.label);
            ASSERT_NE(ref, nullptr);
            EXPECT_EQ(ref->grey, o.grey);
            const bool inside = inside_path_polygon(g, {o.centroid.x, o.centroid.z});
            if (o.horizontal == HorizontalPos::off_path) EXPECT_FALSE(inside) << o.label;
            if (o.horizontal == HorizontalPos::on_path) EXPECT_TRUE(inside) << o.label;
        }
    }
    EXPECT_THROW(builtin_course(Course::G), DomainError);
    EXPECT_FALSE(inside_path_polygon(builtin_course(Course::A), {100, 100}));
}

TEST(Simulate, StraightPathTiming) {
    AgentParams p;
    p.speed = 1.0;
    p.start_delay_s = 5.0;
    p.timestamp_jitter_sd = 0.0;
    const auto sim = simulate_run(straight(30), LightLevel(4), p);
    EXPECT_DOUBLE_EQ(sim.truth.metrics.time_duration_s, 30.0);
    EXPECT_DOUBLE_EQ(sim.truth.metrics.time_before_first_step_s, 5.0);
    const auto m = metrics::synthesize_run_metrics(sim.run.events, 9);
    EXPECT_NEAR(m.time_duration_s, 30.0, 1.0 / 90);
    EXPECT_NEAR(m.time_before_first_step_s, 5.0, 1.0 / 90);
    EXPECT_NEAR(sim.run.head.back().t, 35.0, 1e-9);
    EXPECT_NEAR(sim.run.head.back().pos.z, 30.0, 1e-6);
    EXPECT_NEAR(sim.run.head.front().pos.z, 0.0, 1e-12);
}

TEST(Simulate, ThresholdControlsDetection) {
    const auto g = builtin_course(Course::B);
    AgentParams p;
    p.detect_luminance_threshold = 0.0;
    p.detect_range_m = 1000;
    for (int l = 1; l <= 6; ++l) EXPECT_EQ(simulate_run(g, LightLevel(l), p).truth.metrics.n_missed_objects, 0) << l;
    p.detect_luminance_threshold = 1e6;
    for (int l = 1; l <= 6; ++l) EXPECT_EQ(simulate_run(g, LightLevel(l), p).truth.metrics.n_missed_objects, 9) << l;
}

TEST(Simulate, MissedNonIncreasingWithLight) {
    for (Course c : kEvaluationCourses) {
        const auto g = builtin_course(c);
        int prev = 10;
        for (int l = 1; l <= 6; ++l) {
            AgentParams p;
            p.rng_seed = 17;
            const int missed = simulate_run(g, LightLevel(l), p).truth.metrics.n_missed_objects;
            EXPECT_LE(missed, prev) << course_letter(c) << " L" << l;
            prev = missed;
        }
    }
}

TEST(Simulate, DeterministicForSeed) {
    const auto g = builtin_course(Course::D);
    AgentParams p;
    p.rng_seed = 42;
    p.n_pauses = 2;
    const auto a = simulate_run(g, LightLevel(3), p);
    const auto b = simulate_run(g, LightLevel(3), p);
    EXPECT_EQ(a.run, b.run);
    p.rng_seed = 43;
    EXPECT_NE(simulate_run(g, LightLevel(3), p).run.head, a.run.head);
}

TEST(Simulate, HeadStaysOnPath) {
    AgentParams p;
    p.rng_seed = 1;
    for (Course c : kEvaluationCourses) {
        const auto g = builtin_course(c);
        const auto sim = simulate_run(g, LightLevel(2), p);
        for (const auto& h : preprocess::resample_pose_stream(sim.run.head))
            ASSERT_TRUE(inside_path_polygon(g, {h.pos.x, h.pos.z})) << course_letter(c) << " t=" << h.t;
    }
}

TEST(Simulate, RejectsBadParams) {
    AgentParams p;
    p.speed = 0;
    EXPECT_THROW(simulate_run(builtin_course(Course::A), LightLevel(1), p), DomainError);
    p = {};
    p.eye_invalid_fraction = 1.0;
    EXPECT_THROW(p.validate(), DomainError);
    CourseGeometry empty;
    EXPECT_THROW(simulate_run(empty, LightLevel(1), AgentParams{}), DomainError);
}

TEST(Suite, RoundTripsThroughPipeline) {
    const auto root = oracle::fresh_dir("simgen_suite");
    SuiteSpec spec;
    spec.n_runs = 50;
    spec.inject_issues = true;
    spec.base.n_pauses = 1;
    spec.base.n_collision_events = 1;
    spec.base.n_off_path_events = 1;
    spec.seed = 9;
    const auto suite = generate_suite(root, spec);
    ASSERT_EQ(suite.runs.size(), 50u);
    EXPECT_FALSE(suite.issues.empty());

    const auto layout = io::DatasetRoot::at(root);
    layout.validate();
    const auto runs = io::load_results_summary(layout.meta_dir);
    ASSERT_EQ(runs.size(), 50u);
    const auto issues = io::load_issue_table(layout.meta_dir / "issues.csv");
    const auto truth = read_ground_truth(root / "ground_truth.csv");
    ASSERT_EQ(truth.size(), 50u);
    std::set<Course> courses;
    std::set<int> levels;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        courses.insert(runs[i].course_id);
        levels.insert(runs[i].light_level.value());
        const auto pre = preprocess::preprocess_run(io::load_run(layout.raw_dir, runs[i]), issues);
        const auto m = metrics::synthesize_run_metrics(pre.run.events);
        const auto& t = truth[i].truth.metrics;
        EXPECT_EQ(m.n_missed_objects, t.n_missed_objects) << runs[i].run_id();
        EXPECT_EQ(m.n_off_path, t.n_off_path);
        EXPECT_EQ(m.n_collisions, t.n_collisions);
        EXPECT_EQ(m.n_stops, t.n_stops);
        EXPECT_NEAR(m.time_duration_s, t.time_duration_s, 1.0 / 90);
        EXPECT_NEAR(m.time_before_first_step_s, t.time_before_first_step_s, 1.0 / 90);
        EXPECT_TRUE(pre.sync.pass_x && pre.sync.pass_z) << runs[i].run_id();
    }
    EXPECT_EQ(courses.size(), 6u);
    EXPECT_EQ(levels.size(), 6u);
}

TEST(Suite, ParallelGenerationIsByteIdentical) {
    SuiteSpec spec;
    spec.n_runs = 8;
    spec.seed = 3;
    spec.inject_issues = true;
    const auto a = oracle::fresh_dir("simgen_jobs1");
    const auto b = oracle::fresh_dir("simgen_jobs4");
    generate_suite(a, spec);
    spec.jobs = 4;
    generate_suite(b, spec);
    EXPECT_EQ(oracle::snapshot(a), oracle::snapshot(b));
}
