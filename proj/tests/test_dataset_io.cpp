#include <gtest/gtest.h>

#include <fstream>

#include "oracles.hpp"
#include "vrsom/dataset_io.hpp"
#include "vrsom/simgen.hpp"

using namespace vrsom;
namespace fs = std::filesystem;

namespace {

void put(const fs::path& p, const std::string& s) { text::write_file(p, s); }

io::RunRecord small_run() {
    io::RunRecord r;
    r.ctx.subject_id = 3;
    r.ctx.run_order = RunOrder::evaluation(2);
    r.ctx.course_id = Course::B;
    r.ctx.light_level = LightLevel(5);
    auto ev = [](double t, Initiator i, Action a, std::string rec = "", std::string info = "") {
        Event e;
        e.t = t;
        e.initiator = i;
        e.action = a;
        e.recipient = std::move(rec);
        e.info = std::move(info);
        return e;
    };
    r.events = {ev(0, Initiator::System, Action::launch), ev(1.5, Initiator::User, Action::start),
                ev(4.25, Initiator::User, Action::gaze_in, "B_cube 0"), ev(6.75, Initiator::User, Action::destroy, "B_cube 0"),
                ev(9, Initiator::System, Action::end, "", "done")};
    for (int k = 0; k < 10; ++k) {
        const double t = k / 90.0;
        const auto q = euler_yxz_to_quaternion({10.0 * k - 40, 3.0 * k - 10, -5.0 * k + 12});
        r.head.push_back({t, {0.1 * k, 1.6, 0.2 * k}, q, BodyPart::head});
        r.body.push_back({t, {0.1 * k, 0.9, 0.2 * k}, euler_yxz_to_quaternion({10.0 * k, 0, 0}), BodyPart::body});
        r.hand.push_back({t + 0.001, {0.3, 1.0, 0.5 + k}, q, BodyPart::hand});
    }
    for (int k = 0; k < 12; ++k)
        r.eye.push_back({500 + k / 120.0, {0.1 * k, 1.55, 0.2}, {0, 0, 1}, k != 4});
    r.eye[4].origin = {0, 0, 0};
    r.eye[4].direction = {0, 0, 0};
    return r;
}

}  // namespace

TEST(RawRun, WriteReadRoundTrip) {
    const auto dir = oracle::fresh_dir("io_roundtrip");
    const auto run = small_run();
    io::write_raw_run(dir, run);
    const auto back = io::load_run(dir, run.ctx);
    ASSERT_EQ(back.events, run.events);
    ASSERT_EQ(back.head.size(), run.head.size());
    for (std::size_t i = 0; i < run.head.size(); ++i) {
        EXPECT_EQ(back.head[i].t, run.head[i].t);
        EXPECT_EQ(back.head[i].pos, run.head[i].pos);
        EXPECT_LT(rotation_angle_between(back.head[i].rot, run.head[i].rot), 1e-9);
        EXPECT_LT(rotation_angle_between(back.hand[i].rot, run.hand[i].rot), 1e-9);
    }
    EXPECT_EQ(back.eye, run.eye);
    EXPECT_EQ(back.report.total_dropped(), 0u);
}

TEST(RawRun, MissingFileIsIoError) {
    const auto dir = oracle::fresh_dir("io_missing");
    io::write_raw_run(dir, small_run());
    fs::remove(io::run_directory(dir, 3, RunOrder::evaluation(2)) / "Hand_Data.txt");
    EXPECT_THROW(io::load_run(dir, 3, RunOrder::evaluation(2)), IoError);
}

TEST(Events, BadRowsDroppedUnknownActionsKept) {
    const auto dir = oracle::fresh_dir("io_events");
    put(dir / "e.txt",
        "timestamp;initiator;action;recipient;info\n"
        "0;System;launch;;\n"
        "abc;User;start;;\n"
        "2;Robot;start;;\n"
        "3;User;teleport;Wall;a;b\n"
        "1;User;start;;\n");
    io::FileReport rep;
    const auto ev = io::read_events(dir / "e.txt", io::default_schemas().events, rep);
    ASSERT_EQ(ev.size(), 3u);
    EXPECT_EQ(rep.rows_dropped, 2u);
    EXPECT_EQ(rep.reordered, 1u);
    EXPECT_EQ(ev[1].action, Action::start);  // stable-sorted by time
    EXPECT_EQ(ev[2].action, Action::other);
    EXPECT_EQ(ev[2].other_action, "teleport");
    EXPECT_EQ(ev[2].info, "a;b");
    EXPECT_EQ(rep.unknown_actions.at("teleport"), 1u);
}

TEST(Events, ShortFirstRowIsParseErrorWithLine) {
    const auto dir = oracle::fresh_dir("io_short");
    put(dir / "p.txt", "header\n\n0;1;2\n");
    io::FileReport rep;
    try {
        io::read_position(dir / "p.txt", io::default_schemas().position, rep);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(Eye, DirectionRenormalizedAndValidityParsed) {
    const auto dir = oracle::fresh_dir("io_eye");
    put(dir / "y.txt", "h\n10,True,1,2,3,0,0,2\n10.5,invalid,0,0,0,0,0,0\n11,1,1,2,3,0,0,0\n");
    io::FileReport rep;
    const auto eye = io::read_eye(dir / "y.txt", io::default_schemas().eye, rep);
    ASSERT_EQ(eye.size(), 3u);
    EXPECT_TRUE(eye[0].valid);
    EXPECT_DOUBLE_EQ(eye[0].direction.z, 1.0);
    EXPECT_FALSE(eye[1].valid);
    EXPECT_FALSE(eye[2].valid);  // zero direction cannot be valid
}

TEST(Schema, JsonOverride) {
    const auto dir = oracle::fresh_dir("io_schema");
    put(dir / "s.json", R"({"eye": {"delimiter": "tab", "header_rows": 0,
        "columns": {"valid": 0, "timestamp": 1, "origin.x": 2, "origin.y": 3, "origin.z": 4,
                    "direction.x": 5, "direction.y": 6, "direction.z": 7}}})");
    const auto s = io::load_schemas(dir / "s.json");
    EXPECT_EQ(s.eye.delimiter, '\t');
    EXPECT_EQ(s.eye.column("timestamp"), 1);
    EXPECT_EQ(s.events.column("timestamp"), 0);
    put(dir / "y.txt", "1\t7.5\t0\t1\t0\t0\t0\t1\n");
    io::FileReport rep;
    const auto eye = io::read_eye(dir / "y.txt", s.eye, rep);
    ASSERT_EQ(eye.size(), 1u);
    EXPECT_EQ(eye[0].t, 7.5);

    put(dir / "bad.json", R"({"eye": {"columns": {"timestamp": 0}}})");
    EXPECT_THROW(io::load_schemas(dir / "bad.json"), ParseError);
    put(dir / "dup.json", R"({"events": {"columns": {"timestamp": 0, "initiator": 0, "action": 1, "recipient": 2}}})");
    EXPECT_THROW(io::load_schemas(dir / "dup.json"), ParseError);
    put(dir / "broken.json", "{");
    EXPECT_THROW(io::load_schemas(dir / "broken.json"), ParseError);
}

TEST(Processed, RoundTrip) {
    const auto dir = oracle::fresh_dir("io_processed");
    auto run = small_run();
    for (auto& s : run.head) s.rot = s.rot.canonical();
    io::write_processed(run, dir);
    const auto back = io::read_processed(dir, run.ctx.subject_id, run.ctx.run_order);
    EXPECT_EQ(back.events, run.events);
    EXPECT_EQ(back.head, run.head);
    EXPECT_EQ(back.body, run.body);
    EXPECT_EQ(back.hand, run.hand);
    EXPECT_EQ(back.eye, run.eye);
}

TEST(CourseMeta, BuiltinRoundTrip) {
    const auto dir = oracle::fresh_dir("io_course");
    for (Course c : kEvaluationCourses) {
        const auto g = simgen::builtin_course(c);
        io::write_course_meta(dir, g);
        const auto back = io::load_course_meta(dir, c);
        EXPECT_EQ(back.middle_points, g.middle_points);
        EXPECT_EQ(back.boundary_endpoints, g.boundary_endpoints);
        EXPECT_EQ(back.objects, g.objects);
        EXPECT_EQ(back.end_zone.center, g.middle_points.back());
    }
    io::DatasetRoot{dir, dir, dir}.validate();
}

TEST(CourseMeta, RejectsFeatureMismatchAndWrongCount) {
    const auto dir = oracle::fresh_dir("io_course_bad");
    auto g = simgen::builtin_course(Course::A);
    g.objects[0].grey = g.objects[0].grey == 83 ? 134 : 83;
    io::write_course_meta(dir, g);
    EXPECT_THROW(io::load_course_meta(dir, Course::A), ParseError);
    g = simgen::builtin_course(Course::A);
    g.objects.pop_back();
    io::write_course_meta(dir, g);
    EXPECT_THROW(io::load_course_meta(dir, Course::A), ParseError);
    EXPECT_THROW(io::DatasetRoot::at(dir / "nowhere").validate(), IoError);
}

TEST(CourseMeta, HeaderSynonymsAndLooseEndpoints) {
    const auto dir = oracle::fresh_dir("io_course_syn");
    const auto g = simgen::builtin_course(Course::C);
    io::write_course_meta(dir, g);
    std::string csv = "Object Name;Grey Level;Position X;Position Y;Position Z;Vertical Position;Horizontal Position\n";
    for (const auto& o : g.objects)
        csv += o.label + ";" + std::to_string(o.grey) + ";" + text::format_double(o.centroid.x) + ";" +
               text::format_double(o.centroid.y) + ";" + text::format_double(o.centroid.z) + ";" +
               std::string(to_string(o.vertical)) + ";" +
               (o.horizontal == HorizontalPos::on_path ? "On the path" : std::string(to_string(o.horizontal))) + "\n";
    put(io::course_meta_file(dir, Course::C), csv);
    std::string ep;
    for (const auto& [a, b] : g.boundary_endpoints)
        ep += text::format_double(a.x) + "," + text::format_double(a.z) + "\n" + text::format_double(b.x) + "," +
              text::format_double(b.z) + "\n";
    put(io::endpoints_file(dir, Course::C), ep);
    const auto back = io::load_course_meta(dir, Course::C);
    ASSERT_EQ(back.objects.size(), 9u);
    EXPECT_EQ(back.objects[3].centroid, g.objects[3].centroid);
    EXPECT_EQ(back.objects[3].horizontal, g.objects[3].horizontal);
    EXPECT_EQ(back.boundary_endpoints, g.boundary_endpoints);
}

TEST(Summary, ParsesAndValidates) {
    const auto dir = oracle::fresh_dir("io_summary");
    put(dir / "Result_H.csv", "Participant;Run order;Labyrinth;Light level;Notes\n1;T1;G;4;first\n1;1;A;2;ok; really\n\n");
    const auto runs = io::load_results_summary(dir);
    ASSERT_EQ(runs.size(), 2u);
    EXPECT_EQ(runs[0].run_order, RunOrder::train(1));
    EXPECT_EQ(runs[1].course_id, Course::A);
    EXPECT_EQ(runs[1].light_level.value(), 2);
    EXPECT_EQ(runs[1].experimenter_notes, "ok; really");

    put(dir / "Result_H.csv", "subject,run,course,light\n1,1,G,4\n");
    EXPECT_THROW(io::load_results_summary(dir), ParseError);
    put(dir / "Result_H.csv", "subject,run,course,light\n1,1,A,4\n1,1,B,3\n");
    EXPECT_THROW(io::load_results_summary(dir), ParseError);
    put(dir / "Result_H.csv", "subject,run,course,light\n1,1,A,9\n");
    EXPECT_THROW(io::load_results_summary(dir), ParseError);
    put(dir / "Result_H.csv", "");
    EXPECT_TRUE(io::load_results_summary(dir).empty());
}

TEST(Issues, PublishedTableLeaves479Runs) {
    std::vector<RunContext> all;
    for (int s = 1; s <= 42; ++s)
        for (int r = 1; r <= 12; ++r) {
            RunContext c;
            c.subject_id = s;
            c.run_order = RunOrder::evaluation(r);
            all.push_back(c);
        }
    EXPECT_EQ(io::included_evaluation_runs(all, published_issue_table()).size(), 479u);
    EXPECT_FALSE(published_issue_table().exclusion_reason(23, RunOrder::evaluation(12)).empty());
    EXPECT_TRUE(published_issue_table().exclusion_reason(23, RunOrder::evaluation(2)).empty());
    EXPECT_TRUE(published_issue_table().exclusion_reason(13, RunOrder::evaluation(4)).empty());
}

TEST(Issues, FileRoundTrip) {
    const auto dir = oracle::fresh_dir("io_issues");
    put(dir / "i.csv", io::format_issue_table(published_issue_table()));
    const auto back = io::load_issue_table(dir / "i.csv");
    EXPECT_EQ(io::format_issue_table(back), io::format_issue_table(published_issue_table()));
    put(dir / "bad.csv", "1,2,melted\n");
    EXPECT_THROW(io::load_issue_table(dir / "bad.csv"), ParseError);
}
