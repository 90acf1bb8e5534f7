#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vrsom/behavior.hpp"
#include "vrsom/simgen.hpp"

using namespace vrsom;
using namespace vrsom::behavior;

namespace {

Event ev(double t, Initiator i, Action a, std::string rec = "") {
    Event e;
    e.t = t;
    e.initiator = i;
    e.action = a;
    e.recipient = std::move(rec);
    return e;
}

PoseSample head_at(double yaw, double pitch = 0) {
    return {0.0, {0, 1.6, 0}, euler_yxz_to_quaternion({yaw, pitch, 0}), BodyPart::head};
}

Vec3 towards(double az_deg, double el_deg, double r = 3) {
    const double a = deg2rad(az_deg), e = deg2rad(el_deg);
    return {r * std::cos(e) * std::sin(a), 1.6 + r * std::sin(e), r * std::cos(e) * std::cos(a)};
}

}  // namespace

TEST(Fov, BoundaryInclusive) {
    const FovModel fov;
    EXPECT_TRUE(in_fov(head_at(0), towards(47.0, 0), fov));
    EXPECT_FALSE(in_fov(head_at(0), towards(47.1, 0), fov));
    EXPECT_TRUE(in_fov(head_at(0), towards(-47.0, 0), fov));
    EXPECT_TRUE(in_fov(head_at(0), towards(0, 47.0), fov));
    EXPECT_FALSE(in_fov(head_at(0), towards(0, -47.1), fov));
    EXPECT_FALSE(in_fov(head_at(0), towards(180, 0), fov));
    EXPECT_FALSE(in_fov(head_at(0), {0, 1.6, 0}, fov));
}

TEST(Fov, FollowsHeadYawAndPitch) {
    const FovModel fov;
    // +yaw turns +Z towards +X
    const auto b = head_local_bearing(head_at(90), {5, 1.6, 0});
    EXPECT_NEAR(b.azimuth_deg, 0.0, 1e-9);
    EXPECT_TRUE(in_fov(head_at(60), towards(100, 0), fov));
    EXPECT_FALSE(in_fov(head_at(-60), towards(100, 0), fov));
    EXPECT_TRUE(in_fov(head_at(0, 40), towards(0, -80), fov));
    EXPECT_THROW((FovModel{95, 47}.validate()), DomainError);
}

TEST(Fov, DurationOverFixedStream) {
    ObjectSpec obj;
    obj.centroid = {0, 1.6, 4};
    PoseStream s;
    for (int k = 0; k <= 900; ++k) {
        auto h = head_at(0);
        h.t = k / 90.0;
        s.push_back(h);
    }
    EXPECT_NEAR(in_fov_duration(s, obj), 10.0, 1e-9);
    for (int k = 450; k <= 900; ++k) s[k].rot = euler_yxz_to_quaternion({180, 0, 0});
    EXPECT_NEAR(in_fov_duration(s, obj), 5.0, 1e-9);
}

TEST(Gaze, EpisodeRules) {
    const std::string o = "A_cube 0";
    const EventLog log{ev(0, Initiator::System, Action::launch), ev(1, Initiator::User, Action::gaze_out, o),
                       ev(2, Initiator::User, Action::gaze_in, o),  ev(3, Initiator::User, Action::gaze_in, o),
                       ev(4.5, Initiator::User, Action::gaze_out, o), ev(5, Initiator::User, Action::gaze_in, "A_cube 1"),
                       ev(6, Initiator::User, Action::gaze_in, o),  ev(9, Initiator::System, Action::end),
                       ev(9.5, Initiator::User, Action::gaze_out, o)};
    const auto r = gaze_episodes(log, o);
    ASSERT_EQ(r.episodes.size(), 2u);
    EXPECT_DOUBLE_EQ(r.episodes[0].duration(), 2.5);
    EXPECT_DOUBLE_EQ(r.episodes[1].t_in, 6.0);
    EXPECT_DOUBLE_EQ(r.episodes[1].t_out, 9.5);
    EXPECT_EQ(r.log.size(), 2u);  // orphan out, nested in

    const EventLog open{ev(0, Initiator::User, Action::gaze_in, o), ev(4, Initiator::System, Action::end)};
    const auto r2 = gaze_episodes(open, o);
    ASSERT_EQ(r2.episodes.size(), 1u);
    EXPECT_DOUBLE_EQ(r2.total_duration(), 4.0);
}

TEST(Missed, RowsForUndestroyedObjects) {
    const auto course = simgen::builtin_course(Course::A);
    io::RunRecord run;
    run.ctx.subject_id = 4;
    run.ctx.run_order = RunOrder::evaluation(3);
    run.ctx.course_id = Course::A;
    run.ctx.light_level = LightLevel(2);
    run.events = {ev(0, Initiator::System, Action::launch), ev(1, Initiator::User, Action::start)};
    for (std::size_t i = 0; i < 7; ++i)
        run.events.push_back(ev(2 + i, Initiator::User, Action::destroy, course.objects[i].label));
    run.events.push_back(ev(10, Initiator::User, Action::gaze_in, course.objects[8].label));
    run.events.push_back(ev(11, Initiator::User, Action::gaze_out, course.objects[8].label));
    run.events.push_back(ev(20, Initiator::System, Action::end));
    for (int k = 0; k < 10; ++k) run.head.push_back({k / 90.0, {0, 1.6, 0}, {}, BodyPart::head});
    auto rows = missed_objects_for_run(run, course);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1].object_label, course.objects[8].label);
    EXPECT_EQ(rows[1].n_gazes, 1);
    EXPECT_DOUBLE_EQ(rows[1].gaze_duration_s, 1.0);
    EXPECT_EQ(rows[0].light_level, 2);

    run.events.push_back(ev(12, Initiator::User, Action::destroy, "Z_cube 9"));
    EXPECT_THROW(missed_objects_for_run(run, course), DomainError);
}

TEST(CrossTabs, CountsAndFileRoundTrip) {
    std::vector<MissedObjectRow> rows;
    auto add = [&](int subj, int grey, int lvl, VerticalPos v, HorizontalPos h, int gazes) {
        MissedObjectRow r;
        r.subject_id = subj;
        r.run_order = RunOrder::evaluation(1);
        r.object_label = "A_cube " + std::to_string(rows.size());
        r.grey = grey;
        r.light_level = lvl;
        r.vertical = v;
        r.horizontal = h;
        r.n_gazes = gazes;
        r.gaze_duration_s = 0.1 * gazes;
        r.in_fov_duration_s = 1.0 / 3.0;
        rows.push_back(r);
    };
    add(2, 83, 1, VerticalPos::low, HorizontalPos::on_path, 0);
    add(1, 83, 1, VerticalPos::high, HorizontalPos::partial, 2);
    add(1, 134, 3, VerticalPos::low, HorizontalPos::off_path, 0);
    const auto p = missed_object_panels(rows);
    ASSERT_EQ(p.size(), 6u);
    EXPECT_EQ(p[0].count("83", "L1"), 2);
    EXPECT_EQ(p[0].count("134", "L3"), 1);
    EXPECT_EQ(p[0].row_total("111"), 0);
    EXPECT_EQ(p[1].row_values, (std::vector<std::string>{"0", "2"}));
    EXPECT_EQ(p[3].row_total("medium"), 0);
    EXPECT_EQ(p[3].count("low", "off_path"), 1);

    sort_rows(rows);
    EXPECT_EQ(rows.front().subject_id, 1);
    const auto dir = oracle::fresh_dir("behavior_missed");
    text::write_file(dir / "m.txt", format_missed_obj_info(rows));
    EXPECT_EQ(read_missed_obj_info(dir / "m.txt"), rows);
    text::write_file(dir / "bad.txt", std::string(kMissedHeader) + "\n1;2;3\n");
    EXPECT_THROW(read_missed_obj_info(dir / "bad.txt"), ParseError);
}
