#pragma once

// Domain types shared by every stage of the pipeline.
//
// World frame: left-handed, Y up, Z forward, X right (the recording engine's
// convention). Rotations recorded as Euler degrees compose intrinsically in
// Y (yaw), X (pitch), Z (roll) order, i.e. R = Ry(yaw) * Rx(pitch) * Rz(roll).

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vrsom/error.hpp"

namespace vrsom {

inline constexpr double kPoseHz = 90.0;
inline constexpr double kEyeHz = 120.0;
inline constexpr double kEffectiveHorizontalFovDeg = 94.0;
inline constexpr int kObjectsPerCourse = 9;

using Seconds = double;

inline constexpr double deg2rad(double d) noexcept { return d * std::numbers::pi / 180.0; }
inline constexpr double rad2deg(double r) noexcept { return r * 180.0 / std::numbers::pi; }

/// Wraps an angle in degrees to (-180, 180].
inline double wrap_degrees(double d) {
    double w = std::fmod(d, 360.0);
    if (w > 180.0) w -= 360.0;
    if (w <= -180.0) w += 360.0;
    return w;
}

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend constexpr Vec3 operator+(Vec3 a, Vec3 b) noexcept { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend constexpr Vec3 operator-(Vec3 a, Vec3 b) noexcept { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend constexpr Vec3 operator*(double s, Vec3 v) noexcept { return {s * v.x, s * v.y, s * v.z}; }
    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;

    constexpr double dot(Vec3 o) const noexcept { return x * o.x + y * o.y + z * o.z; }
    double norm() const noexcept { return std::sqrt(dot(*this)); }
    bool finite() const noexcept { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

struct EulerYXZ {
    double yaw_y = 0.0;    ///< degrees about Y
    double pitch_x = 0.0;  ///< degrees about X
    double roll_z = 0.0;   ///< degrees about Z

    friend bool operator==(const EulerYXZ&, const EulerYXZ&) = default;
};

/// Unit quaternion (w, x, y, z).
struct QuatRot {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const QuatRot&, const QuatRot&) = default;

    static constexpr QuatRot identity() noexcept { return {}; }

    double dot(const QuatRot& o) const noexcept { return w * o.w + x * o.x + y * o.y + z * o.z; }
    double norm() const noexcept { return std::sqrt(dot(*this)); }
    QuatRot operator-() const noexcept { return {-w, -x, -y, -z}; }
    QuatRot conjugate() const noexcept { return {w, -x, -y, -z}; }

    QuatRot normalized() const {
        const double n = norm();
        if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("cannot normalize a zero or non-finite quaternion");
        return {w / n, x / n, y / n, z / n};
    }

    /// Sign convention for serialization: w >= 0, ties broken on the first non-zero of x, y, z.
    QuatRot canonical() const noexcept {
        for (double c : {w, x, y, z}) {
            if (c > 0.0) return *this;
            if (c < 0.0) return -*this;
        }
        return *this;
    }

    friend QuatRot operator*(const QuatRot& a, const QuatRot& b) noexcept {
        return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
                a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
                a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
                a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
    }

    /// Rotates v by this (unit) quaternion.
    Vec3 rotate(Vec3 v) const noexcept {
        const QuatRot p{0.0, v.x, v.y, v.z};
        const QuatRot r = (*this) * p * conjugate();
        return {r.x, r.y, r.z};
    }

    static QuatRot from_axis_angle(Vec3 axis, double radians) {
        const double n = axis.norm();
        if (!(n > 0.0)) throw DomainError("axis must be non-zero");
        const double s = std::sin(radians / 2.0) / n;
        return {std::cos(radians / 2.0), axis.x * s, axis.y * s, axis.z * s};
    }
};

/// Angle of the rotation taking a to b, in radians, insensitive to quaternion sign.
inline double rotation_angle_between(const QuatRot& a, const QuatRot& b) {
    const QuatRot d = a.conjugate() * b;
    const double v = std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
    return 2.0 * std::atan2(v, std::abs(d.w));
}

inline QuatRot euler_yxz_to_quaternion(const EulerYXZ& e) {
    if (!std::isfinite(e.yaw_y) || !std::isfinite(e.pitch_x) || !std::isfinite(e.roll_z))
        throw DomainError("euler_yxz_to_quaternion: non-finite angle");
    const double hy = deg2rad(e.yaw_y) / 2.0;
    const double hx = deg2rad(e.pitch_x) / 2.0;
    const double hz = deg2rad(e.roll_z) / 2.0;
    const QuatRot qy{std::cos(hy), 0.0, std::sin(hy), 0.0};
    const QuatRot qx{std::cos(hx), std::sin(hx), 0.0, 0.0};
    const QuatRot qz{std::cos(hz), 0.0, 0.0, std::sin(hz)};
    return (qy * qx * qz).normalized().canonical();
}

/// Inverse of euler_yxz_to_quaternion. Yaw and roll in (-180, 180], pitch in [-90, 90].
/// At pitch = +-90 degrees (gimbal lock) roll is fixed to 0 and yaw absorbs the remainder.
inline EulerYXZ quaternion_to_euler_yxz(const QuatRot& q_in) {
    const QuatRot q = q_in.normalized();
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    const double r00 = 1.0 - 2.0 * (y * y + z * z);
    const double r02 = 2.0 * (x * z + w * y);
    const double r10 = 2.0 * (x * y + w * z);
    const double r11 = 1.0 - 2.0 * (x * x + z * z);
    const double r12 = 2.0 * (y * z - w * x);
    const double r20 = 2.0 * (x * z - w * y);
    const double r22 = 1.0 - 2.0 * (x * x + y * y);

    const double sp = std::clamp(-r12, -1.0, 1.0);
    EulerYXZ e;
    if (std::abs(sp) >= 1.0 - 1e-12) {
        e.pitch_x = sp > 0 ? 90.0 : -90.0;
        e.roll_z = 0.0;
        e.yaw_y = rad2deg(std::atan2(-r20, r00));
    } else {
        e.pitch_x = rad2deg(std::asin(sp));
        e.yaw_y = rad2deg(std::atan2(r02, r22));
        e.roll_z = rad2deg(std::atan2(r10, r11));
    }
    e.yaw_y = wrap_degrees(e.yaw_y);
    e.roll_z = wrap_degrees(e.roll_z);
    // atan2 may return -0.0; keep serialized output free of negative zeros
    if (e.yaw_y == 0.0) e.yaw_y = 0.0;
    if (e.roll_z == 0.0) e.roll_z = 0.0;
    if (e.pitch_x == 0.0) e.pitch_x = 0.0;
    return e;
}

enum class BodyPart { head, body, hand };

inline std::string_view to_string(BodyPart p) noexcept {
    switch (p) {
        case BodyPart::head: return "head";
        case BodyPart::body: return "body";
        case BodyPart::hand: return "hand";
    }
    return "?";
}

inline std::optional<BodyPart> parse_body_part(std::string_view s) noexcept {
    if (s == "head") return BodyPart::head;
    if (s == "body") return BodyPart::body;
    if (s == "hand") return BodyPart::hand;
    return std::nullopt;
}

struct PoseSample {
    Seconds t = 0.0;
    Vec3 pos;
    QuatRot rot;
    BodyPart body_part = BodyPart::head;

    friend bool operator==(const PoseSample&, const PoseSample&) = default;
};

using PoseStream = std::vector<PoseSample>;

struct GazeSample {
    Seconds t = 0.0;  ///< eye-tracker clock until synchronized
    Vec3 origin;
    Vec3 direction;   ///< unit when valid
    bool valid = false;

    friend bool operator==(const GazeSample&, const GazeSample&) = default;
};

using GazeStream = std::vector<GazeSample>;

enum class Initiator { System, User };

enum class Action { launch, start, stop, destroy, exit, collide, end, gaze_in, gaze_out, other };

inline std::string_view to_string(Initiator i) noexcept { return i == Initiator::System ? "System" : "User"; }

inline std::optional<Initiator> parse_initiator(std::string_view s) noexcept {
    if (s == "System" || s == "system") return Initiator::System;
    if (s == "User" || s == "user") return Initiator::User;
    return std::nullopt;
}

/// Canonical token for a known action; empty for Action::other.
inline std::string_view action_token(Action a) noexcept {
    switch (a) {
        case Action::launch: return "launch";
        case Action::start: return "start";
        case Action::stop: return "stop";
        case Action::destroy: return "destroy";
        case Action::exit: return "exit";
        case Action::collide: return "collide";
        case Action::end: return "end";
        case Action::gaze_in: return "gaze in";
        case Action::gaze_out: return "gaze out";
        case Action::other: return "";
    }
    return "";
}

inline std::optional<Action> parse_action(std::string_view s) noexcept {
    std::string k;
    for (char c : s) {
        if (c == '_' || c == '-') c = ' ';
        k.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    for (Action a : {Action::launch, Action::start, Action::stop, Action::destroy, Action::exit, Action::collide,
                     Action::end, Action::gaze_in, Action::gaze_out}) {
        if (k == action_token(a)) return a;
    }
    if (k == "gazein") return Action::gaze_in;
    if (k == "gazeout") return Action::gaze_out;
    return std::nullopt;
}

struct Event {
    Seconds t = 0.0;
    Initiator initiator = Initiator::System;
    Action action = Action::other;
    std::string other_action;  ///< verbatim token when action == other
    std::string recipient;
    std::string info;

    std::string action_text() const { return action == Action::other ? other_action : std::string(action_token(action)); }
    bool is(Initiator i, Action a) const noexcept { return initiator == i && action == a; }

    friend bool operator==(const Event&, const Event&) = default;
};

using EventLog = std::vector<Event>;

class LightLevel {
public:
    constexpr explicit LightLevel(int level) : level_(level) {
        if (level < 1 || level > 6) throw DomainError("light level must be within 1..6, got " + std::to_string(level));
    }
    constexpr int value() const noexcept { return level_; }
    friend constexpr auto operator<=>(const LightLevel&, const LightLevel&) = default;

private:
    int level_;
};

enum class Course { A, B, C, D, E, F, G, H };

inline constexpr std::array<Course, 6> kEvaluationCourses{Course::A, Course::B, Course::C,
                                                          Course::D, Course::E, Course::F};

inline char course_letter(Course c) noexcept { return static_cast<char>('A' + static_cast<int>(c)); }

inline Course parse_course(std::string_view s) {
    if (s.size() == 1 && s[0] >= 'A' && s[0] <= 'H') return static_cast<Course>(s[0] - 'A');
    if (s.size() == 1 && s[0] >= 'a' && s[0] <= 'h') return static_cast<Course>(s[0] - 'a');
    throw DomainError("unknown course '" + std::string(s) + "'");
}

inline bool is_evaluation_course(Course c) noexcept { return c <= Course::F; }

enum class Shape { cube, cylinder, pyramid };
enum class VerticalPos { low, medium, high };
enum class HorizontalPos { on_path, partial, off_path };

inline std::string_view to_string(Shape s) noexcept {
    switch (s) {
        case Shape::cube: return "cube";
        case Shape::cylinder: return "cylinder";
        case Shape::pyramid: return "pyramid";
    }
    return "?";
}
inline std::string_view to_string(VerticalPos v) noexcept {
    switch (v) {
        case VerticalPos::low: return "low";
        case VerticalPos::medium: return "medium";
        case VerticalPos::high: return "high";
    }
    return "?";
}
inline std::string_view to_string(HorizontalPos h) noexcept {
    switch (h) {
        case HorizontalPos::on_path: return "on_path";
        case HorizontalPos::partial: return "partial";
        case HorizontalPos::off_path: return "off_path";
    }
    return "?";
}

namespace detail {
inline std::string lower_squash(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c))) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}
}  // namespace detail

inline std::optional<Shape> parse_shape(std::string_view s) {
    const auto k = detail::lower_squash(s);
    if (k == "cube") return Shape::cube;
    if (k == "cylinder") return Shape::cylinder;
    if (k == "pyramid") return Shape::pyramid;
    return std::nullopt;
}

inline std::optional<VerticalPos> parse_vertical(std::string_view s) {
    const auto k = detail::lower_squash(s);
    if (k == "low") return VerticalPos::low;
    if (k == "medium") return VerticalPos::medium;
    if (k == "high") return VerticalPos::high;
    return std::nullopt;
}

/// Accepts "on_path", "On the path", "partial", "Partially on the path", "off_path", "Off the path".
inline std::optional<HorizontalPos> parse_horizontal(std::string_view s) {
    const auto k = detail::lower_squash(s);
    if (k == "onpath" || k == "onthepath") return HorizontalPos::on_path;
    if (k == "partial" || k == "partiallyonthepath" || k == "partiallyonpath") return HorizontalPos::partial;
    if (k == "offpath" || k == "offthepath") return HorizontalPos::off_path;
    return std::nullopt;
}

inline constexpr std::array<int, 3> kObjectGreyLevels{83, 111, 134};

struct ObjectSpec {
    std::string label;  ///< e.g. "A_cube 0"
    Shape shape = Shape::cube;
    int grey = 83;
    VerticalPos vertical = VerticalPos::low;
    HorizontalPos horizontal = HorizontalPos::on_path;
    Vec3 centroid;
    Vec3 scale{1.0, 1.0, 1.0};
    double ground_clearance = 0.0;

    friend bool operator==(const ObjectSpec&, const ObjectSpec&) = default;
};

struct Point2 {
    double x = 0.0;
    double z = 0.0;
    friend bool operator==(const Point2&, const Point2&) = default;
};

/// Disc on the floor plane.
struct Zone {
    Point2 center;
    double radius = 1.0;

    bool contains(Point2 p) const noexcept {
        return std::hypot(p.x - center.x, p.z - center.z) <= radius;
    }
};

struct CourseGeometry {
    Course course_id = Course::A;
    std::vector<Point2> middle_points;
    std::vector<std::pair<Point2, Point2>> boundary_endpoints;  ///< (left, right) per middle point
    std::vector<ObjectSpec> objects;
    Zone start_zone;
    Zone end_zone;

    const ObjectSpec* find_object(std::string_view label) const noexcept {
        for (const auto& o : objects)
            if (o.label == label) return &o;
        return nullptr;
    }

    double path_length() const noexcept {
        double len = 0.0;
        for (std::size_t i = 1; i < middle_points.size(); ++i)
            len += std::hypot(middle_points[i].x - middle_points[i - 1].x, middle_points[i].z - middle_points[i - 1].z);
        return len;
    }
};

/// Evaluation runs are numbered 1..12; the two training runs are T1 and T2.
struct RunOrder {
    bool training = false;
    int index = 1;

    static RunOrder evaluation(int i) {
        if (i < 1 || i > 12) throw DomainError("evaluation run order must be within 1..12");
        return {false, i};
    }
    static RunOrder train(int i) {
        if (i < 1 || i > 2) throw DomainError("training run must be T1 or T2");
        return {true, i};
    }

    std::string label() const { return (training ? "T" : "") + std::to_string(index); }

    /// Protocol order: T1 < T2 < 1 < ... < 12.
    friend auto operator<=>(const RunOrder& a, const RunOrder& b) noexcept {
        if (a.training != b.training) return b.training <=> a.training;
        return a.index <=> b.index;
    }
    friend bool operator==(const RunOrder&, const RunOrder&) = default;
};

inline RunOrder parse_run_order(std::string_view s) {
    std::string t;
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) t.push_back(c);
    const bool training = !t.empty() && (t[0] == 'T' || t[0] == 't');
    const std::string digits = training ? t.substr(1) : t;
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
        throw DomainError("bad run order '" + std::string(s) + "'");
    const int i = std::stoi(digits);
    return training ? RunOrder::train(i) : RunOrder::evaluation(i);
}

struct RunContext {
    int subject_id = 0;
    RunOrder run_order;
    Course course_id = Course::A;
    LightLevel light_level{4};
    std::string experimenter_notes;

    /// "<subject>-<run>", the notation used by the issue table.
    std::string run_id() const { return std::to_string(subject_id) + "-" + run_order.label(); }

    friend bool operator==(const RunContext&, const RunContext&) = default;
};

}  // namespace vrsom
