#pragma once

// Static configuration of the test protocol: the nine objects of each
// evaluation course and the registry of known per-run data issues.

#include <algorithm>
#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "vrsom/core_model.hpp"

namespace vrsom {

struct ObjectFeatures {
    std::string_view label;
    int grey;
    VerticalPos vertical;
    HorizontalPos horizontal;
};

namespace detail {
using V = VerticalPos;
using H = HorizontalPos;
// Rows are listed in course order along the path.
inline constexpr std::array<ObjectFeatures, 54> kObjectFeatureRows{{
    {"A_cylinder 1", 134, V::low, H::on_path},     {"A_pyramid 2", 83, V::low, H::partial},
    {"A_cube 1", 83, V::medium, H::on_path},       {"A_cube 2", 83, V::high, H::partial},
    {"A_cylinder 2", 134, V::medium, H::partial},  {"A_pyramid 0", 111, V::medium, H::off_path},
    {"A_cylinder 0", 83, V::high, H::off_path},    {"A_pyramid 1", 111, V::high, H::on_path},
    {"A_cube 0", 83, V::low, H::off_path},

    {"B_cylinder 2", 134, V::medium, H::partial},  {"B_pyramid 1", 83, V::high, H::on_path},
    {"B_cube 0", 134, V::low, H::off_path},        {"B_cube 2", 83, V::high, H::partial},
    {"B_pyramid 2", 134, V::low, H::partial},      {"B_cylinder 0", 83, V::high, H::off_path},
    {"B_cylinder 1", 111, V::low, H::on_path},     {"B_cube 1", 111, V::medium, H::on_path},
    {"B_pyramid 0", 134, V::medium, H::off_path},

    {"C_cylinder 0", 83, V::high, H::off_path},    {"C_pyramid 0", 134, V::medium, H::off_path},
    {"C_pyramid 2", 134, V::low, H::partial},      {"C_cylinder 2", 134, V::medium, H::partial},
    {"C_pyramid 1", 134, V::high, H::on_path},     {"C_cube 2", 111, V::high, H::partial},
    {"C_cube 1", 111, V::medium, H::on_path},      {"C_cube 0", 83, V::low, H::off_path},
    {"C_cylinder 1", 111, V::low, H::on_path},

    {"D_pyramid 1", 134, V::high, H::on_path},     {"D_pyramid 2", 83, V::low, H::partial},
    {"D_cube 0", 134, V::low, H::off_path},        {"D_pyramid 0", 134, V::medium, H::off_path},
    {"D_cylinder 1", 134, V::low, H::on_path},     {"D_cube 2", 83, V::high, H::partial},
    {"D_cylinder 2", 111, V::medium, H::partial},  {"D_cube 1", 111, V::medium, H::on_path},
    {"D_cylinder 0", 83, V::high, H::off_path},

    {"E_cube 1", 134, V::medium, H::on_path},      {"E_cylinder 2", 134, V::medium, H::partial},
    {"E_pyramid 0", 134, V::medium, H::off_path},  {"E_cube 2", 111, V::high, H::partial},
    {"E_pyramid 2", 83, V::low, H::partial},       {"E_cube 0", 83, V::low, H::off_path},
    {"E_cylinder 0", 83, V::high, H::off_path},    {"E_cylinder 1", 111, V::low, H::on_path},
    {"E_pyramid 1", 111, V::high, H::on_path},

    {"F_cube 0", 83, V::low, H::off_path},         {"F_cylinder 1", 111, V::low, H::on_path},
    {"F_cylinder 0", 83, V::high, H::off_path},    {"F_cube 1", 134, V::medium, H::on_path},
    {"F_pyramid 1", 134, V::high, H::on_path},     {"F_pyramid 2", 83, V::low, H::partial},
    {"F_cube 2", 111, V::high, H::partial},        {"F_cylinder 2", 134, V::medium, H::partial},
    {"F_pyramid 0", 134, V::medium, H::off_path},
}};
}  // namespace detail

inline constexpr const std::array<ObjectFeatures, 54>& object_feature_table() noexcept {
    return detail::kObjectFeatureRows;
}

/// The nine rows for one evaluation course, in path order. Empty for training courses.
inline std::vector<ObjectFeatures> course_object_features(Course c) {
    std::vector<ObjectFeatures> out;
    for (const auto& row : detail::kObjectFeatureRows)
        if (row.label.front() == course_letter(c)) out.push_back(row);
    return out;
}

inline const ObjectFeatures* find_object_features(std::string_view label) noexcept {
    for (const auto& row : detail::kObjectFeatureRows)
        if (row.label == label) return &row;
    return nullptr;
}

/// Splits "A_cube 0" into its shape and index.
inline std::pair<Shape, int> parse_object_label(std::string_view label) {
    const auto us = label.find('_');
    const auto sp = label.rfind(' ');
    if (us == std::string_view::npos || sp == std::string_view::npos || sp < us || sp + 2 != label.size() ||
        label[sp + 1] < '0' || label[sp + 1] > '2')
        throw DomainError("malformed object label '" + std::string(label) + "'");
    const auto shape = parse_shape(label.substr(us + 1, sp - us - 1));
    if (!shape) throw DomainError("unknown shape in object label '" + std::string(label) + "'");
    return {*shape, label[sp + 1] - '0'};
}

// ---------------------------------------------------------------------------

enum class IssueKind { missing_system_end, destroy_after_end, subject_tolerance, technical, eye_invalid };

inline std::string_view to_string(IssueKind k) noexcept {
    switch (k) {
        case IssueKind::missing_system_end: return "missing_system_end";
        case IssueKind::destroy_after_end: return "destroy_after_end";
        case IssueKind::subject_tolerance: return "subject_tolerance";
        case IssueKind::technical: return "technical";
        case IssueKind::eye_invalid: return "eye_invalid";
    }
    return "?";
}

inline std::optional<IssueKind> parse_issue_kind(std::string_view s) noexcept {
    for (auto k : {IssueKind::missing_system_end, IssueKind::destroy_after_end, IssueKind::subject_tolerance,
                   IssueKind::technical, IssueKind::eye_invalid})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

struct Issue {
    int subject_id = 0;
    RunOrder run_order;
    IssueKind kind = IssueKind::technical;
    bool cascade = false;  ///< applies to this run and every later run of the subject

    bool applies_to(int subject, const RunOrder& order) const noexcept {
        if (subject != subject_id) return false;
        return cascade ? !(order < run_order) : order == run_order;
    }

    friend bool operator==(const Issue&, const Issue&) = default;
};

class IssueTable {
public:
    IssueTable() = default;
    explicit IssueTable(std::vector<Issue> issues) : issues_(std::move(issues)) {}

    const std::vector<Issue>& entries() const noexcept { return issues_; }
    bool empty() const noexcept { return issues_.empty(); }

    void append(const IssueTable& other) { issues_.insert(issues_.end(), other.issues_.begin(), other.issues_.end()); }

    std::vector<Issue> matching(int subject, const RunOrder& order) const {
        std::vector<Issue> out;
        for (const auto& i : issues_)
            if (i.applies_to(subject, order)) out.push_back(i);
        return out;
    }

    bool has(int subject, const RunOrder& order, IssueKind kind) const {
        return std::any_of(issues_.begin(), issues_.end(),
                           [&](const Issue& i) { return i.kind == kind && i.applies_to(subject, order); });
    }

    /// Reason string when the run must be left out of the analyses, empty otherwise.
    std::string exclusion_reason(int subject, const RunOrder& order) const {
        for (const auto& i : issues_) {
            if ((i.kind == IssueKind::subject_tolerance || i.kind == IssueKind::technical) && i.applies_to(subject, order))
                return std::string(to_string(i.kind)) + " (" + std::to_string(i.subject_id) + "-" + i.run_order.label() +
                       (i.cascade ? "*" : "") + ")";
        }
        return {};
    }

private:
    std::vector<Issue> issues_;
};

/// Known data issues of the published healthy-subject dataset.
inline const IssueTable& published_issue_table() {
    static const IssueTable table = [] {
        std::vector<Issue> v;
        auto add = [&](int s, int r, IssueKind k, bool cascade = false) {
            v.push_back({s, RunOrder::evaluation(r), k, cascade});
        };
        for (int r : {4, 6, 7, 8, 9, 10, 11}) add(13, r, IssueKind::missing_system_end);
        add(18, 10, IssueKind::missing_system_end);
        add(27, 7, IssueKind::missing_system_end);
        add(28, 2, IssueKind::missing_system_end);
        add(30, 1, IssueKind::missing_system_end);
        add(11, 10, IssueKind::destroy_after_end);
        add(26, 2, IssueKind::destroy_after_end);
        add(6, 9, IssueKind::subject_tolerance, true);
        add(8, 9, IssueKind::subject_tolerance, true);
        add(23, 3, IssueKind::subject_tolerance, true);
        add(24, 8, IssueKind::subject_tolerance, true);
        add(17, 4, IssueKind::technical);
        add(34, 5, IssueKind::technical);
        add(36, 1, IssueKind::eye_invalid, true);
        return IssueTable(std::move(v));
    }();
    return table;
}

}  // namespace vrsom
