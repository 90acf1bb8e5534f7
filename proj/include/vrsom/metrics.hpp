#pragma once

// Per-run performance metrics extracted from the interaction log, and the
// time/accuracy scores of the physical multi-luminance mobility test (kept as
// a comparator; they are not the primary outcome of the seated test).

#include <algorithm>
#include <set>
#include <string>

#include "vrsom/core_model.hpp"
#include "vrsom/error.hpp"

namespace vrsom::metrics {

struct RunMetrics {
    double time_duration_s = 0.0;           ///< System end - first User start
    double time_before_first_step_s = 0.0;  ///< first User start - System launch
    int n_off_path = 0;
    int n_missed_objects = 0;
    int n_collisions = 0;
    int n_stops = 0;

    friend bool operator==(const RunMetrics&, const RunMetrics&) = default;
};

/// The log lacks an event the metrics are defined from; the run cannot be scored.
class MetricsError : public DomainError {
public:
    using DomainError::DomainError;
};

inline RunMetrics synthesize_run_metrics(const EventLog& events, int n_objects = kObjectsPerCourse) {
    if (n_objects <= 0) throw DomainError("n_objects must be positive");
    const Event* launch = nullptr;
    const Event* first_start = nullptr;
    const Event* end = nullptr;
    std::set<std::string> destroyed;
    RunMetrics m;
    for (const auto& e : events) {
        if (e.is(Initiator::System, Action::launch) && !launch) launch = &e;
        if (e.is(Initiator::System, Action::end) && !end) end = &e;
        if (e.is(Initiator::User, Action::start) && (!first_start || e.t < first_start->t)) first_start = &e;
        if (e.initiator != Initiator::User) continue;
        switch (e.action) {
            case Action::destroy: destroyed.insert(e.recipient); break;
            case Action::exit: ++m.n_off_path; break;
            case Action::collide: ++m.n_collisions; break;
            case Action::stop: ++m.n_stops; break;
            default: break;
        }
    }
    if (!launch) throw MetricsError("no System launch event");
    if (!first_start) throw MetricsError("no User start event");
    if (!end) throw MetricsError("no System end event");
    m.time_duration_s = end->t - first_start->t;
    m.time_before_first_step_s = first_start->t - launch->t;
    if (m.time_duration_s < 0.0) throw MetricsError("System end precedes the first User start");
    if (m.time_before_first_step_s < 0.0) throw MetricsError("first User start precedes System launch");
    m.n_missed_objects = n_objects - std::min<int>(n_objects, static_cast<int>(destroyed.size()));
    return m;
}

/// Seconds added per error. Collisions and off-path exits use `per_error_s`;
/// redirections use `redirection_s`.
struct PenaltyPolicy {
    double per_error_s = 15.0;
    double redirection_s = 30.0;
};

inline double time_score(const RunMetrics& m, const PenaltyPolicy& policy = {}, int n_redirections = 0) {
    if (policy.per_error_s < 0.0 || policy.redirection_s < 0.0) throw DomainError("penalties must be non-negative");
    if (n_redirections < 0) throw DomainError("redirection count must be non-negative");
    const double penalties = policy.per_error_s * (m.n_collisions + m.n_off_path) + policy.redirection_s * n_redirections;
    return m.time_duration_s + penalties;
}

inline double accuracy_score(int n_penalties, int n_obstacles) {
    if (n_obstacles <= 0) throw DomainError("accuracy_score: no obstacles");
    if (n_penalties < 0 || n_penalties > n_obstacles) throw DomainError("accuracy_score: penalties outside [0, obstacles]");
    return static_cast<double>(n_penalties) / static_cast<double>(n_obstacles);
}

struct ScoreReport {
    double time_score_s = 0.0;
    double accuracy_score = 0.0;
    PenaltyPolicy policy;
    bool comparator_only = true;
};

/// Scores a run with missed objects as the penalized obstacles.
inline ScoreReport score_run(const RunMetrics& m, const PenaltyPolicy& policy = {}, int n_obstacles = kObjectsPerCourse) {
    return {time_score(m, policy), accuracy_score(m.n_missed_objects, n_obstacles), policy, true};
}

}  // namespace vrsom::metrics
