#pragma once

// Rank-based group comparisons (Kruskal-Wallis, Dunn), Pearson correlation and
// Simulator Sickness Questionnaire scoring.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "vrsom/error.hpp"

namespace vrsom::stats {

enum class Factor { light_level, course, run_order };

inline std::string_view to_string(Factor f) noexcept {
    switch (f) {
        case Factor::light_level: return "light_level";
        case Factor::course: return "course";
        case Factor::run_order: return "run_order";
    }
    return "?";
}

inline std::optional<Factor> parse_factor(std::string_view s) noexcept {
    for (auto f : {Factor::light_level, Factor::course, Factor::run_order})
        if (to_string(f) == s) return f;
    return std::nullopt;
}

struct Group {
    std::string label;
    std::vector<double> values;
};

/// Observations split by one factor. Group order is the caller's (it fixes the
/// row/column order of Dunn matrices).
struct GroupedSample {
    Factor factor = Factor::light_level;
    std::vector<Group> groups;

    std::size_t total() const noexcept {
        std::size_t n = 0;
        for (const auto& g : groups) n += g.values.size();
        return n;
    }
    std::size_t non_empty() const noexcept {
        return static_cast<std::size_t>(std::count_if(groups.begin(), groups.end(), [](const Group& g) { return !g.values.empty(); }));
    }
};

/// Average ranks (1-based) of the pooled values, plus the tie term sum(t^3 - t).
struct PooledRanks {
    std::vector<double> ranks;  ///< same order as the input
    double tie_sum = 0.0;
};

inline PooledRanks midranks(const std::vector<double>& pooled) {
    for (double v : pooled)
        if (!std::isfinite(v)) throw DomainError("rank statistics need finite observations");
    const std::size_t n = pooled.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
    PooledRanks out;
    out.ranks.assign(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && pooled[idx[j + 1]] == pooled[idx[i]]) ++j;
        const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) out.ranks[idx[k]] = avg;
        const double t = static_cast<double>(j - i + 1);
        out.tie_sum += t * t * t - t;
        i = j + 1;
    }
    return out;
}

/// Upper tail of the chi-square distribution.
inline double chi_square_sf(double x, double df) {
    if (x <= 0.0) return 1.0;
    return boost::math::gamma_q(df / 2.0, x / 2.0);
}

/// Two-sided p of a standard normal z.
inline double normal_two_sided(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

/// Two-sided p of Student's t with df degrees of freedom.
inline double student_t_two_sided(double t, double df) {
    if (!std::isfinite(t)) return 0.0;
    return boost::math::ibeta(df / 2.0, 0.5, df / (df + t * t));
}

struct KwResult {
    double h_statistic = 0.0;
    int df = 0;
    double p_value = 1.0;
    std::size_t n = 0;
};

/// Kruskal-Wallis H with average ranks for ties and the tie-correction divisor;
/// p from the chi-square upper tail with k - 1 degrees of freedom. Empty groups are ignored.
inline KwResult kruskal_wallis(const GroupedSample& g) {
    std::vector<double> pooled;
    std::vector<std::size_t> owner;
    std::size_t k = 0;
    for (const auto& grp : g.groups) {
        if (grp.values.empty()) continue;
        for (double v : grp.values) {
            pooled.push_back(v);
            owner.push_back(k);
        }
        ++k;
    }
    const std::size_t n = pooled.size();
    if (k < 2) throw DomainError("Kruskal-Wallis needs at least two non-empty groups");
    if (n < 3) throw DomainError("Kruskal-Wallis needs at least three observations");

    const auto pr = midranks(pooled);
    std::vector<double> rank_sum(k, 0.0), count(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        rank_sum[owner[i]] += pr.ranks[i];
        count[owner[i]] += 1.0;
    }
    const double N = static_cast<double>(n);
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += rank_sum[j] * rank_sum[j] / count[j];
    const double h_raw = 12.0 / (N * (N + 1.0)) * s - 3.0 * (N + 1.0);
    const double tie_divisor = 1.0 - pr.tie_sum / (N * N * N - N);

    KwResult r;
    r.n = n;
    r.df = static_cast<int>(k) - 1;
    if (tie_divisor <= 1e-15) {
        r.h_statistic = 0.0;
        r.p_value = 1.0;
        return r;
    }
    r.h_statistic = std::max(0.0, h_raw / tie_divisor);
    r.p_value = std::clamp(chi_square_sf(r.h_statistic, r.df), 0.0, 1.0);
    return r;
}

enum class Adjustment { none, bonferroni, holm };

inline std::string_view to_string(Adjustment a) noexcept {
    switch (a) {
        case Adjustment::none: return "none";
        case Adjustment::bonferroni: return "bonferroni";
        case Adjustment::holm: return "holm";
    }
    return "?";
}

inline std::optional<Adjustment> parse_adjustment(std::string_view s) noexcept {
    for (auto a : {Adjustment::none, Adjustment::bonferroni, Adjustment::holm})
        if (to_string(a) == s) return a;
    return std::nullopt;
}

/// Multiplicity adjustment of a family of p-values.
inline std::vector<double> adjust_p_values(const std::vector<double>& p, Adjustment how) {
    const std::size_t m = p.size();
    std::vector<double> out(p);
    if (how == Adjustment::none || m == 0) return out;
    if (how == Adjustment::bonferroni) {
        for (auto& v : out) v = std::min(1.0, v * static_cast<double>(m));
        return out;
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
    double running = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double v = std::min(1.0, static_cast<double>(m - i) * p[order[i]]);
        running = std::max(running, v);
        out[order[i]] = running;
    }
    return out;
}

struct DunnMatrix {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> z;           ///< z[i][j] = (mean rank i - mean rank j) / se
    std::vector<std::vector<double>> p_unadjusted;
    std::vector<std::vector<double>> p_adjusted;  ///< diagonal 1
    Adjustment adjustment = Adjustment::holm;
    std::vector<std::string> warnings;

    std::size_t index_of(std::string_view label) const {
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == label) return i;
        throw DomainError("no group labelled '" + std::string(label) + "'");
    }
    double p(std::string_view a, std::string_view b) const { return p_adjusted[index_of(a)][index_of(b)]; }
};

/// Dunn's pairwise comparison of mean ranks with the tie-corrected standard error.
/// Groups without observations are dropped (and reported in warnings).
inline DunnMatrix dunn_posthoc(const GroupedSample& g, Adjustment how = Adjustment::holm) {
    DunnMatrix out;
    out.adjustment = how;
    std::vector<const Group*> used;
    for (const auto& grp : g.groups) {
        if (grp.values.empty()) out.warnings.push_back("group '" + grp.label + "' is empty and was excluded");
        else used.push_back(&grp);
    }
    const std::size_t k = used.size();
    if (k < 2) throw DomainError("Dunn test needs at least two non-empty groups");

    std::vector<double> pooled;
    for (const auto* grp : used) pooled.insert(pooled.end(), grp->values.begin(), grp->values.end());
    const auto pr = midranks(pooled);
    const double N = static_cast<double>(pooled.size());

    std::vector<double> mean_rank(k), n(k);
    std::size_t pos = 0;
    for (std::size_t j = 0; j < k; ++j) {
        n[j] = static_cast<double>(used[j]->values.size());
        double s = 0.0;
        for (std::size_t i = 0; i < used[j]->values.size(); ++i) s += pr.ranks[pos++];
        mean_rank[j] = s / n[j];
        out.labels.push_back(used[j]->label);
    }
    const double base_var = N * (N + 1.0) / 12.0 - (N > 1.0 ? pr.tie_sum / (12.0 * (N - 1.0)) : 0.0);

    out.z.assign(k, std::vector<double>(k, 0.0));
    out.p_unadjusted.assign(k, std::vector<double>(k, 1.0));
    out.p_adjusted.assign(k, std::vector<double>(k, 1.0));
    std::vector<double> family;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) {
            const double se = std::sqrt(std::max(0.0, base_var) * (1.0 / n[a] + 1.0 / n[b]));
            const double z = se > 0.0 ? (mean_rank[a] - mean_rank[b]) / se : 0.0;
            const double p = se > 0.0 ? normal_two_sided(z) : 1.0;
            out.z[a][b] = z;
            out.z[b][a] = -z;
            out.p_unadjusted[a][b] = out.p_unadjusted[b][a] = p;
            family.push_back(p);
            pairs.emplace_back(a, b);
        }
    }
    const auto adj = adjust_p_values(family, how);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto [a, b] = pairs[i];
        out.p_adjusted[a][b] = out.p_adjusted[b][a] = adj[i];
    }
    return out;
}

struct PearsonResult {
    double r = 0.0;
    double p = 1.0;
    std::size_t n = 0;
    bool defined = false;  ///< false for n < 3 or zero variance
};

/// Sample correlation with a two-sided p from Student's t on n - 2 degrees of freedom.
inline PearsonResult pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DomainError("pearson: inputs differ in length");
    PearsonResult out;
    out.n = x.size();
    if (out.n < 3) return out;
    const double n = static_cast<double>(out.n);
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < out.n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) return out;
    out.defined = true;
    out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double df = n - 2.0;
    const double one_minus = 1.0 - out.r * out.r;
    if (one_minus <= 0.0) {
        out.p = 0.0;
    } else {
        const double t = out.r * std::sqrt(df / one_minus);
        out.p = std::clamp(student_t_two_sided(t, df), 0.0, 1.0);
    }
    return out;
}

/// "ns", "*" (p < 0.05), "**" (< 0.01), "***" (< 0.001), "****" (< 0.0001).
inline std::string significance_stars(double p) {
    if (p < 0.0001) return "****";
    if (p < 0.001) return "***";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "ns";
}

// ---------------------------------------------------------------------------
// Simulator Sickness Questionnaire

enum class SsqSubscale { nausea, oculomotor, disorientation };

inline std::string_view to_string(SsqSubscale s) noexcept {
    switch (s) {
        case SsqSubscale::nausea: return "nausea";
        case SsqSubscale::oculomotor: return "oculomotor";
        case SsqSubscale::disorientation: return "disorientation";
    }
    return "?";
}

inline constexpr std::size_t kSsqItems = 16;

inline constexpr std::array<std::string_view, kSsqItems> kSsqItemNames{
    "general discomfort", "fatigue",          "headache",           "eye strain",
    "difficulty focusing", "increased salivation", "sweating",      "nausea",
    "difficulty concentrating", "fullness of head", "blurred vision", "dizzy (eyes open)",
    "dizzy (eyes closed)", "vertigo",         "stomach awareness",  "burping"};

/// Subscale membership per item. An item may feed more than one subscale.
using SsqMapping = std::array<std::vector<SsqSubscale>, kSsqItems>;

/// Standard item-to-subscale assignment of the questionnaire (items shared between subscales).
inline SsqMapping kennedy_mapping() {
    using S = SsqSubscale;
    return {{{S::nausea, S::oculomotor},
             {S::oculomotor},
             {S::oculomotor},
             {S::oculomotor},
             {S::oculomotor, S::disorientation},
             {S::nausea},
             {S::nausea},
             {S::nausea, S::disorientation},
             {S::nausea, S::oculomotor},
             {S::disorientation},
             {S::oculomotor, S::disorientation},
             {S::disorientation},
             {S::disorientation},
             {S::disorientation},
             {S::nausea},
             {S::nausea}}};
}

struct SsqResponse {
    std::array<int, kSsqItems> ratings{};  ///< 0 None, 1 Slight, 2 Moderate, 3 Severe
};

struct SsqScore {
    int total = 0;  ///< raw sum, 0..48
    std::map<SsqSubscale, int> per_subscale;
};

inline SsqScore ssq_score(const SsqResponse& resp, const SsqMapping& mapping = kennedy_mapping()) {
    SsqScore s;
    for (auto sub : {SsqSubscale::nausea, SsqSubscale::oculomotor, SsqSubscale::disorientation}) s.per_subscale[sub] = 0;
    for (std::size_t i = 0; i < kSsqItems; ++i) {
        const int r = resp.ratings[i];
        if (r < 0 || r > 3)
            throw DomainError("SSQ item " + std::to_string(i + 1) + " rating " + std::to_string(r) + " outside 0..3");
        s.total += r;
        for (auto sub : mapping[i]) s.per_subscale[sub] += r;
    }
    return s;
}

}  // namespace vrsom::stats
