#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "vrsom/stats.hpp"

using namespace vrsom;
using namespace vrsom::stats;

namespace {

GroupedSample sample(const std::vector<std::vector<double>>& groups) {
    GroupedSample g;
    for (std::size_t i = 0; i < groups.size(); ++i) g.groups.push_back({"g" + std::to_string(i), groups[i]});
    return g;
}

std::vector<std::vector<double>> random_instance(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> k_dist(2, 4), n_dist(2, 4), v_dist(0, 5);
    const int k = k_dist(rng);
    std::vector<std::vector<double>> out(static_cast<std::size_t>(k));
    for (auto& g : out) {
        const int n = n_dist(rng);
        for (int i = 0; i < n; ++i) g.push_back(v_dist(rng));  // small range forces ties
    }
    return out;
}

}  // namespace

TEST(Ranks, MidranksAndTieSum) {
    const auto r = midranks({3, 1, 3, 2, 3});
    EXPECT_EQ(r.ranks, (std::vector<double>{4, 1, 4, 2, 4}));
    EXPECT_EQ(r.tie_sum, 24.0);
    EXPECT_THROW(midranks({1, std::nan("")}), DomainError);
}

TEST(KruskalWallis, MatchesOracleOnRandomInstances) {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 200; ++i) {
        const auto groups = random_instance(rng);
        const auto g = sample(groups);
        const double expected = oracle::kw_h(groups);
        if (oracle::tie_term([&] {
                std::vector<double> p;
                for (const auto& x : groups) p.insert(p.end(), x.begin(), x.end());
                return p;
            }()) == std::pow(static_cast<double>(g.total()), 3) - static_cast<double>(g.total()))
            continue;  // all values equal
        const auto r = kruskal_wallis(g);
        EXPECT_NEAR(r.h_statistic, std::max(0.0, expected), 1e-9);
        EXPECT_EQ(r.df, static_cast<int>(groups.size()) - 1);
    }
}

TEST(KruskalWallis, KnownValuesAndPValue) {
    const auto r = kruskal_wallis(sample({{1, 2, 3}, {4, 5, 6}}));
    EXPECT_NEAR(r.h_statistic, 27.0 / 7.0, 1e-12);
    EXPECT_NEAR(r.p_value, 0.049534613435626706, 1e-10);
    // df = 2: survival is exp(-H/2)
    const auto r3 = kruskal_wallis(sample({{1, 2, 7}, {3, 9, 10}, {4, 5, 6, 8}}));
    EXPECT_NEAR(r3.p_value, std::exp(-r3.h_statistic / 2), 1e-12);
}

TEST(KruskalWallis, DegenerateInputs) {
    const auto same = kruskal_wallis(sample({{2, 2}, {2, 2, 2}}));
    EXPECT_EQ(same.h_statistic, 0.0);
    EXPECT_EQ(same.p_value, 1.0);
    EXPECT_THROW(kruskal_wallis(sample({{1, 2, 3}, {}})), DomainError);
    EXPECT_THROW(kruskal_wallis(sample({{1}, {2}})), DomainError);
    const auto with_empty = kruskal_wallis(sample({{1, 2}, {}, {3, 4}}));
    EXPECT_EQ(with_empty.df, 1);
}

TEST(Dunn, MatchesOracleOnRandomInstances) {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 200; ++i) {
        const auto groups = random_instance(rng);
        const auto m = dunn_posthoc(sample(groups), Adjustment::none);
        for (std::size_t a = 0; a < groups.size(); ++a)
            for (std::size_t b = a + 1; b < groups.size(); ++b) {
                const double z = oracle::dunn_z(groups, a, b);
                if (!std::isfinite(z)) continue;
                EXPECT_NEAR(m.z[a][b], z, 1e-9);
                EXPECT_NEAR(m.z[b][a], -z, 1e-9);
                EXPECT_NEAR(m.p_unadjusted[a][b], std::erfc(std::abs(z) / std::sqrt(2.0)), 1e-12);
            }
    }
}

TEST(Dunn, AdjustmentsOrdered) {
    const auto g = sample({{1, 2, 3, 4}, {5, 6, 7, 8}, {9, 10, 11, 12}, {2.5, 6.5, 9.5, 3.5}});
    const auto none = dunn_posthoc(g, Adjustment::none);
    const auto holm = dunn_posthoc(g, Adjustment::holm);
    const auto bonf = dunn_posthoc(g, Adjustment::bonferroni);
    for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = 0; b < 4; ++b) {
            EXPECT_GE(holm.p_adjusted[a][b], none.p_adjusted[a][b]);
            EXPECT_GE(bonf.p_adjusted[a][b], holm.p_adjusted[a][b]);
            EXPECT_LE(bonf.p_adjusted[a][b], 1.0);
        }
    EXPECT_EQ(holm.p("g0", "g0"), 1.0);
    EXPECT_THROW(holm.p("g0", "nope"), DomainError);
    EXPECT_LT(holm.p("g0", "g2"), 0.05);
}

TEST(Dunn, HolmStepDown) {
    const auto adj = adjust_p_values({0.01, 0.04, 0.03, 0.5}, Adjustment::holm);
    EXPECT_NEAR(adj[0], 0.04, 1e-15);
    EXPECT_NEAR(adj[2], 0.09, 1e-15);
    EXPECT_NEAR(adj[1], 0.09, 1e-15);  // monotone after sorting
    EXPECT_NEAR(adj[3], 0.5, 1e-15);
}

TEST(Dunn, EmptyGroupsDroppedWithWarning) {
    const auto m = dunn_posthoc(sample({{1, 2}, {}, {3, 4}}));
    EXPECT_EQ(m.labels, (std::vector<std::string>{"g0", "g2"}));
    EXPECT_EQ(m.warnings.size(), 1u);
}

TEST(Pearson, KnownValues) {
    const auto r = pearson({1, 2, 3, 4, 5}, {2, 4, 5, 4, 5});
    EXPECT_TRUE(r.defined);
    EXPECT_NEAR(r.r, 0.7745966692414834, 1e-12);
    EXPECT_NEAR(r.p, 0.12402706265755456, 1e-9);
    const auto perfect = pearson({1, 2, 3}, {2, 4, 6});
    EXPECT_EQ(perfect.r, 1.0);
    EXPECT_EQ(perfect.p, 0.0);
    EXPECT_FALSE(pearson({1, 1, 1}, {1, 2, 3}).defined);
    EXPECT_FALSE(pearson({1, 2}, {1, 2}).defined);
    EXPECT_THROW(pearson({1, 2, 3}, {1, 2}), DomainError);
}

TEST(Stars, Thresholds) {
    EXPECT_EQ(significance_stars(0.2), "ns");
    EXPECT_EQ(significance_stars(0.049), "*");
    EXPECT_EQ(significance_stars(0.005), "**");
    EXPECT_EQ(significance_stars(0.0005), "***");
    EXPECT_EQ(significance_stars(0.00001), "****");
}

TEST(Ssq, RangeAndSubscales) {
    SsqResponse none;
    EXPECT_EQ(ssq_score(none).total, 0);
    SsqResponse all;
    all.ratings.fill(3);
    const auto s = ssq_score(all);
    EXPECT_EQ(s.total, 48);
    // every subscale has seven items, some shared
    for (auto sub : {SsqSubscale::nausea, SsqSubscale::oculomotor, SsqSubscale::disorientation})
        EXPECT_EQ(s.per_subscale.at(sub), 21);
    SsqResponse bad;
    bad.ratings[3] = 4;
    EXPECT_THROW(ssq_score(bad), DomainError);
}
