#include <doctest.h>

#include <random>
#include <sstream>

#include "hierfed/errors.hpp"
#include "hierfed/metrics/metrics.hpp"

using namespace hierfed;
using namespace hierfed::metrics;

namespace {

double brute_force_auc(const std::vector<double>& s, const std::vector<int>& y) {
    double wins = 0.0;
    long pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (y[i] != 1) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j] != 0) continue;
            ++pairs;
            if (s[i] > s[j]) wins += 1.0;
            else if (s[i] == s[j]) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

GroupKey key(int c, int x) { return {c, Demographic::Gender, x}; }

}  // namespace

TEST_CASE("auc closed forms") {
    const std::vector<double> s = {0.9, 0.8, 0.3, 0.2};
    const std::vector<int> y = {1, 1, 0, 0};
    CHECK(auc(s, y) == 1.0);
    const std::vector<int> flipped = {0, 0, 1, 1};
    CHECK(auc(s, flipped) == 0.0);
    const std::vector<double> flat(6, 0.4);
    CHECK(auc(flat, std::vector<int>{1, 0, 1, 0, 0, 1}) == 0.5);
    CHECK_FALSE(auc(s, std::vector<int>{1, 1, 1, 1}).has_value());
    CHECK_FALSE(auc(std::vector<double>{}, std::vector<int>{}).has_value());
    CHECK_THROWS_AS(auc(s, std::vector<int>{1, 0}), ShapeError);
}

TEST_CASE("auc agrees with pairwise brute force") {
    std::mt19937_64 rng(17);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 49);
        std::vector<double> s(static_cast<std::size_t>(n));
        std::vector<int> y(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            // Coarse grid injects ties.
            s[static_cast<std::size_t>(i)] = static_cast<double>(rng() % 7) / 7.0;
            y[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 2);
        }
        y[0] = 1;
        y[1] = 0;
        const auto a = auc(s, y);
        REQUIRE(a.has_value());
        CHECK(*a == brute_force_auc(s, y));
        ++checked;
    }
    CHECK(checked == 200);
}

TEST_CASE("auc invariances") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> s(40), t(40);
        std::vector<int> y(40), r(40);
        for (int i = 0; i < 40; ++i) {
            s[i] = u(rng);
            t[i] = std::exp(3.0 * s[i]) - 7.0;  // strictly increasing transform
            y[i] = i % 3 == 0;
            r[i] = 1 - y[i];
        }
        CHECK(*auc(s, y) == doctest::Approx(*auc(t, y)).epsilon(1e-15));
        CHECK(*auc(s, r) == doctest::Approx(1.0 - *auc(s, y)).epsilon(1e-14));
    }
}

TEST_CASE("summarize") {
    RunAucs a = {{key(0, 0), 0.6}, {key(0, 1), 0.7}};
    RunAucs b = {{key(0, 0), 0.8}, {key(0, 1), 0.7}};
    std::vector<RunAucs> runs = {a, b};
    auto s = summarize(runs);
    CHECK(s.groups.at(key(0, 0)).mean == doctest::Approx(0.7));
    CHECK(s.groups.at(key(0, 0)).std == doctest::Approx(0.1));
    CHECK(s.groups.at(key(0, 1)).std == 0.0);
    CHECK(s.overall_mean == doctest::Approx(0.7));
    CHECK(s.overall_std == doctest::Approx(0.0).epsilon(1e-12));

    std::vector<RunAucs> same = {a, a, a};
    for (const auto& [_, g] : summarize(same).groups) CHECK(g.std == 0.0);

    std::vector<RunAucs> rev = {b, a};
    const auto s2 = summarize(rev);
    for (const auto& [k, g] : s.groups) {
        CHECK(s2.groups.at(k).mean == doctest::Approx(g.mean).epsilon(1e-15));
        CHECK(s2.groups.at(k).std == doctest::Approx(g.std).epsilon(1e-15));
    }

    RunAucs c = {{key(0, 0), std::nullopt}};
    std::vector<RunAucs> partial = {a, c};
    const auto s3 = summarize(partial);
    CHECK(s3.groups.at(key(0, 0)).n_runs == 1);
    CHECK(s3.groups.at(key(0, 0)).incomplete);
    CHECK(s3.groups.at(key(0, 1)).incomplete);
    CHECK(s3.groups.at(key(0, 0)).mean == 0.6);

    CHECK_THROWS_AS(summarize(std::vector<RunAucs>{}), DomainError);
}

TEST_CASE("summary export") {
    RunAucs a = {{key(0, 0), 0.6}, {key(1, kSubgroupUnspecified), std::nullopt}};
    std::vector<RunAucs> runs = {a};
    const auto s = summarize(runs);
    SummaryContext ctx{{"A", "B"}, "kt", "sc2-P-AT-B"};
    std::ostringstream out;
    write_summary_csv(s, ctx, out);
    CHECK(out.str() ==
          "course,demographic,subgroup,task,strategy,mean_auc,std_auc,n_runs\n"
          "A,gender,M,kt,sc2-P-AT-B,0.6,0,1\n"
          "B,gender,Unspecified,kt,sc2-P-AT-B,,,0\n");
    const auto j = summary_to_json(s, ctx);
    CHECK(j["groups"].size() == 2);
    CHECK(j["groups"][1]["mean_auc"].is_null());
}

TEST_CASE("activity heatmap") {
    using data::EventKind;
    std::vector<data::StudentRecord> st;
    std::vector<data::EventRecord> ev;
    for (int i = 0; i < 4; ++i) {
        const std::string id = "u" + std::to_string(i);
        st.push_back({id, "A", std::nullopt, std::nullopt, std::nullopt, 0});
        const std::string v = i < 2 ? "va" : "vb";
        for (int t = 0; t < 4; ++t) {
            ev.push_back({id, "A", EventKind::Video, v, std::nullopt, std::nullopt, t});
        }
    }
    const auto ds = data::assemble(ev, st);
    const std::vector<int> a = {0, 1}, b = {2, 3};
    const auto same = activity_heatmap(ds, a, a, 4);
    CHECK(same.values.isZero(0.0));
    const auto diff = activity_heatmap(ds, a, b, 4);
    CHECK(diff.rows.size() == 2 + 3);
    CHECK(diff.values.maxCoeff() == 1.0);
    CHECK(diff.values.minCoeff() >= 0.0);
    CHECK(diff.values.row(0).sum() == 4.0);
    CHECK(diff.values.bottomRows(3).isZero(0.0));
    CHECK_THROWS_AS(activity_heatmap(ds, a, std::vector<int>{}, 4), DomainError);

    std::ostringstream out;
    write_heatmap_csv(diff, out);
    CHECK(out.str().rfind("activity,bin_0,bin_1,bin_2,bin_3\nva,1,1,1,1\n", 0) == 0);
}
