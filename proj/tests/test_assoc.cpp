#include <doctest.h>

#include <algorithm>
#include <set>

#include "annofuse/assoc.hpp"
#include "annofuse/rng.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace annofuse;
using testutil::make_set;

namespace {

std::set<oracle::ClusterKey> canonical(const std::vector<Cluster>& clusters) {
    std::set<oracle::ClusterKey> out;
    for (const auto& c : clusters) {
        oracle::ClusterKey key;
        for (const auto& m : c.members) key.emplace_back(m.source, m.point.u, m.point.v);
        std::sort(key.begin(), key.end());
        out.insert(std::move(key));
    }
    return out;
}

std::vector<AnnotationSet> random_instance(Rng& rng, int max_sources, int max_total) {
    const auto n_sources = rng.uniform_int(1, max_sources);
    std::vector<AnnotationSet> sets;
    int total = 0;
    for (int k = 0; k < n_sources; ++k) {
        AnnotationSet set{"im0", std::string(1, char('A' + k)), {}};
        const auto budget = rng.uniform_int(0, std::max(0, max_total - total) / (n_sources - k));
        for (int a = 0; a < budget; ++a)
            set.annotations.push_back(
                testutil::pt(rng.uniform(0.0, 200.0), rng.uniform(0.0, 200.0), set.source));
        total += static_cast<int>(set.annotations.size());
        sets.push_back(std::move(set));
    }
    return sets;
}

}  // namespace

TEST_CASE("pairwise_match: spec examples") {
    const auto A = make_set("M", {{0, 0}});
    const auto B = make_set("S", {{3, 4}});

    auto pairs = pairwise_match(A, B, 6.0);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].distance == doctest::Approx(5.0));

    // strict inequality at the threshold
    CHECK(pairwise_match(A, B, 5.0).empty());
}

TEST_CASE("pairwise_match: unmatched leftovers") {
    const auto A = make_set("M", {{0, 0}, {10, 0}});
    const auto B = make_set("S", {{1, 0}, {9, 0}, {100, 0}});
    const auto pairs = pairwise_match(A, B, 5.0);
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].index_a == 0);
    CHECK(pairs[0].index_b == 0);
    CHECK(pairs[1].index_a == 1);
    CHECK(pairs[1].index_b == 1);
    // (100, 0) stays unmatched
}

TEST_CASE("pairwise_match: errors") {
    CHECK_THROWS_AS(pairwise_match(make_set("M", {{0, 0}}, "im0"),
                                   make_set("S", {{0, 0}}, "im1"), 5.0),
                    InputError);
    CHECK_THROWS_AS(pairwise_match(make_set("M", {{0, 0}}), make_set("M", {{1, 0}}), 5.0),
                    InputError);
}

TEST_CASE("build_clusters: singletons for a single source") {
    const auto clusters = build_clusters({make_set("M", {{0, 0}, {5, 5}, {50, 50}})}, {5.0});
    CHECK(clusters.size() == 3);
    for (const auto& c : clusters) CHECK(c.members.size() == 1);
}

TEST_CASE("build_clusters: three sources merge into one cluster") {
    const auto clusters = build_clusters({make_set("M", {{0, 0}}), make_set("S", {{1, 0}}),
                                          make_set("L", {{0, 1}})},
                                         {5.0});
    REQUIRE(clusters.size() == 1);
    CHECK(clusters[0].members.size() == 3);
}

TEST_CASE("build_clusters: greedy constraint-skipping resolves the close pair") {
    // M(0,0)-L(0.5,0) merges first, then S(1,0)-L(1.5,0)? No: S(1,0)'s nearest
    // L is (0.5,0), so the mutual S-L pair is S(1,0)-L(0.5,0), which joins the
    // M-L cluster; L(1.5,0) stays a singleton.
    const auto clusters = build_clusters({make_set("M", {{0, 0}}), make_set("S", {{1, 0}}),
                                          make_set("L", {{0.5, 0}, {1.5, 0}})},
                                         {5.0});
    const auto got = canonical(clusters);
    const std::set<oracle::ClusterKey> want = {
        {{"L", 0.5, 0.0}, {"M", 0.0, 0.0}, {"S", 1.0, 0.0}},
        {{"L", 1.5, 0.0}},
    };
    CHECK(got == want);
}

TEST_CASE("build_clusters: duplicate source is an error") {
    CHECK_THROWS_AS(build_clusters({make_set("M", {{0, 0}}), make_set("M", {{9, 9}})}, {5.0}),
                    InputError);
    CHECK_THROWS_AS(build_clusters({make_set("M", {{0, 0}})}, {0.0}), InputError);
}

TEST_CASE("build_clusters: partition, source-uniqueness, link distances") {
    Rng rng(99);
    for (int trial = 0; trial < 400; ++trial) {
        const auto sets = random_instance(rng, 4, 30);
        const double threshold = rng.uniform(1.0, 60.0);
        const auto clusters = build_clusters(sets, {threshold});

        std::size_t total = 0;
        std::set<std::pair<std::string, std::pair<double, double>>> seen;
        for (const auto& c : clusters) {
            std::set<std::string> cluster_sources;
            for (const auto& m : c.members) {
                CHECK(cluster_sources.insert(m.source).second);  // <=1 per source
                CHECK(seen.insert({m.source, {m.point.u, m.point.v}}).second);  // disjoint
                ++total;
            }
        }
        std::size_t expected = 0;
        for (const auto& s : sets) expected += s.annotations.size();
        CHECK(total == expected);  // covering
    }
}

TEST_CASE("build_clusters: equals the brute-force oracle on small instances") {
    Rng rng(4242);
    for (int trial = 0; trial < 1200; ++trial) {
        const auto sets = random_instance(rng, 4, 8);
        const double threshold = rng.uniform(1.0, 80.0);
        CHECK(canonical(build_clusters(sets, {threshold})) ==
              oracle::greedy_merge_partition(sets, threshold));
    }
}

TEST_CASE("build_clusters: partition is stable under within-set permutations") {
    Rng rng(31337);
    for (int trial = 0; trial < 150; ++trial) {
        auto sets = random_instance(rng, 3, 12);
        const double threshold = rng.uniform(5.0, 40.0);
        const auto before = canonical(build_clusters(sets, {threshold}));
        for (auto& set : sets) {  // Fisher-Yates
            for (std::size_t i = set.annotations.size(); i > 1; --i)
                std::swap(set.annotations[i - 1],
                          set.annotations[static_cast<std::size_t>(rng.uniform_int(0, i - 1))]);
        }
        CHECK(canonical(build_clusters(sets, {threshold})) == before);
    }
}
