#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <map>
#include <tuple>

#include "pairrank/exploder.hpp"
#include "test_helpers.hpp"

using namespace pairrank;

namespace {

ItemCatalog abc_catalog(int n = 5) {
    std::vector<Attribute> schema{{"g", {"x"}}};
    std::vector<ItemRecord> items;
    for (int j = 0; j < n; ++j) items.push_back({std::string(1, static_cast<char>('A' + j)), {0}, {}});
    return ItemCatalog(schema, items);
}

bool has_pair(const std::vector<Comparison>& cs, const ItemCatalog& cat, const std::string& w,
              const std::string& l) {
    for (const auto& c : cs)
        if (c.winner == cat.item_index(w) && c.loser == cat.item_index(l)) return true;
    return false;
}

}  // namespace

TEST_CASE("explode emits all cross-tier pairs and nothing within tiers") {
    auto cat = abc_catalog();
    UserIndex users;
    PartialRanking r{"u1", {{"A"}, {"B", "C"}}, RankingSource::explicit_ranking};
    auto cs = explode(r, cat, users);
    REQUIRE(cs.size() == 2);
    CHECK(has_pair(cs, cat, "A", "B"));
    CHECK(has_pair(cs, cat, "A", "C"));
    CHECK_FALSE(has_pair(cs, cat, "B", "C"));
    CHECK_FALSE(has_pair(cs, cat, "C", "B"));
}

TEST_CASE("explode of a complete ranking of three items") {
    auto cat = abc_catalog();
    UserIndex users;
    PartialRanking r{"u1", {{"A"}, {"B"}, {"C"}}, RankingSource::explicit_ranking};
    auto cs = explode(r, cat, users);
    REQUIRE(cs.size() == 3);
    CHECK(has_pair(cs, cat, "A", "B"));
    CHECK(has_pair(cs, cat, "A", "C"));
    CHECK(has_pair(cs, cat, "B", "C"));
}

TEST_CASE("complete ranking of m singleton tiers yields m(m-1)/2 comparisons") {
    for (int m = 2; m <= 8; ++m) {
        auto cat = abc_catalog(m);
        UserIndex users;
        PartialRanking r;
        r.user_id = "u";
        for (int j = 0; j < m; ++j) r.tiers.push_back({cat.item(j).item_id});
        auto cs = explode(r, cat, users);
        CHECK(static_cast<int>(cs.size()) == m * (m - 1) / 2);
        // all transitively consistent: tier order equals index order here
        for (const auto& c : cs) CHECK(c.winner < c.loser);
    }
}

TEST_CASE("explode validates tiers and item ids") {
    auto cat = abc_catalog();
    UserIndex users;
    CHECK_THROWS_AS(explode({"u", {{"A"}}, {}}, cat, users), data_error);
    CHECK_THROWS_AS(explode({"u", {{"A"}, {}}, {}}, cat, users), data_error);
    CHECK_THROWS_AS(explode({"u", {{"A"}, {"A"}}, {}}, cat, users), data_error);
    CHECK_THROWS_WITH(explode({"u", {{"A"}, {"Z"}}, {}}, cat, users),
                      Catch::Matchers::ContainsSubstring("Z"));
}

TEST_CASE("purchases_to_ranking builds a two-tier statement") {
    auto r = purchases_to_ranking({"A"}, {"A", "B", "C"}, "u9");
    REQUIRE(r.tiers.size() == 2);
    CHECK(r.tiers[0] == std::set<std::string>{"A"});
    CHECK(r.tiers[1] == std::set<std::string>{"B", "C"});
    CHECK(r.source == RankingSource::purchase_derived);
}

TEST_CASE("purchases_to_ranking rejects degenerate sides") {
    CHECK_THROWS_AS(purchases_to_ranking({"A", "B"}, {"A", "B"}, "u"), data_error);
    CHECK_THROWS_AS(purchases_to_ranking({}, {"A"}, "u"), data_error);
    CHECK_THROWS_AS(purchases_to_ranking({"Z"}, {"A"}, "u"), data_error);
}

TEST_CASE("p purchased of m yields p(m-p) comparisons") {
    auto cat = abc_catalog(6);
    for (int p = 1; p < 6; ++p) {
        std::set<std::string> purchased, universe;
        for (int j = 0; j < 6; ++j) universe.insert(cat.item(j).item_id);
        for (int j = 0; j < p; ++j) purchased.insert(cat.item(j).item_id);
        UserIndex users;
        auto cs = explode(purchases_to_ranking(purchased, universe, "u"), cat, users);
        CHECK(static_cast<int>(cs.size()) == p * (6 - p));
    }
}

TEST_CASE("dedupe merges duplicate triples and sums weights") {
    ComparisonSet set;
    set.n_users = 1;
    set.n_items = 3;
    set.comparisons = {{0, 0, 1, 1.0}, {0, 0, 1, 1.0}};
    auto res = dedupe(set);
    REQUIRE(res.set.comparisons.size() == 1);
    CHECK(res.set.comparisons[0].weight == 2.0);
    CHECK(res.contradictions == 0);
}

TEST_CASE("dedupe keeps contradictory pairs and counts them") {
    ComparisonSet set;
    set.n_users = 1;
    set.n_items = 3;
    set.comparisons = {{0, 0, 1, 1.0}, {0, 1, 0, 1.0}};
    auto res = dedupe(set);
    CHECK(res.set.comparisons.size() == 2);
    CHECK(res.contradictions == 1);
}

TEST_CASE("dedupe of an empty set is empty") {
    ComparisonSet set;
    set.n_users = 0;
    set.n_items = 0;
    auto res = dedupe(set);
    CHECK(res.set.comparisons.empty());
    CHECK(res.contradictions == 0);
}

TEST_CASE("dedupe weight preservation property") {
    Rng rng(77);
    auto set = test_helpers::random_comparisons(3, 4, 60, rng);
    auto res = dedupe(set);
    // total over all comparisons is preserved
    CHECK(res.set.total_weight() == Catch::Approx(set.total_weight()).epsilon(1e-12));
    // and per distinct triple
    std::map<std::tuple<int, int, int>, double> before, after;
    for (const auto& c : set.comparisons) before[{c.user, c.winner, c.loser}] += c.weight;
    for (const auto& c : res.set.comparisons) after[{c.user, c.winner, c.loser}] += c.weight;
    CHECK(before.size() == after.size());
    for (const auto& [k, w] : before) CHECK(after.at(k) == Catch::Approx(w).epsilon(1e-12));
    // idempotent
    auto again = dedupe(res.set);
    CHECK(again.set.comparisons.size() == res.set.comparisons.size());
}

TEST_CASE("rankings csv and comparisons csv round trip") {
    auto cat = abc_catalog();
    const std::string path = "rankings_rt.csv";
    {
        std::ofstream out(path);
        out << "user_id,item_id,tier,ranking_id\n";
        out << "u1,A,1,r1\nu1,B,2,r1\nu1,C,2,r1\n";
        out << "u1,B,1,r2\nu1,A,2,r2\n";
        out << "u2,C,1,r1\nu2,A,2,r1\n";
    }
    auto rankings = load_rankings_csv(path);
    REQUIRE(rankings.size() == 3);
    UserIndex users;
    auto set = explode_all(rankings, cat, users);
    CHECK(set.n_users == 2);
    CHECK(set.comparisons.size() == 4);

    save_comparisons_csv(set, users, cat, "comps_rt.csv");
    UserIndex users2;
    auto set2 = load_comparisons_csv("comps_rt.csv", cat, users2);
    REQUIRE(set2.comparisons.size() == set.comparisons.size());
    for (std::size_t i = 0; i < set.comparisons.size(); ++i) {
        CHECK(set2.comparisons[i].winner == set.comparisons[i].winner);
        CHECK(set2.comparisons[i].loser == set.comparisons[i].loser);
        CHECK(set2.comparisons[i].weight == set.comparisons[i].weight);
    }
    std::remove(path.c_str());
    std::remove("comps_rt.csv");
}
