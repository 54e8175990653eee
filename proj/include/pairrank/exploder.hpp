#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pairrank/catalog.hpp"
#include "pairrank/common.hpp"
#include "pairrank/csv.hpp"

namespace pairrank {

enum class RankingSource { explicit_ranking, purchase_derived };

/// A tiered preference statement: every item in an earlier tier is strictly
/// preferred to every item in a later tier. Items within a tier are tied
/// (uninformative for the pairwise model).
struct PartialRanking {
    std::string user_id;
    std::vector<std::set<std::string>> tiers;
    RankingSource source = RankingSource::explicit_ranking;

    void validate() const {
        if (tiers.size() < 2) throw data_error("ranking for user '" + user_id + "' has fewer than 2 tiers");
        std::set<std::string> seen;
        for (const auto& tier : tiers) {
            if (tier.empty()) throw data_error("ranking for user '" + user_id + "' has an empty tier");
            for (const auto& id : tier)
                if (!seen.insert(id).second)
                    throw data_error("ranking for user '" + user_id + "' repeats item '" + id + "'");
        }
    }
};

struct Comparison {
    int user;
    int winner;
    int loser;
    double weight = 1.0;
};

struct ComparisonSet {
    std::vector<Comparison> comparisons;
    int n_users = 0;
    int n_items = 0;

    void validate() const {
        for (const auto& c : comparisons) {
            if (c.user < 0 || c.user >= n_users || c.winner < 0 || c.winner >= n_items ||
                c.loser < 0 || c.loser >= n_items)
                throw data_error("comparison set: index out of bounds");
            if (c.winner == c.loser) throw data_error("comparison set: winner == loser");
            if (!(c.weight > 0.0) || !std::isfinite(c.weight))
                throw data_error("comparison set: weight must be positive and finite");
        }
    }

    double total_weight() const {
        double s = 0.0;
        for (const auto& c : comparisons) s += c.weight;
        return s;
    }
};

/// Emits one comparison per cross-tier ordered pair (winner tier strictly
/// earlier than loser tier). Within-tier pairs are never emitted. Output
/// order is deterministic: tier pair order, then item_id order.
inline std::vector<Comparison> explode(const PartialRanking& ranking, const ItemCatalog& catalog,
                                       UserIndex& users) {
    ranking.validate();
    for (const auto& tier : ranking.tiers)
        for (const auto& id : tier)
            if (!catalog.has_item(id))
                throw data_error("ranking for user '" + ranking.user_id + "' references unknown item '" +
                                 id + "'");
    const int u = users.add_or_get(ranking.user_id);
    std::vector<Comparison> out;
    for (std::size_t wt = 0; wt + 1 < ranking.tiers.size(); ++wt) {
        for (std::size_t lt = wt + 1; lt < ranking.tiers.size(); ++lt) {
            for (const auto& w : ranking.tiers[wt]) {
                const int wi = catalog.item_index(w);
                for (const auto& l : ranking.tiers[lt])
                    out.push_back({u, wi, catalog.item_index(l), 1.0});
            }
        }
    }
    return out;
}

/// Purchase-derived two-tier ranking: bought above not-bought.
inline PartialRanking purchases_to_ranking(const std::set<std::string>& purchased,
                                           const std::set<std::string>& universe,
                                           const std::string& user_id) {
    if (purchased.empty())
        throw data_error("user '" + user_id + "': no purchases, ranking carries no information");
    std::set<std::string> rest;
    for (const auto& id : universe)
        if (!purchased.count(id)) rest.insert(id);
    if (rest.empty())
        throw data_error("user '" + user_id + "': purchased the whole universe, ranking carries no information");
    for (const auto& id : purchased)
        if (!universe.count(id))
            throw data_error("user '" + user_id + "': purchased item '" + id + "' not in universe");
    PartialRanking r;
    r.user_id = user_id;
    r.tiers = {purchased, rest};
    r.source = RankingSource::purchase_derived;
    return r;
}

inline ComparisonSet explode_all(const std::vector<PartialRanking>& rankings,
                                 const ItemCatalog& catalog, UserIndex& users) {
    ComparisonSet set;
    for (const auto& r : rankings) {
        auto cs = explode(r, catalog, users);
        set.comparisons.insert(set.comparisons.end(), cs.begin(), cs.end());
    }
    set.n_users = users.size();
    set.n_items = catalog.n_items();
    return set;
}

struct DedupeResult {
    ComparisonSet set;
    // number of user-item pairs for which both (w,l) and (l,w) are present;
    // contradictory pairs are kept, they are distinct evidence
    std::size_t contradictions = 0;
};

/// Merges duplicate (user, winner, loser) triples, summing their weights.
/// Output keeps the first-occurrence order of each distinct triple.
inline DedupeResult dedupe(const ComparisonSet& set) {
    DedupeResult res;
    res.set.n_users = set.n_users;
    res.set.n_items = set.n_items;
    std::map<std::tuple<int, int, int>, std::size_t> slot;
    for (const auto& c : set.comparisons) {
        const auto key = std::make_tuple(c.user, c.winner, c.loser);
        auto it = slot.find(key);
        if (it == slot.end()) {
            slot.emplace(key, res.set.comparisons.size());
            res.set.comparisons.push_back(c);
        } else {
            res.set.comparisons[it->second].weight += c.weight;
        }
    }
    for (const auto& [key, idx] : slot) {
        const auto& [u, w, l] = key;
        if (w < l && slot.count(std::make_tuple(u, l, w))) ++res.contradictions;
    }
    return res;
}

inline void save_comparisons_csv(const ComparisonSet& set, const UserIndex& users,
                                 const ItemCatalog& catalog, const std::string& path) {
    CsvWriter w(path);
    w.row({"user_id", "winner_id", "loser_id", "weight"});
    for (const auto& c : set.comparisons)
        w.row({users.ids[static_cast<std::size_t>(c.user)],
               catalog.item(c.winner).item_id,
               catalog.item(c.loser).item_id,
               format_double(c.weight)});
}

inline ComparisonSet load_comparisons_csv(const std::string& path, const ItemCatalog& catalog,
                                          UserIndex& users) {
    const CsvTable t = read_csv(path);
    const int cu = t.require_column("user_id", "comparisons");
    const int cw = t.require_column("winner_id", "comparisons");
    const int cl = t.require_column("loser_id", "comparisons");
    const int cwt = t.column("weight");
    ComparisonSet set;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        Comparison c;
        c.user = users.add_or_get(row[static_cast<std::size_t>(cu)]);
        c.winner = catalog.item_index(row[static_cast<std::size_t>(cw)]);
        c.loser = catalog.item_index(row[static_cast<std::size_t>(cl)]);
        c.weight = cwt >= 0 ? std::stod(row[static_cast<std::size_t>(cwt)]) : 1.0;
        if (c.winner == c.loser)
            throw data_error("comparisons: winner == loser at line " + std::to_string(t.line_numbers[r]));
        set.comparisons.push_back(c);
    }
    set.n_users = users.size();
    set.n_items = catalog.n_items();
    set.validate();
    return set;
}

/// Rankings CSV: rows (user_id, item_id, tier[, ranking_id]). Tier 1 is the
/// most preferred. Rows sharing (user_id, ranking_id) form one ranking;
/// ranking_id defaults to a single ranking per user.
inline std::vector<PartialRanking> load_rankings_csv(const std::string& path) {
    const CsvTable t = read_csv(path);
    const int cu = t.require_column("user_id", "rankings");
    const int ci = t.require_column("item_id", "rankings");
    const int ct = t.require_column("tier", "rankings");
    const int cr = t.column("ranking_id");

    // key -> tier -> items, keyed in first-appearance order
    std::vector<std::pair<std::string, std::string>> order;  // (user, ranking_id)
    std::map<std::pair<std::string, std::string>, std::map<int, std::set<std::string>>> groups;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        int tier;
        try {
            tier = std::stoi(row[static_cast<std::size_t>(ct)]);
        } catch (const std::exception&) {
            throw data_error("rankings: bad tier value at line " + std::to_string(t.line_numbers[r]));
        }
        if (tier < 1) throw data_error("rankings: tier must be >= 1 at line " + std::to_string(t.line_numbers[r]));
        const auto key = std::make_pair(row[static_cast<std::size_t>(cu)],
                                        cr >= 0 ? row[static_cast<std::size_t>(cr)] : std::string("r0"));
        if (!groups.count(key)) order.push_back(key);
        groups[key][tier].insert(row[static_cast<std::size_t>(ci)]);
    }
    std::vector<PartialRanking> rankings;
    for (const auto& key : order) {
        PartialRanking pr;
        pr.user_id = key.first;
        for (auto& [tier, items] : groups[key]) pr.tiers.push_back(std::move(items));
        pr.validate();
        rankings.push_back(std::move(pr));
    }
    return rankings;
}

}  // namespace pairrank
