#pragma once

#include <set>
#include <string>
#include <vector>

#include "pairrank/catalog.hpp"
#include "pairrank/exploder.hpp"
#include "pairrank/model.hpp"
#include "pairrank/rng.hpp"

namespace test_helpers {

/// Small catalog with two attributes (region x price tier) and round-robin
/// level assignment so every level is populated.
inline pairrank::ItemCatalog make_catalog(int n_items, std::vector<int> level_counts = {3, 2},
                                          int n_covariates = 0) {
    using namespace pairrank;
    std::vector<Attribute> schema;
    for (std::size_t a = 0; a < level_counts.size(); ++a) {
        Attribute attr;
        attr.name = "attr" + std::to_string(a);
        for (int l = 0; l < level_counts[a]; ++l)
            attr.levels.push_back("a" + std::to_string(a) + "_l" + std::to_string(l));
        schema.push_back(attr);
    }
    std::vector<std::string> cov_names;
    for (int c = 0; c < n_covariates; ++c) cov_names.push_back("c" + std::to_string(c));
    std::vector<ItemRecord> items;
    Rng rng(7);
    for (int j = 0; j < n_items; ++j) {
        ItemRecord rec;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "i%03d", j);
        rec.item_id = buf;
        for (std::size_t a = 0; a < level_counts.size(); ++a)
            rec.level_idx.push_back((j + static_cast<int>(a)) % level_counts[a]);
        for (int c = 0; c < n_covariates; ++c) rec.covariates.push_back(rng.uniform(-1.0, 1.0));
        items.push_back(rec);
    }
    return ItemCatalog(std::move(schema), std::move(items), std::move(cov_names));
}

inline pairrank::ModelParams random_params(const pairrank::ItemCatalog& catalog, int n_users,
                                           int rank, pairrank::Rng& rng, double scale = 1.0) {
    auto p = pairrank::ModelParams::zeros(catalog.design_dim(), n_users, catalog.n_items(), rank);
    for (auto& x : p.beta) x = rng.uniform(-scale, scale);
    for (auto& x : p.alpha) x = rng.uniform(-scale, scale);
    for (auto& x : p.user_factors) x = rng.uniform(-scale, scale);
    for (auto& x : p.item_factors) x = rng.uniform(-scale, scale);
    return p;
}

/// Random comparison set with every user touching random item pairs.
inline pairrank::ComparisonSet random_comparisons(int n_users, int n_items, int per_user,
                                                  pairrank::Rng& rng, bool random_weights = true) {
    pairrank::ComparisonSet set;
    set.n_users = n_users;
    set.n_items = n_items;
    for (int u = 0; u < n_users; ++u) {
        for (int c = 0; c < per_user; ++c) {
            int w = static_cast<int>(rng.index(static_cast<std::size_t>(n_items)));
            int l = static_cast<int>(rng.index(static_cast<std::size_t>(n_items)));
            if (w == l) l = (l + 1) % n_items;
            const double weight = random_weights ? rng.uniform(0.5, 2.0) : 1.0;
            set.comparisons.push_back({u, w, l, weight});
        }
    }
    return set;
}

inline std::string source_dir() {
    const char* p = std::getenv("PAIRRANK_SOURCE_DIR");
    return p ? std::string(p) : std::string("..");
}

}  // namespace test_helpers
