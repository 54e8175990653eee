#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pairrank/catalog.hpp"
#include "pairrank/common.hpp"
#include "pairrank/numeric.hpp"

namespace pairrank {

/// Which parameter blocks the ridge penalty applies to.
struct RidgeScope {
    bool beta = true;
    bool alpha = true;
    bool factors = true;
};

struct Hyperparams {
    double ridge_lambda = 0.1;  // penalty weight, >= 0
    RidgeScope ridge_scope{};
    int rank = 0;  // K; 0 means attributes-only
    std::uint64_t rng_seed = 0;
    // Restricted specifications. freeze_alpha defaults to true: the item
    // intercepts are collinear with the full one-hot design, and the
    // predicted-score formula works without them; unfreeze to include them
    // under the ridge penalty.
    bool freeze_beta = false;
    bool freeze_alpha = true;
    // Factor entries are initialized uniform on [-s, s] with
    // s = factor_init_scale / sqrt(K). Zero factors are a saddle point.
    double factor_init_scale = 0.5;
};

/// Parameter container for the latent-utility model
///   v_ij = x_j' beta + alpha_j + lambda_i' f_j.
/// Factor matrices are row-major: user i's row is user_factor(i).
struct ModelParams {
    std::vector<double> beta;          // one coefficient per attribute level
    std::vector<double> alpha;         // one intercept per item
    std::vector<double> user_factors;  // n_users x rank
    std::vector<double> item_factors;  // n_items x rank
    int n_users = 0;
    int n_items = 0;
    int rank = 0;

    static ModelParams zeros(int design_dim, int n_users, int n_items, int rank) {
        ModelParams p;
        p.beta.assign(static_cast<std::size_t>(design_dim), 0.0);
        p.alpha.assign(static_cast<std::size_t>(n_items), 0.0);
        p.user_factors.assign(static_cast<std::size_t>(n_users) * static_cast<std::size_t>(rank), 0.0);
        p.item_factors.assign(static_cast<std::size_t>(n_items) * static_cast<std::size_t>(rank), 0.0);
        p.n_users = n_users;
        p.n_items = n_items;
        p.rank = rank;
        return p;
    }

    std::span<const double> user_factor(int i) const {
        return std::span<const double>(user_factors).subspan(
            static_cast<std::size_t>(i) * static_cast<std::size_t>(rank), static_cast<std::size_t>(rank));
    }
    std::span<double> user_factor(int i) {
        return std::span<double>(user_factors).subspan(
            static_cast<std::size_t>(i) * static_cast<std::size_t>(rank), static_cast<std::size_t>(rank));
    }
    std::span<const double> item_factor(int j) const {
        return std::span<const double>(item_factors).subspan(
            static_cast<std::size_t>(j) * static_cast<std::size_t>(rank), static_cast<std::size_t>(rank));
    }
    std::span<double> item_factor(int j) {
        return std::span<double>(item_factors).subspan(
            static_cast<std::size_t>(j) * static_cast<std::size_t>(rank), static_cast<std::size_t>(rank));
    }

    void check_finite() const {
        for (const auto* v : {&beta, &alpha, &user_factors, &item_factors})
            for (double x : *v)
                if (!std::isfinite(x)) throw numerical_error("model parameters contain a non-finite value");
    }
};

inline void check_shapes(const ModelParams& p, const ItemCatalog& catalog) {
    if (static_cast<int>(p.beta.size()) != catalog.design_dim())
        throw data_error("model: beta length does not match catalog design dimension");
    if (static_cast<int>(p.alpha.size()) != catalog.n_items())
        throw data_error("model: alpha length does not match catalog size");
    if (p.n_items != catalog.n_items())
        throw data_error("model: item count does not match catalog");
    if (p.user_factors.size() != static_cast<std::size_t>(p.n_users) * static_cast<std::size_t>(p.rank) ||
        p.item_factors.size() != static_cast<std::size_t>(p.n_items) * static_cast<std::size_t>(p.rank))
        throw data_error("model: factor matrix shape mismatch");
}

/// Deterministic part of item utility, v_ij. The type-I extreme value noise
/// of the choice model is never sampled; it is integrated out into the
/// logistic comparison probability.
inline double utility(const ModelParams& params, const ItemCatalog& catalog, int user, int item) {
    if (user < 0 || user >= params.n_users) throw std::out_of_range("utility: user index out of range");
    if (item < 0 || item >= catalog.n_items()) throw std::out_of_range("utility: item index out of range");
    double v = params.alpha[static_cast<std::size_t>(item)];
    for (int a = 0; a < catalog.n_attributes(); ++a)
        v += params.beta[static_cast<std::size_t>(catalog.beta_index(a, item))];
    if (params.rank > 0) v += dot(params.user_factor(user), params.item_factor(item));
    return v;
}

/// P(winner preferred to loser | user) = sigma(v_winner - v_loser).
inline double pair_logit_prob(const ModelParams& params, const ItemCatalog& catalog, int user,
                              int winner, int loser) {
    if (winner == loser) throw std::invalid_argument("pair_logit_prob: winner == loser");
    return sigmoid(utility(params, catalog, user, winner) - utility(params, catalog, user, loser));
}

/// All item utilities for one user.
inline std::vector<double> utilities_for_user(const ModelParams& params, const ItemCatalog& catalog,
                                              int user) {
    std::vector<double> v(static_cast<std::size_t>(catalog.n_items()));
    for (int j = 0; j < catalog.n_items(); ++j) v[static_cast<std::size_t>(j)] = utility(params, catalog, user, j);
    return v;
}

/// Items sorted by utility descending; ties broken by ascending item_id so
/// the ranking is a deterministic total order.
inline std::vector<int> predicted_ranking(const ModelParams& params, const ItemCatalog& catalog,
                                          int user) {
    const std::vector<double> v = utilities_for_user(params, catalog, user);
    std::vector<int> order(static_cast<std::size_t>(catalog.n_items()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double va = v[static_cast<std::size_t>(a)];
        const double vb = v[static_cast<std::size_t>(b)];
        if (va != vb) return va > vb;
        return catalog.item(a).item_id < catalog.item(b).item_id;
    });
    return order;
}

/// Beta with each attribute block shifted to mean zero. Coefficient levels
/// are identified only up to within-user constants, so cross-model
/// comparisons of beta should go through this view.
inline std::vector<double> centered_beta(const ModelParams& params, const ItemCatalog& catalog) {
    std::vector<double> out = params.beta;
    for (int a = 0; a < catalog.n_attributes(); ++a) {
        const int n_levels = static_cast<int>(catalog.schema()[static_cast<std::size_t>(a)].levels.size());
        const int off = catalog.beta_offset(a, 0);
        double mean = 0.0;
        for (int l = 0; l < n_levels; ++l) mean += out[static_cast<std::size_t>(off + l)];
        mean /= static_cast<double>(n_levels);
        for (int l = 0; l < n_levels; ++l) out[static_cast<std::size_t>(off + l)] -= mean;
    }
    return out;
}

}  // namespace pairrank
