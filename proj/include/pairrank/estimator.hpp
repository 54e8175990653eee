#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pairrank/catalog.hpp"
#include "pairrank/common.hpp"
#include "pairrank/exploder.hpp"
#include "pairrank/model.hpp"
#include "pairrank/numeric.hpp"
#include "pairrank/rng.hpp"

namespace pairrank {

/// The IPW-weighted, ridge-regularized pairwise log-likelihood
///   L(theta) = sum_c w_c log sigma(v_winner - v_loser) - (rho/2) ||theta_pen||^2.
/// Comparison weights are expected to carry the IPW correction already.
struct Objective {
    const ComparisonSet* comparisons;
    const ItemCatalog* catalog;
    Hyperparams hyper;

    int n_users() const { return comparisons->n_users; }
};

namespace detail {

inline bool penalize_beta(const Hyperparams& h) { return h.ridge_scope.beta && !h.freeze_beta; }
inline bool penalize_alpha(const Hyperparams& h) { return h.ridge_scope.alpha && !h.freeze_alpha; }
inline bool penalize_factors(const Hyperparams& h) { return h.ridge_scope.factors && h.rank > 0; }

inline double sq_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

inline void check_objective_shapes(const Objective& obj, const ModelParams& params) {
    check_shapes(params, *obj.catalog);
    if (params.n_users != obj.comparisons->n_users)
        throw data_error("estimator: user count mismatch between params and comparisons");
    if (params.rank != obj.hyper.rank)
        throw data_error("estimator: params rank differs from hyperparameter rank");
}

}  // namespace detail

inline double ridge_penalty(const Objective& obj, const ModelParams& params) {
    const double rho = obj.hyper.ridge_lambda;
    if (rho == 0.0) return 0.0;
    double s = 0.0;
    if (detail::penalize_beta(obj.hyper)) s += detail::sq_norm(params.beta);
    if (detail::penalize_alpha(obj.hyper)) s += detail::sq_norm(params.alpha);
    if (detail::penalize_factors(obj.hyper)) {
        s += detail::sq_norm(params.user_factors);
        s += detail::sq_norm(params.item_factors);
    }
    return 0.5 * rho * s;
}

inline double log_likelihood(const Objective& obj, const ModelParams& params) {
    detail::check_objective_shapes(obj, params);
    double ll = 0.0;
    for (const auto& c : obj.comparisons->comparisons) {
        const double dv = utility(params, *obj.catalog, c.user, c.winner) -
                          utility(params, *obj.catalog, c.user, c.loser);
        ll += c.weight * log_sigmoid(dv);
    }
    return ll - ridge_penalty(obj, params);
}

namespace detail {

/// Adds the likelihood gradient of one comparison, scaled by `scale`, using
/// residual r = scale * (1 - sigma(dv)):
///   d/dbeta    += r (x_w - x_l)
///   d/dalpha_w += r,  d/dalpha_l -= r
///   d/dlambda_i += r (f_w - f_l)
///   d/df_w     += r lambda_i,  d/df_l -= r lambda_i
inline void accumulate_comparison_gradient(const Objective& obj, const ModelParams& params,
                                           const Comparison& c, double scale, ModelParams& g) {
    const ItemCatalog& cat = *obj.catalog;
    const double dv = utility(params, cat, c.user, c.winner) - utility(params, cat, c.user, c.loser);
    const double r = scale * (1.0 - sigmoid(dv));
    for (int a = 0; a < cat.n_attributes(); ++a) {
        g.beta[static_cast<std::size_t>(cat.beta_index(a, c.winner))] += r;
        g.beta[static_cast<std::size_t>(cat.beta_index(a, c.loser))] -= r;
    }
    g.alpha[static_cast<std::size_t>(c.winner)] += r;
    g.alpha[static_cast<std::size_t>(c.loser)] -= r;
    if (params.rank > 0) {
        const auto fw = params.item_factor(c.winner);
        const auto fl = params.item_factor(c.loser);
        const auto lam = params.user_factor(c.user);
        auto glam = g.user_factor(c.user);
        auto gfw = g.item_factor(c.winner);
        auto gfl = g.item_factor(c.loser);
        for (int k = 0; k < params.rank; ++k) {
            glam[static_cast<std::size_t>(k)] += r * (fw[static_cast<std::size_t>(k)] - fl[static_cast<std::size_t>(k)]);
            gfw[static_cast<std::size_t>(k)] += r * lam[static_cast<std::size_t>(k)];
            gfl[static_cast<std::size_t>(k)] -= r * lam[static_cast<std::size_t>(k)];
        }
    }
}

inline void apply_ridge_and_freezes(const Objective& obj, const ModelParams& params, ModelParams& g) {
    const double rho = obj.hyper.ridge_lambda;
    if (detail::penalize_beta(obj.hyper) && rho != 0.0)
        for (std::size_t i = 0; i < g.beta.size(); ++i) g.beta[i] -= rho * params.beta[i];
    if (detail::penalize_alpha(obj.hyper) && rho != 0.0)
        for (std::size_t i = 0; i < g.alpha.size(); ++i) g.alpha[i] -= rho * params.alpha[i];
    if (detail::penalize_factors(obj.hyper) && rho != 0.0) {
        for (std::size_t i = 0; i < g.user_factors.size(); ++i) g.user_factors[i] -= rho * params.user_factors[i];
        for (std::size_t i = 0; i < g.item_factors.size(); ++i) g.item_factors[i] -= rho * params.item_factors[i];
    }
    if (obj.hyper.freeze_beta) std::fill(g.beta.begin(), g.beta.end(), 0.0);
    if (obj.hyper.freeze_alpha) std::fill(g.alpha.begin(), g.alpha.end(), 0.0);
}

inline double grad_sq_norm(const ModelParams& g) {
    return sq_norm(g.beta) + sq_norm(g.alpha) + sq_norm(g.user_factors) + sq_norm(g.item_factors);
}

inline double grad_max_abs(const ModelParams& g) {
    double m = max_abs(g.beta);
    m = std::max(m, max_abs(g.alpha));
    m = std::max(m, max_abs(g.user_factors));
    m = std::max(m, max_abs(g.item_factors));
    return m;
}

inline void axpy(ModelParams& dst, double a, const ModelParams& x) {
    for (std::size_t i = 0; i < dst.beta.size(); ++i) dst.beta[i] += a * x.beta[i];
    for (std::size_t i = 0; i < dst.alpha.size(); ++i) dst.alpha[i] += a * x.alpha[i];
    for (std::size_t i = 0; i < dst.user_factors.size(); ++i) dst.user_factors[i] += a * x.user_factors[i];
    for (std::size_t i = 0; i < dst.item_factors.size(); ++i) dst.item_factors[i] += a * x.item_factors[i];
}

}  // namespace detail

/// Analytic gradient of log_likelihood, same shape as the parameters.
/// Gradients of frozen blocks are zeroed.
inline ModelParams gradient(const Objective& obj, const ModelParams& params) {
    detail::check_objective_shapes(obj, params);
    ModelParams g = ModelParams::zeros(obj.catalog->design_dim(), params.n_users,
                                       params.n_items, params.rank);
    for (const auto& c : obj.comparisons->comparisons)
        detail::accumulate_comparison_gradient(obj, params, c, c.weight, g);
    detail::apply_ridge_and_freezes(obj, params, g);
    return g;
}

/// Stochastic gradient estimate over an index batch drawn in proportion to
/// the comparison weights: the batch gradient is UNWEIGHTED and rescaled by
/// (sum of weights / batch size), so its expectation under weight-
/// proportional resampling equals the full weighted gradient. The ridge
/// gradient enters exactly. This is the per-step estimator used by fit_sgd.
inline ModelParams resampled_gradient(const Objective& obj, const ModelParams& params,
                                      std::span<const std::size_t> batch, double total_weight) {
    ModelParams g = ModelParams::zeros(obj.catalog->design_dim(), params.n_users,
                                       params.n_items, params.rank);
    const double scale = total_weight / static_cast<double>(batch.size());
    for (std::size_t idx : batch)
        detail::accumulate_comparison_gradient(obj, params, obj.comparisons->comparisons[idx], scale, g);
    detail::apply_ridge_and_freezes(obj, params, g);
    return g;
}

struct FitConfig {
    int max_iters = 5000;
    double tol = 1e-7;  // gradient max-norm
    bool record_trace = false;
};

struct FitResult {
    ModelParams params;
    bool converged = false;
    int iterations = 0;
    double objective = 0.0;
    double grad_max_norm = 0.0;
    std::vector<double> trace;  // objective per iteration (or per eval for SGD)
};

/// Deterministic gradient ascent with backtracking (Armijo) line search.
/// The objective never decreases across accepted steps.
inline FitResult fit_full_batch(const Objective& obj, const ModelParams& init,
                                const FitConfig& config = {}) {
    detail::check_objective_shapes(obj, init);
    FitResult res;
    res.params = init;
    double obj_val = log_likelihood(obj, res.params);
    double step = 1.0;
    const double armijo = 1e-4;
    if (config.record_trace) res.trace.push_back(obj_val);
    int it = 0;
    for (; it < config.max_iters; ++it) {
        const ModelParams g = gradient(obj, res.params);
        res.grad_max_norm = detail::grad_max_abs(g);
        if (res.grad_max_norm < config.tol) {
            res.converged = true;
            break;
        }
        const double gnorm2 = detail::grad_sq_norm(g);
        bool accepted = false;
        for (int h = 0; h < 60; ++h) {
            ModelParams trial = res.params;
            detail::axpy(trial, step, g);
            const double trial_obj = log_likelihood(obj, trial);
            if (trial_obj >= obj_val + armijo * step * gnorm2) {
                res.params = std::move(trial);
                obj_val = trial_obj;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // line search stalled at machine precision
        step = std::min(step * 2.0, 1024.0);
        if (config.record_trace) res.trace.push_back(obj_val);
    }
    res.iterations = it;
    res.objective = obj_val;
    return res;
}

/// Walker alias table for O(1) sampling from a discrete distribution
/// proportional to the input weights.
struct AliasTable {
    std::size_t n = 0;
    std::vector<double> prob;
    std::vector<std::size_t> alias;

    std::size_t draw(Rng& rng) const {
        const std::size_t i = rng.index(n);
        return rng.uniform() < prob[i] ? i : alias[i];
    }

    /// Exact induced distribution implied by (prob, alias); used to verify
    /// the construction against the normalized input weights.
    std::vector<double> induced_probabilities() const {
        std::vector<double> p(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] += prob[i];
            p[alias[i]] += 1.0 - prob[i];
        }
        for (auto& x : p) x /= static_cast<double>(n);
        return p;
    }
};

inline AliasTable build_alias_table(const std::vector<double>& weights) {
    if (weights.empty()) throw std::invalid_argument("alias table: empty weight vector");
    double total = 0.0;
    for (double w : weights) {
        if (!(w > 0.0) || !std::isfinite(w))
            throw std::invalid_argument("alias table: weights must be positive and finite");
        total += w;
    }
    const std::size_t n = weights.size();
    AliasTable t;
    t.n = n;
    t.prob.assign(n, 0.0);
    t.alias.assign(n, 0);
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) scaled[i] = weights[i] * static_cast<double>(n) / total;
    std::vector<std::size_t> small, large;
    for (std::size_t i = 0; i < n; ++i) (scaled[i] < 1.0 ? small : large).push_back(i);
    while (!small.empty() && !large.empty()) {
        const std::size_t s = small.back();
        small.pop_back();
        const std::size_t l = large.back();
        t.prob[s] = scaled[s];
        t.alias[s] = l;
        scaled[l] -= 1.0 - scaled[s];
        if (scaled[l] < 1.0) {
            large.pop_back();
            small.push_back(l);
        }
    }
    for (std::size_t i : large) {
        t.prob[i] = 1.0;
        t.alias[i] = i;
    }
    for (std::size_t i : small) {  // residual rounding leftovers
        t.prob[i] = 1.0;
        t.alias[i] = i;
    }
    return t;
}

enum class StepSchedule { constant, inverse_t, inverse_sqrt_t };

inline StepSchedule step_schedule_from_string(const std::string& s) {
    if (s == "constant") return StepSchedule::constant;
    if (s == "inverse_t") return StepSchedule::inverse_t;
    if (s == "inverse_sqrt_t") return StepSchedule::inverse_sqrt_t;
    throw config_error("unknown step schedule '" + s + "'");
}

inline std::string to_string(StepSchedule s) {
    switch (s) {
        case StepSchedule::constant: return "constant";
        case StepSchedule::inverse_t: return "inverse_t";
        default: return "inverse_sqrt_t";
    }
}

struct SgdConfig {
    int batch_size = 32;
    long steps = 100000;
    double step0 = 0.1;  // gamma_0
    StepSchedule schedule = StepSchedule::inverse_sqrt_t;
    std::uint64_t rng_seed = 0;
    double factor_init_scale = 0.5;
    long eval_every = 100;  // full-objective checks for the trace/divergence guard

    /// gamma_t for step t = 0, 1, ...: constant gamma_0; gamma_0/(1+t);
    /// gamma_0/sqrt(1+t).
    double step_size(long t) const {
        switch (schedule) {
            case StepSchedule::constant: return step0;
            case StepSchedule::inverse_t: return step0 / (1.0 + static_cast<double>(t));
            default: return step0 / std::sqrt(1.0 + static_cast<double>(t));
        }
    }

    void validate() const {
        if (batch_size < 1) throw config_error("sgd: batch_size must be >= 1");
        if (steps < 1) throw config_error("sgd: steps must be >= 1");
        if (!(step0 > 0.0)) throw config_error("sgd: step0 must be > 0");
    }
};

/// Resampling SGD: every step draws batch_size comparisons from the alias
/// table (probability proportional to the IPW weights, with replacement) and
/// takes a step along resampled_gradient. Deterministic given rng_seed.
/// Aborts with numerical_error if the full objective, checked every
/// eval_every steps, falls below its initial value by 10x the initial
/// magnitude.
inline FitResult fit_sgd(const Objective& obj, const ModelParams& init, const SgdConfig& config) {
    config.validate();
    detail::check_objective_shapes(obj, init);
    const auto& comps = obj.comparisons->comparisons;
    if (comps.empty()) throw data_error("sgd: empty comparison set");
    std::vector<double> weights(comps.size());
    double total_weight = 0.0;
    for (std::size_t i = 0; i < comps.size(); ++i) {
        weights[i] = comps[i].weight;
        total_weight += weights[i];
    }
    const AliasTable table = build_alias_table(weights);
    Rng rng(config.rng_seed);

    FitResult res;
    res.params = init;
    const double initial_obj = log_likelihood(obj, res.params);
    const double divergence_floor = initial_obj - 10.0 * std::abs(initial_obj);
    res.trace.push_back(initial_obj);

    std::vector<std::size_t> batch(static_cast<std::size_t>(config.batch_size));
    for (long t = 0; t < config.steps; ++t) {
        for (auto& b : batch) b = table.draw(rng);
        const ModelParams g = resampled_gradient(obj, res.params, batch, total_weight);
        detail::axpy(res.params, config.step_size(t), g);
        if ((t + 1) % config.eval_every == 0 || t + 1 == config.steps) {
            const double cur = log_likelihood(obj, res.params);
            res.trace.push_back(cur);
            if (cur < divergence_floor)
                throw numerical_error("sgd diverged at step " + std::to_string(t + 1));
        }
    }
    res.iterations = static_cast<int>(config.steps);
    res.objective = log_likelihood(obj, res.params);
    res.converged = true;
    res.grad_max_norm = detail::grad_max_abs(gradient(obj, res.params));
    return res;
}

/// beta and alpha start at zero; factor entries are independent uniform on
/// [-s, s] with s = factor_init_scale / sqrt(K), breaking the saddle at
/// zero factors. The initial lambda_i' f_j then has standard deviation
/// about factor_init_scale^2 / (3 sqrt(K)): each product of two uniforms
/// has variance (s^2/3)^2 and the K products are independent.
inline ModelParams init_params(const ItemCatalog& catalog, int n_users, const Hyperparams& hyper,
                               std::uint64_t seed) {
    ModelParams p = ModelParams::zeros(catalog.design_dim(), n_users, catalog.n_items(), hyper.rank);
    if (hyper.rank > 0) {
        const double s = hyper.factor_init_scale / std::sqrt(static_cast<double>(hyper.rank));
        Rng rng(seed);
        for (auto& x : p.user_factors) x = rng.uniform(-s, s);
        for (auto& x : p.item_factors) x = rng.uniform(-s, s);
    }
    return p;
}

}  // namespace pairrank
