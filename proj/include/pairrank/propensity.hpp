#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pairrank/catalog.hpp"
#include "pairrank/common.hpp"
#include "pairrank/exploder.hpp"
#include "pairrank/numeric.hpp"

namespace pairrank {

/// Stabilization knobs for the IPW weights and the propensity fit.
struct WeightConfig {
    double clip_quantile = 0.99;  // in (0.5, 1.0]; 1.0 disables clipping
    bool self_normalize = true;   // rescale so the mean weight is 1
    double propensity_ridge = 1e-6;

    void validate() const {
        if (!(clip_quantile > 0.5 && clip_quantile <= 1.0))
            throw config_error("weight config: clip_quantile must be in (0.5, 1.0]");
        if (propensity_ridge < 0.0)
            throw config_error("weight config: propensity_ridge must be >= 0");
    }
};

/// Which item features enter the observability model. An intercept column
/// is always present. Popularity is counted from the comparison data itself
/// (number of the user's comparison slots an item fills, summed over users).
struct PropensityFeatureConfig {
    bool log_popularity = true;
    bool covariates = true;
    bool attributes = true;
};

struct ObservabilityRow {
    int user;
    int item;
    bool observed;
};

struct ObservabilityData {
    std::vector<ObservabilityRow> rows;  // full user x item grid
    std::vector<double> z;               // n_items x n_features, row-major
    std::vector<std::string> feature_names;
    int n_users = 0;
    int n_items = 0;

    int n_features() const { return static_cast<int>(feature_names.size()); }
    std::span<const double> item_features(int j) const {
        return std::span<const double>(z).subspan(
            static_cast<std::size_t>(j) * static_cast<std::size_t>(n_features()),
            static_cast<std::size_t>(n_features()));
    }
};

struct PropensityFitDiagnostics {
    double log_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct PropensityModel {
    std::vector<double> eta;
    std::vector<std::string> feature_names;
    PropensityFitDiagnostics diagnostics;
};

/// Builds the full user x item observability grid: an item counts as
/// observed for a user iff it appears as winner or loser in at least one of
/// that user's comparisons.
inline ObservabilityData build_observability_data(const ComparisonSet& comparisons,
                                                  const ItemCatalog& catalog,
                                                  const PropensityFeatureConfig& features = {}) {
    if (comparisons.comparisons.empty()) throw data_error("observability: empty comparison set");
    ObservabilityData data;
    data.n_users = comparisons.n_users;
    data.n_items = catalog.n_items();

    std::vector<char> seen(static_cast<std::size_t>(data.n_users) * static_cast<std::size_t>(data.n_items), 0);
    std::vector<double> popularity(static_cast<std::size_t>(data.n_items), 0.0);
    for (const auto& c : comparisons.comparisons) {
        seen[static_cast<std::size_t>(c.user) * static_cast<std::size_t>(data.n_items) + static_cast<std::size_t>(c.winner)] = 1;
        seen[static_cast<std::size_t>(c.user) * static_cast<std::size_t>(data.n_items) + static_cast<std::size_t>(c.loser)] = 1;
        popularity[static_cast<std::size_t>(c.winner)] += 1.0;
        popularity[static_cast<std::size_t>(c.loser)] += 1.0;
    }
    data.rows.reserve(seen.size());
    for (int u = 0; u < data.n_users; ++u)
        for (int j = 0; j < data.n_items; ++j)
            data.rows.push_back({u, j, seen[static_cast<std::size_t>(u) * static_cast<std::size_t>(data.n_items) + static_cast<std::size_t>(j)] != 0});

    data.feature_names.push_back("intercept");
    if (features.log_popularity) data.feature_names.push_back("log1p_popularity");
    if (features.covariates)
        for (const auto& name : catalog.covariate_names()) data.feature_names.push_back("cov_" + name);
    if (features.attributes)
        for (const auto& attr : catalog.schema())
            for (const auto& lvl : attr.levels) data.feature_names.push_back(attr.name + "=" + lvl);

    const int m = data.n_features();
    data.z.assign(static_cast<std::size_t>(data.n_items) * static_cast<std::size_t>(m), 0.0);
    for (int j = 0; j < data.n_items; ++j) {
        double* row = data.z.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(m);
        int k = 0;
        row[k++] = 1.0;
        if (features.log_popularity) row[k++] = std::log1p(popularity[static_cast<std::size_t>(j)]);
        if (features.covariates)
            for (double c : catalog.item(j).covariates) row[k++] = c;
        if (features.attributes)
            for (int a = 0; a < catalog.n_attributes(); ++a)
                row[k + catalog.beta_index(a, j)] = 1.0;
    }
    return data;
}

/// Ridge-penalized logistic MLE of the marginal item observability:
///   max_eta sum_rows [o log q + (1-o) log(1-q)] - (ridge/2) ||eta||^2,
/// q = sigma(z' eta). Newton iterations with step halving; converged when
/// the gradient max-norm drops below 1e-8. Features are item-level, so the
/// grid is aggregated to per-item observation counts before iterating.
inline PropensityModel fit_propensity(const ObservabilityData& data, const WeightConfig& config) {
    config.validate();
    const int m = data.n_features();
    const int n_items = data.n_items;
    std::vector<double> obs_count(static_cast<std::size_t>(n_items), 0.0);
    std::vector<double> tot_count(static_cast<std::size_t>(n_items), 0.0);
    double n_obs = 0.0, n_rows = 0.0;
    for (const auto& r : data.rows) {
        tot_count[static_cast<std::size_t>(r.item)] += 1.0;
        if (r.observed) obs_count[static_cast<std::size_t>(r.item)] += 1.0;
        n_obs += r.observed ? 1.0 : 0.0;
        n_rows += 1.0;
    }
    if (n_obs == 0.0 || n_obs == n_rows)
        throw data_error("propensity: degenerate labels, all rows " +
                         std::string(n_obs == 0.0 ? "unobserved" : "observed"));

    const double ridge = config.propensity_ridge;
    std::vector<double> eta(static_cast<std::size_t>(m), 0.0);

    auto objective = [&](const std::vector<double>& e) {
        double ll = 0.0;
        for (int j = 0; j < n_items; ++j) {
            const double t = dot(data.item_features(j), e);
            ll += obs_count[static_cast<std::size_t>(j)] * log_sigmoid(t) +
                  (tot_count[static_cast<std::size_t>(j)] - obs_count[static_cast<std::size_t>(j)]) * log_sigmoid(-t);
        }
        double pen = 0.0;
        for (double x : e) pen += x * x;
        return ll - 0.5 * ridge * pen;
    };

    PropensityModel model;
    model.feature_names = data.feature_names;
    double obj = objective(eta);
    const int max_iters = 500;
    int iter = 0;
    for (; iter < max_iters; ++iter) {
        std::vector<double> grad(static_cast<std::size_t>(m), 0.0);
        std::vector<double> hess(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), 0.0);
        for (int j = 0; j < n_items; ++j) {
            const auto zj = data.item_features(j);
            const double q = sigmoid(dot(zj, eta));
            const double resid = obs_count[static_cast<std::size_t>(j)] - tot_count[static_cast<std::size_t>(j)] * q;
            const double w = tot_count[static_cast<std::size_t>(j)] * q * (1.0 - q);
            for (int r = 0; r < m; ++r) {
                grad[static_cast<std::size_t>(r)] += resid * zj[static_cast<std::size_t>(r)];
                for (int c = 0; c <= r; ++c)
                    hess[static_cast<std::size_t>(r) * static_cast<std::size_t>(m) + static_cast<std::size_t>(c)] +=
                        w * zj[static_cast<std::size_t>(r)] * zj[static_cast<std::size_t>(c)];
            }
        }
        for (int r = 0; r < m; ++r) {
            grad[static_cast<std::size_t>(r)] -= ridge * eta[static_cast<std::size_t>(r)];
            hess[static_cast<std::size_t>(r) * static_cast<std::size_t>(m) + static_cast<std::size_t>(r)] += ridge;
            for (int c = r + 1; c < m; ++c)
                hess[static_cast<std::size_t>(r) * static_cast<std::size_t>(m) + static_cast<std::size_t>(c)] =
                    hess[static_cast<std::size_t>(c) * static_cast<std::size_t>(m) + static_cast<std::size_t>(r)];
        }
        if (max_abs(grad) < 1e-8) {
            model.diagnostics.converged = true;
            break;
        }
        std::vector<double> step;
        try {
            step = cholesky_solve(hess, grad);
        } catch (const numerical_error&) {
            // singular curvature (collinear features without ridge): jitter once
            for (int r = 0; r < m; ++r)
                hess[static_cast<std::size_t>(r) * static_cast<std::size_t>(m) + static_cast<std::size_t>(r)] += 1e-10;
            step = cholesky_solve(hess, grad);
        }
        double scale = 1.0;
        std::vector<double> trial(static_cast<std::size_t>(m));
        double trial_obj = -1e300;
        for (int h = 0; h < 60; ++h) {
            for (int r = 0; r < m; ++r)
                trial[static_cast<std::size_t>(r)] = eta[static_cast<std::size_t>(r)] + scale * step[static_cast<std::size_t>(r)];
            trial_obj = objective(trial);
            if (trial_obj >= obj) break;
            scale *= 0.5;
        }
        if (trial_obj < obj) break;  // no ascent possible, stop
        eta = trial;
        obj = trial_obj;
    }
    model.eta = eta;
    model.diagnostics.iterations = iter;
    model.diagnostics.log_likelihood = obj;
    return model;
}

/// q_j = sigma(z_j' eta) over the items of the data grid.
inline std::vector<double> item_propensities(const PropensityModel& model,
                                             const ObservabilityData& data) {
    if (model.eta.size() != data.feature_names.size())
        throw data_error("propensity: model/features dimension mismatch");
    std::vector<double> q(static_cast<std::size_t>(data.n_items));
    for (int j = 0; j < data.n_items; ++j)
        q[static_cast<std::size_t>(j)] = sigmoid(dot(data.item_features(j), model.eta));
    return q;
}

struct WeightDiagnostics {
    std::size_t clipped = 0;
    double clip_threshold = 0.0;
    double effective_sample_size = 0.0;  // (sum w)^2 / sum w^2
    std::size_t n = 0;
};

struct IpwResult {
    ComparisonSet set;
    WeightDiagnostics diagnostics;
};

/// Inverse-probability weights: w = base / (q_winner * q_loser), clipped at
/// the clip_quantile empirical quantile of the raw weights, optionally
/// self-normalized to mean 1.
inline IpwResult assign_ipw_weights(const ComparisonSet& comparisons, const std::vector<double>& q,
                                    const WeightConfig& config) {
    config.validate();
    for (const auto& c : comparisons.comparisons) {
        const double qw = q.at(static_cast<std::size_t>(c.winner));
        const double ql = q.at(static_cast<std::size_t>(c.loser));
        if (!(qw > 0.0 && qw < 1.0) || !(ql > 0.0 && ql < 1.0))
            throw data_error("ipw: propensities must lie strictly inside (0,1)");
    }
    IpwResult res;
    res.set = comparisons;
    std::vector<double> raw(res.set.comparisons.size());
    for (std::size_t i = 0; i < res.set.comparisons.size(); ++i) {
        const auto& c = res.set.comparisons[i];
        raw[i] = c.weight / (q[static_cast<std::size_t>(c.winner)] * q[static_cast<std::size_t>(c.loser)]);
    }
    const double threshold = quantile(raw, config.clip_quantile);
    res.diagnostics.clip_threshold = threshold;
    res.diagnostics.n = raw.size();
    double total = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        double w = raw[i];
        if (w > threshold) {
            w = threshold;
            ++res.diagnostics.clipped;
        }
        res.set.comparisons[i].weight = w;
        total += w;
    }
    if (config.self_normalize && total > 0.0) {
        const double scale = static_cast<double>(raw.size()) / total;
        for (auto& c : res.set.comparisons) c.weight *= scale;
    }
    double sw = 0.0, sw2 = 0.0;
    for (const auto& c : res.set.comparisons) {
        sw += c.weight;
        sw2 += c.weight * c.weight;
    }
    res.diagnostics.effective_sample_size = sw2 > 0.0 ? sw * sw / sw2 : 0.0;
    return res;
}

}  // namespace pairrank
