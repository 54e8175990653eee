#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "pairrank/common.hpp"

namespace pairrank {

/// Numerically stable logistic function. Safe for |t| well beyond 1e3:
/// the exponential is only ever taken of a non-positive argument.
inline double sigmoid(double t) {
    if (t >= 0.0) {
        return 1.0 / (1.0 + std::exp(-t));
    }
    const double e = std::exp(t);
    return e / (1.0 + e);
}

/// log sigma(t) computed as -log1p(e^{-t}) for t >= 0 and t - log1p(e^{t})
/// otherwise, so it never overflows and stays accurate in both tails.
inline double log_sigmoid(double t) {
    if (t >= 0.0) {
        return -std::log1p(std::exp(-t));
    }
    return t - std::log1p(std::exp(t));
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Empirical quantile with linear interpolation between order statistics
/// (position p = q * (n - 1), the common "type 7" rule). q in [0, 1].
inline double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw data_error("quantile: empty sample");
    if (q < 0.0 || q > 1.0) throw data_error("quantile: q outside [0,1]");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

/// Solves A x = b for a symmetric positive definite A (row-major n x n)
/// via Cholesky. Throws numerical_error if A is not positive definite.
inline std::vector<double> cholesky_solve(std::vector<double> a, std::vector<double> b) {
    const std::size_t n = b.size();
    // factor: a becomes L (lower triangle)
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > 0.0)) throw numerical_error("cholesky_solve: matrix not positive definite");
        const double ljj = std::sqrt(d);
        a[j * n + j] = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / ljj;
        }
    }
    // forward solve L y = b
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
        b[i] = s / a[i * n + i];
    }
    // back solve L^T x = y
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= a[k * n + ii] * b[k];
        b[ii] = s / a[ii * n + ii];
    }
    return b;
}

inline double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double sum(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

}  // namespace pairrank
