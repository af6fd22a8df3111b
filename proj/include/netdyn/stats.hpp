#pragma once

// Scalar statistics shared across modules: moments, z-scoring, Pearson
// correlation, and the Student-t tail probability used for cluster-robust
// inference.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "netdyn/core.hpp"

namespace netdyn {

struct Moments {
    double mean = 0.0;
    double sd = 0.0;  // sample sd, n-1 denominator
    std::size_t n = 0;
};

inline Moments moments(std::span<const double> xs) {
    Moments m;
    m.n = xs.size();
    if (m.n == 0) return m;
    double sum = 0.0;
    for (double x : xs) sum += x;
    m.mean = sum / static_cast<double>(m.n);
    if (m.n < 2) return m;
    double ss = 0.0;
    for (double x : xs) {
        double d = x - m.mean;
        ss += d * d;
    }
    m.sd = std::sqrt(ss / static_cast<double>(m.n - 1));
    return m;
}

// z-scores values in place; throws analysis_error on degenerate scope
// (fewer than two values or zero variance).  Returns the (mean, sd) used so
// that callers can de-standardize.
inline Moments zscore_inplace(std::span<double> xs) {
    Moments m = moments(xs);
    if (m.n < 2) throw analysis_error("standardization scope has fewer than two values");
    if (!(m.sd > 0.0)) throw analysis_error("standardization scope has zero variance");
    for (double& x : xs) x = (x - m.mean) / m.sd;
    return m;
}

// Pearson correlation of paired values; population denominators (the n vs
// n-1 factor cancels).  Returns NaN when either margin has zero variance.
inline double pearson(std::span<const double> xs, std::span<const double> ys) {
    std::size_t n = xs.size();
    if (n == 0 || ys.size() != n) return std::numeric_limits<double>::quiet_NaN();
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    double mx = sx / static_cast<double>(n);
    double my = sy / static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = xs[i] - mx;
        double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

namespace detail {

// Continued fraction for the regularized incomplete beta (Lentz).
inline double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-14;
    constexpr double kFpMin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

} // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                      a * std::log(x) + b * std::log1p(-x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::betacf(a, b, x) / a;
    return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

// Two-sided p-value for a t statistic with df degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
    if (!std::isfinite(t) || df <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    double x = df / (df + t * t);
    return incomplete_beta(df / 2.0, 0.5, x);
}

} // namespace netdyn
