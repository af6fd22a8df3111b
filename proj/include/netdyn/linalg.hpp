#pragma once

// Small dense linear algebra: Cholesky factorization, SPD solves and
// inverses on flat row-major matrices.  Sized for the regression kernels in
// this library (a handful of columns; the dummy-variable test oracles use a
// few dozen).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace netdyn {

// In-place lower Cholesky of a symmetric positive definite matrix.
// Returns false if a pivot falls below the tolerance (singular / not PD).
inline bool cholesky_factor(std::vector<double>& a, std::size_t n, double tol = 1e-12) {
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > tol)) return false;
        double l = std::sqrt(d);
        a[j * n + j] = l;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / l;
        }
    }
    // zero the strict upper triangle so the factor is self-contained
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) a[i * n + j] = 0.0;
    return true;
}

// Solves L L' x = b given the Cholesky factor; b is overwritten with x.
inline void cholesky_solve(const std::vector<double>& chol, std::size_t n, std::vector<double>& b) {
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= chol[i * n + k] * b[k];
        b[i] = s / chol[i * n + i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= chol[k * n + ii] * b[k];
        b[ii] = s / chol[ii * n + ii];
    }
}

// x = A^{-1} b for SPD A.  Returns false when A is singular.
inline bool solve_spd(std::vector<double> a, std::size_t n, std::vector<double> b,
                      std::vector<double>& x, double tol = 1e-12) {
    if (!cholesky_factor(a, n, tol)) return false;
    cholesky_solve(a, n, b);
    x = std::move(b);
    return true;
}

// inv = A^{-1} for SPD A via column-wise solves.
inline bool spd_inverse(std::vector<double> a, std::size_t n, std::vector<double>& inv,
                        double tol = 1e-12) {
    if (!cholesky_factor(a, n, tol)) return false;
    inv.assign(n * n, 0.0);
    std::vector<double> col(n);
    for (std::size_t j = 0; j < n; ++j) {
        std::fill(col.begin(), col.end(), 0.0);
        col[j] = 1.0;
        cholesky_solve(a, n, col);
        for (std::size_t i = 0; i < n; ++i) inv[i * n + j] = col[i];
    }
    return true;
}

// C = A * B for flat row-major matrices (n x m) * (m x p).
inline std::vector<double> mat_mul(const std::vector<double>& a, const std::vector<double>& b,
                                   std::size_t n, std::size_t m, std::size_t p) {
    std::vector<double> c(n * p, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < m; ++k) {
            double aik = a[i * m + k];
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < p; ++j) c[i * p + j] += aik * b[k * p + j];
        }
    return c;
}

} // namespace netdyn
