#pragma once

/// @file sym_eigen.hpp
/// Dense symmetric eigensolver: Householder tridiagonalization followed by
/// implicit-shift QL with eigenvector accumulation. Eigenvectors are kept as
/// rows internally so Givens rotations run on contiguous memory.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "hamred/errors.hpp"
#include "hamred/tensor.hpp"

namespace hamred {
namespace detail {

inline double pythag(double a, double b) {
    const double aa = std::abs(a), ab = std::abs(b);
    if (aa > ab) {
        const double r = ab / aa;
        return aa * std::sqrt(1.0 + r * r);
    }
    if (ab == 0.0) return 0.0;
    const double r = aa / ab;
    return ab * std::sqrt(1.0 + r * r);
}

// Reduces symmetric a (n x n, row-major, destroyed) to tridiagonal form with
// diagonal d and subdiagonal e (e[0] unused); accumulates the orthogonal
// transformation into a.
inline void tred2(std::vector<double>& a, int n, std::vector<double>& d, std::vector<double>& e) {
    auto A = [&](int i, int j) -> double& { return a[static_cast<size_t>(i) * n + j]; };
    d.assign(n, 0.0);
    e.assign(n, 0.0);

    for (int i = n - 1; i >= 1; --i) {
        const int l = i - 1;
        double h = 0.0, scale = 0.0;
        if (l > 0) {
            for (int k = 0; k <= l; ++k) scale += std::abs(A(i, k));
            if (scale == 0.0) {
                e[i] = A(i, l);
            } else {
                for (int k = 0; k <= l; ++k) {
                    A(i, k) /= scale;
                    h += A(i, k) * A(i, k);
                }
                double f = A(i, l);
                double g = (f >= 0.0) ? -std::sqrt(h) : std::sqrt(h);
                e[i] = scale * g;
                h -= f * g;
                A(i, l) = f - g;
                f = 0.0;
                for (int j = 0; j <= l; ++j) {
                    A(j, i) = A(i, j) / h;
                    g = 0.0;
                    for (int k = 0; k <= j; ++k) g += A(j, k) * A(i, k);
                    for (int k = j + 1; k <= l; ++k) g += A(k, j) * A(i, k);
                    e[j] = g / h;
                    f += e[j] * A(i, j);
                }
                const double hh = f / (h + h);
                for (int j = 0; j <= l; ++j) {
                    f = A(i, j);
                    e[j] = g = e[j] - hh * f;
                    for (int k = 0; k <= j; ++k) A(j, k) -= f * e[k] + g * A(i, k);
                }
            }
        } else {
            e[i] = A(i, l);
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for (int i = 0; i < n; ++i) {
        const int l = i - 1;
        if (d[i] != 0.0) {
            for (int j = 0; j <= l; ++j) {
                double g = 0.0;
                for (int k = 0; k <= l; ++k) g += A(i, k) * A(k, j);
                for (int k = 0; k <= l; ++k) A(k, j) -= g * A(k, i);
            }
        }
        d[i] = A(i, i);
        A(i, i) = 1.0;
        for (int j = 0; j <= l; ++j) A(j, i) = A(i, j) = 0.0;
    }
}

// Implicit-shift QL on the tridiagonal (d, e), rotating the rows of z
// (n x n row-major; row k ends up holding the eigenvector of d[k]).
inline void tql2_rows(std::vector<double>& d, std::vector<double>& e, std::vector<double>& z,
                      int n) {
    auto Z = [&](int i) -> double* { return z.data() + static_cast<size_t>(i) * n; };
    for (int i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0.0;

    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= 1e-300 || std::abs(e[m]) <= 2.3e-16 * dd) break;
            }
            if (m != l) {
                if (iter++ == 60)
                    throw NumericError("sym_eigen: QL iteration did not converge");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = pythag(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + (g >= 0.0 ? std::abs(r) : -std::abs(r)));
                double s = 1.0, c = 1.0, p = 0.0;
                for (int i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = pythag(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    double* zi = Z(i);
                    double* zi1 = Z(i + 1);
                    for (int k = 0; k < n; ++k) {
                        f = zi1[k];
                        zi1[k] = s * zi[k] + c * f;
                        zi[k] = c * zi[k] - s * f;
                    }
                }
                if (r == 0.0 && m - 1 >= l) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
}

}  // namespace detail

struct SymEigen {
    std::vector<double> values;  // descending
    Tensor vectors;              // columns are eigenvectors, aligned with values
};

/// Full eigendecomposition of a symmetric matrix, eigenvalues sorted
/// descending. O(n^3); the input is copied.
inline SymEigen sym_eigen_desc(const Tensor& sym) {
    if (sym.rank() != 2 || sym.dim(0) != sym.dim(1))
        throw DimensionError("sym_eigen: square matrix required, got " +
                             Tensor::shape_str(sym.shape()));
    const int n = sym.dim(0);
    std::vector<double> a(sym.data(), sym.data() + n * static_cast<size_t>(n));
    std::vector<double> d, e;
    detail::tred2(a, n, d, e);

    // tred2 leaves Q with eigvec-candidates in columns; transpose to rows for
    // contiguous Givens updates, rotate, then emit columns sorted by value.
    std::vector<double> zr(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) zr[static_cast<size_t>(j) * n + i] = a[static_cast<size_t>(i) * n + j];
    detail::tql2_rows(d, e, zr, n);

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return d[x] > d[y]; });

    SymEigen out;
    out.values.resize(n);
    out.vectors = Tensor({n, n});
    for (int c = 0; c < n; ++c) {
        out.values[c] = d[order[c]];
        const double* row = zr.data() + static_cast<size_t>(order[c]) * n;
        for (int r = 0; r < n; ++r) out.vectors(r, c) = row[r];
    }
    return out;
}

}  // namespace hamred
