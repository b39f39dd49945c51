#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "odeco/matrix.hpp"

namespace odeco {

struct SvdResult {
    Matrix u;                // m x k, orthonormal columns
    std::vector<double> s;   // k = min(m,n) singular values, nonincreasing
    Matrix v;                // n x k, orthonormal columns
};

namespace detail {

// Orthonormal completion for columns whose singular value vanished: greedily
// orthogonalize canonical basis vectors against the already-filled columns.
inline void complete_orthonormal(Matrix& u, int from_col) {
    const int m = u.rows;
    int next_basis = 0;
    for (int j = from_col; j < u.cols; ++j) {
        for (; next_basis <= m; ++next_basis) {
            if (next_basis == m) throw std::runtime_error("svd: basis completion failed");
            std::vector<double> v(static_cast<std::size_t>(m), 0.0);
            v[static_cast<std::size_t>(next_basis)] = 1.0;
            for (int pass = 0; pass < 2; ++pass)
                for (int k = 0; k < j; ++k) {
                    const double* uk = u.col(k);
                    double proj = 0.0;
                    for (int i = 0; i < m; ++i) proj += uk[i] * v[static_cast<std::size_t>(i)];
                    for (int i = 0; i < m; ++i) v[static_cast<std::size_t>(i)] -= proj * uk[i];
                }
            const double nrm = norm2(v);
            if (nrm > 0.5) {
                for (int i = 0; i < m; ++i) u.at(i, j) = v[static_cast<std::size_t>(i)] / nrm;
                ++next_basis;
                break;
            }
        }
    }
}

// One-sided Jacobi on a tall matrix (rows >= cols). Columns of `a` are
// rotated until mutually orthogonal; accumulated rotations give V.
inline SvdResult jacobi_svd_tall(Matrix a) {
    const int m = a.rows, n = a.cols;
    Matrix v = Matrix::identity(n);
    const double eps = 1e-15;
    const int max_sweeps = 60;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_off = 0.0;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double* cp = a.col(p);
                double* cq = a.col(q);
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (int i = 0; i < m; ++i) {
                    app += cp[i] * cp[i];
                    aqq += cq[i] * cq[i];
                    apq += cp[i] * cq[i];
                }
                const double denom = std::sqrt(app * aqq);
                if (denom == 0.0) continue;
                const double off = std::abs(apq) / denom;
                max_off = std::max(max_off, off);
                if (off <= eps) continue;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = cs * t;
                for (int i = 0; i < m; ++i) {
                    const double xp = cp[i], xq = cq[i];
                    cp[i] = cs * xp - sn * xq;
                    cq[i] = sn * xp + cs * xq;
                }
                double* vp = v.col(p);
                double* vq = v.col(q);
                for (int i = 0; i < n; ++i) {
                    const double xp = vp[i], xq = vq[i];
                    vp[i] = cs * xp - sn * xq;
                    vq[i] = sn * xp + cs * xq;
                }
            }
        }
        if (max_off <= eps) break;
    }

    SvdResult res;
    res.s.assign(static_cast<std::size_t>(n), 0.0);
    res.u = Matrix(m, n);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> norms(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        const double* cj = a.col(j);
        for (int i = 0; i < m; ++i) s += cj[i] * cj[i];
        norms[static_cast<std::size_t>(j)] = std::sqrt(s);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](int x, int y) { return norms[static_cast<std::size_t>(x)] > norms[static_cast<std::size_t>(y)]; });
    Matrix vs(n, n);
    double smax = 0.0;
    for (double x : norms) smax = std::max(smax, x);
    const double tiny = smax * 1e-300 + 1e-300;
    int rank = 0;
    for (int j = 0; j < n; ++j) {
        const int src = order[static_cast<std::size_t>(j)];
        const double sj = norms[static_cast<std::size_t>(src)];
        res.s[static_cast<std::size_t>(j)] = sj;
        for (int i = 0; i < n; ++i) vs.at(i, j) = v.at(i, src);
        if (sj > tiny) {
            const double inv = 1.0 / sj;
            for (int i = 0; i < m; ++i) res.u.at(i, j) = a.at(i, src) * inv;
            rank = j + 1;
        }
    }
    if (rank < n) complete_orthonormal(res.u, rank);
    res.v = std::move(vs);
    return res;
}

}  // namespace detail

// Dense SVD: m = U diag(s) V^T with orthonormal U, V and s nonincreasing.
// One-sided Jacobi; the wide case is handled by factoring the transpose.
inline SvdResult svd(const Matrix& m) {
    for (double x : m.data)
        if (!std::isfinite(x)) throw std::invalid_argument("svd: non-finite input");
    if (m.rows == 0 || m.cols == 0) throw std::invalid_argument("svd: empty matrix");
    if (m.rows >= m.cols) return detail::jacobi_svd_tall(m);
    SvdResult t = detail::jacobi_svd_tall(transpose(m));
    std::swap(t.u, t.v);
    return t;
}

inline std::vector<double> singular_values(const Matrix& m) { return svd(m).s; }

// Symmetric eigendecomposition by cyclic Jacobi. Eigenvalues nonincreasing.
struct SymEigResult {
    Matrix vectors;               // orthonormal columns
    std::vector<double> values;
};

inline SymEigResult sym_eig(Matrix a) {
    if (a.rows != a.cols) throw std::invalid_argument("sym_eig: not square");
    const int n = a.rows;
    Matrix v = Matrix::identity(n);
    const double eps = 1e-14;
    double scale = max_abs(a);
    if (scale == 0.0) scale = 1.0;
    for (int sweep = 0; sweep < 60; ++sweep) {
        double max_off = 0.0;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a.at(p, q);
                max_off = std::max(max_off, std::abs(apq));
                if (std::abs(apq) <= eps * scale) continue;
                const double zeta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = cs * t;
                for (int i = 0; i < n; ++i) {
                    const double xp = a.at(i, p), xq = a.at(i, q);
                    a.at(i, p) = cs * xp - sn * xq;
                    a.at(i, q) = sn * xp + cs * xq;
                }
                for (int i = 0; i < n; ++i) {
                    const double xp = a.at(p, i), xq = a.at(q, i);
                    a.at(p, i) = cs * xp - sn * xq;
                    a.at(q, i) = sn * xp + cs * xq;
                }
                for (int i = 0; i < n; ++i) {
                    const double xp = v.at(i, p), xq = v.at(i, q);
                    v.at(i, p) = cs * xp - sn * xq;
                    v.at(i, q) = sn * xp + cs * xq;
                }
            }
        }
        if (max_off <= eps * scale) break;
    }
    SymEigResult res;
    res.values.assign(static_cast<std::size_t>(n), 0.0);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> diag(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) diag[static_cast<std::size_t>(i)] = a.at(i, i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int x, int y) { return diag[static_cast<std::size_t>(x)] > diag[static_cast<std::size_t>(y)]; });
    res.vectors = Matrix(n, n);
    for (int j = 0; j < n; ++j) {
        res.values[static_cast<std::size_t>(j)] = diag[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])];
        for (int i = 0; i < n; ++i) res.vectors.at(i, j) = v.at(i, order[static_cast<std::size_t>(j)]);
    }
    return res;
}

// Top-k left singular vectors and singular values through the Gram matrix
// M M^T. Half the digits of a direct SVD, which is ample for projector
// estimates and baseline reports on wide matricizations; the svd() contract
// above stays the accurate route.
struct GramSpectral {
    Matrix vectors;               // rows(m) x k
    std::vector<double> values;   // singular values, nonincreasing
};

inline GramSpectral left_singular_via_gram(const Matrix& m, int k) {
    const int d = m.rows;
    if (k < 1 || k > d) throw std::invalid_argument("left_singular_via_gram: bad k");
    Matrix g(d, d);
    for (int c = 0; c < m.cols; ++c) {
        const double* mc = m.col(c);
        for (int j = 0; j < d; ++j) {
            const double mj = mc[j];
            if (mj == 0.0) continue;
            double* gj = g.col(j);
            for (int i = 0; i < d; ++i) gj[i] += mc[i] * mj;
        }
    }
    SymEigResult eig = sym_eig(g);
    GramSpectral res;
    res.vectors = Matrix(d, k);
    res.values.assign(static_cast<std::size_t>(k), 0.0);
    for (int j = 0; j < k; ++j) {
        res.values[static_cast<std::size_t>(j)] = std::sqrt(std::max(0.0, eig.values[static_cast<std::size_t>(j)]));
        for (int i = 0; i < d; ++i) res.vectors.at(i, j) = eig.vectors.at(i, j);
    }
    return res;
}

inline double spectral_norm_matrix(const Matrix& m) {
    if (std::min(m.rows, m.cols) <= 0) throw std::invalid_argument("spectral_norm_matrix: empty");
    const Matrix& a = m;
    if (std::max(a.rows, a.cols) <= 4 * std::min(a.rows, a.cols)) return svd(a).s[0];
    // Very wide/tall: Gram route on the short side.
    if (a.rows <= a.cols) return left_singular_via_gram(a, 1).values[0];
    return left_singular_via_gram(transpose(a), 1).values[0];
}

}  // namespace odeco
