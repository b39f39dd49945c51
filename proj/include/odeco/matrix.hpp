#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace odeco {

// Dense matrix, column-major storage (entry (i,j) at data[i + rows*j]).
// Column-major matches the tensor linearization, so mode-1 matricization is
// a pure reshape of the tensor buffer.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {
        if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative dimension");
    }

    double& at(int i, int j) { return data[static_cast<std::size_t>(i) + static_cast<std::size_t>(rows) * j]; }
    double at(int i, int j) const { return data[static_cast<std::size_t>(i) + static_cast<std::size_t>(rows) * j]; }

    double* col(int j) { return data.data() + static_cast<std::size_t>(rows) * j; }
    const double* col(int j) const { return data.data() + static_cast<std::size_t>(rows) * j; }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }

    std::vector<double> column(int j) const {
        return std::vector<double>(col(j), col(j) + rows);
    }
    void set_column(int j, const std::vector<double>& v) {
        if (static_cast<int>(v.size()) != rows) throw std::invalid_argument("set_column: length mismatch");
        std::copy(v.begin(), v.end(), col(j));
    }
};

inline Matrix transpose(const Matrix& m) {
    Matrix t(m.cols, m.rows);
    for (int j = 0; j < m.cols; ++j)
        for (int i = 0; i < m.rows; ++i) t.at(j, i) = m.at(i, j);
    return t;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dimension mismatch");
    Matrix c(a.rows, b.cols);
    for (int j = 0; j < b.cols; ++j) {
        const double* bj = b.col(j);
        double* cj = c.col(j);
        for (int k = 0; k < a.cols; ++k) {
            const double bkj = bj[k];
            if (bkj == 0.0) continue;
            const double* ak = a.col(k);
            for (int i = 0; i < a.rows; ++i) cj[i] += ak[i] * bkj;
        }
    }
    return c;
}

inline std::vector<double> matvec(const Matrix& a, const std::vector<double>& x) {
    if (a.cols != static_cast<int>(x.size())) throw std::invalid_argument("matvec: dimension mismatch");
    std::vector<double> y(static_cast<std::size_t>(a.rows), 0.0);
    for (int k = 0; k < a.cols; ++k) {
        const double xk = x[static_cast<std::size_t>(k)];
        if (xk == 0.0) continue;
        const double* ak = a.col(k);
        for (int i = 0; i < a.rows; ++i) y[static_cast<std::size_t>(i)] += ak[i] * xk;
    }
    return y;
}

inline std::vector<double> matvec_transposed(const Matrix& a, const std::vector<double>& x) {
    if (a.rows != static_cast<int>(x.size())) throw std::invalid_argument("matvec_transposed: dimension mismatch");
    std::vector<double> y(static_cast<std::size_t>(a.cols), 0.0);
    for (int j = 0; j < a.cols; ++j) {
        const double* aj = a.col(j);
        double s = 0.0;
        for (int i = 0; i < a.rows; ++i) s += aj[i] * x[static_cast<std::size_t>(i)];
        y[static_cast<std::size_t>(j)] = s;
    }
    return y;
}

inline double frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (double x : m.data) s += x * x;
    return std::sqrt(s);
}

inline double max_abs(const Matrix& m) {
    double s = 0.0;
    for (double x : m.data) s = std::max(s, std::abs(x));
    return s;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

inline void normalize_in_place(std::vector<double>& a) {
    const double n = norm2(a);
    if (n == 0.0) throw std::runtime_error("normalize: zero vector");
    for (double& x : a) x /= n;
}

inline std::vector<double> normalized(std::vector<double> a) {
    normalize_in_place(a);
    return a;
}

// Column-wise Kronecker (Khatri-Rao) product. Row ordering puts the FIRST
// factor's index fastest: out[ia + a.rows*ib, c] = a(ia,c) * b(ib,c). This is
// the ordering under which the mode-q matricization of an orthogonally
// decomposable tensor factors as U^(q) diag(lambda) (U^(1) kr ... kr U^(p))^T
// over the remaining modes in increasing order.
inline Matrix khatri_rao(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) throw std::invalid_argument("khatri_rao: column count mismatch");
    Matrix out(a.rows * b.rows, a.cols);
    for (int c = 0; c < a.cols; ++c) {
        const double* ac = a.col(c);
        const double* bc = b.col(c);
        double* oc = out.col(c);
        for (int ib = 0; ib < b.rows; ++ib)
            for (int ia = 0; ia < a.rows; ++ia) oc[ia + a.rows * ib] = ac[ia] * bc[ib];
    }
    return out;
}

struct GramSchmidtResult {
    Matrix q;                       // column-orthonormal; degenerate columns zeroed
    std::vector<int> degenerate;    // indices of columns that collapsed
};

// Two-pass modified Gram-Schmidt, left to right. A column whose residual norm
// falls below tol * (its initial norm) is flagged degenerate and zeroed; we
// report the collapse instead of re-randomizing.
inline GramSchmidtResult gram_schmidt(const Matrix& columns, double tol = 1e-8) {
    if (columns.cols > columns.rows)
        throw std::invalid_argument("gram_schmidt: more columns than rows");
    GramSchmidtResult res;
    res.q = columns;
    Matrix& q = res.q;
    std::vector<bool> ok(static_cast<std::size_t>(q.cols), false);
    for (int j = 0; j < q.cols; ++j) {
        double* vj = q.col(j);
        double initial = 0.0;
        for (int i = 0; i < q.rows; ++i) initial += vj[i] * vj[i];
        initial = std::sqrt(initial);
        for (int pass = 0; pass < 2; ++pass) {
            for (int k = 0; k < j; ++k) {
                if (!ok[static_cast<std::size_t>(k)]) continue;
                const double* vk = q.col(k);
                double proj = 0.0;
                for (int i = 0; i < q.rows; ++i) proj += vk[i] * vj[i];
                for (int i = 0; i < q.rows; ++i) vj[i] -= proj * vk[i];
            }
        }
        double nrm = 0.0;
        for (int i = 0; i < q.rows; ++i) nrm += vj[i] * vj[i];
        nrm = std::sqrt(nrm);
        if (nrm <= tol * initial || nrm == 0.0) {
            res.degenerate.push_back(j);
            for (int i = 0; i < q.rows; ++i) vj[i] = 0.0;
        } else {
            for (int i = 0; i < q.rows; ++i) vj[i] /= nrm;
            ok[static_cast<std::size_t>(j)] = true;
        }
    }
    return res;
}

}  // namespace odeco
