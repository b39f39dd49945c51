#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "odeco/matrix.hpp"

namespace odeco {

// Thrown when a contraction that must be normalized produces the zero vector
// (orthogonal initializer, zero slice, fully deflated tensor ...).
struct degenerate_contraction_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense order-p tensor. Entries are stored mode-1-fastest: the linear index
// of (i_1,...,i_p), all 0-based, is
//     i_1 + d_1*(i_2 + d_2*(i_3 + ...)).
// Under this layout the mode-1 matricization is a pure reshape, and the
// column index of the mode-k matricization follows
//     j = 1 + sum_{l != k} (i_l - 1) J_l,   J_l = prod_{m < l, m != k} d_m
// in 1-based terms. Orders 2..6 are supported at the API surface; order-1
// values arise transiently from vector contractions.
struct DenseTensor {
    std::vector<int> dims;
    std::vector<double> data;

    DenseTensor() = default;

    explicit DenseTensor(std::vector<int> dims_in) : dims(std::move(dims_in)) {
        validate_dims(dims);
        data.assign(total_size(dims), 0.0);
    }

    DenseTensor(std::vector<int> dims_in, std::vector<double> data_in)
        : dims(std::move(dims_in)), data(std::move(data_in)) {
        validate_dims(dims);
        if (data.size() != total_size(dims))
            throw std::invalid_argument("DenseTensor: data length does not match dims");
    }

    static std::size_t total_size(const std::vector<int>& dims) {
        std::size_t n = 1;
        for (int d : dims) n *= static_cast<std::size_t>(d);
        return n;
    }

    static void validate_dims(const std::vector<int>& dims) {
        if (dims.empty() || dims.size() > 6)
            throw std::invalid_argument("DenseTensor: order must be between 1 and 6");
        for (int d : dims)
            if (d < 1) throw std::invalid_argument("DenseTensor: every dimension must be >= 1");
    }

    int order() const { return static_cast<int>(dims.size()); }
    std::size_t size() const { return data.size(); }
    int dim(int mode) const { return dims[static_cast<std::size_t>(mode - 1)]; }  // 1-based

    // 0-based multi-index access.
    double& at(const std::vector<int>& idx) { return data[linear_index(idx)]; }
    double at(const std::vector<int>& idx) const { return data[linear_index(idx)]; }

    std::size_t linear_index(const std::vector<int>& idx) const {
        if (idx.size() != dims.size()) throw std::invalid_argument("linear_index: arity mismatch");
        std::size_t lin = 0;
        std::size_t stride = 1;
        for (std::size_t m = 0; m < dims.size(); ++m) {
            const int i = idx[m];
            if (i < 0 || i >= dims[m]) throw std::out_of_range("linear_index: index out of range");
            lin += stride * static_cast<std::size_t>(i);
            stride *= static_cast<std::size_t>(dims[m]);
        }
        return lin;
    }

    bool all_finite() const {
        for (double x : data)
            if (!std::isfinite(x)) return false;
        return true;
    }
};

namespace detail {

// Split the dimension list around 1-based mode k:
// inner = prod of dims before k, outer = prod after.
inline void split_around(const std::vector<int>& dims, int k, std::size_t& inner,
                         std::size_t& dk, std::size_t& outer) {
    inner = 1;
    outer = 1;
    for (int m = 1; m < k; ++m) inner *= static_cast<std::size_t>(dims[static_cast<std::size_t>(m - 1)]);
    dk = static_cast<std::size_t>(dims[static_cast<std::size_t>(k - 1)]);
    for (int m = k + 1; m <= static_cast<int>(dims.size()); ++m)
        outer *= static_cast<std::size_t>(dims[static_cast<std::size_t>(m - 1)]);
}

inline void check_mode(const DenseTensor& t, int k) {
    if (k < 1 || k > t.order()) throw std::invalid_argument("mode out of range");
}

// In-place contraction of mode k with a vector; buf shrinks, dims loses mode k.
inline void contract_mode_raw(std::vector<double>& buf, std::vector<int>& dims, int k,
                              const double* w) {
    std::size_t inner, dk, outer;
    split_around(dims, k, inner, dk, outer);
    std::vector<double> out(inner * outer, 0.0);
    const double* src = buf.data();
    for (std::size_t b = 0; b < outer; ++b) {
        double* dst = out.data() + b * inner;
        for (std::size_t ik = 0; ik < dk; ++ik) {
            const double wk = w[ik];
            if (wk == 0.0) continue;
            const double* s = src + inner * (ik + dk * b);
            for (std::size_t a = 0; a < inner; ++a) dst[a] += wk * s[a];
        }
    }
    buf = std::move(out);
    dims.erase(dims.begin() + (k - 1));
}

}  // namespace detail

// Mode-k matricization: d_k x prod_{j != k} d_j, columns ordered by the J_l
// convention (earlier remaining modes fastest). Pure reshuffle, no arithmetic.
inline Matrix matricize(const DenseTensor& t, int k) {
    detail::check_mode(t, k);
    std::size_t inner, dk, outer;
    detail::split_around(t.dims, k, inner, dk, outer);
    Matrix out(static_cast<int>(dk), static_cast<int>(inner * outer));
    const double* src = t.data.data();
    double* dst = out.data.data();
    if (k == 1) {
        std::copy(t.data.begin(), t.data.end(), dst);
        return out;
    }
    for (std::size_t b = 0; b < outer; ++b)
        for (std::size_t ik = 0; ik < dk; ++ik) {
            const double* s = src + inner * (ik + dk * b);
            for (std::size_t a = 0; a < inner; ++a) dst[ik + dk * (a + inner * b)] = s[a];
        }
    return out;
}

// Inverse of matricize: rebuilds the tensor from its mode-k unfolding.
inline DenseTensor dematricize(const Matrix& m, int k, const std::vector<int>& dims) {
    DenseTensor t(dims);
    detail::check_mode(t, k);
    std::size_t inner, dk, outer;
    detail::split_around(dims, k, inner, dk, outer);
    if (static_cast<std::size_t>(m.rows) != dk || static_cast<std::size_t>(m.cols) != inner * outer)
        throw std::invalid_argument("dematricize: shape mismatch");
    const double* src = m.data.data();
    double* dst = t.data.data();
    if (k == 1) {
        std::copy(m.data.begin(), m.data.end(), dst);
        return t;
    }
    for (std::size_t b = 0; b < outer; ++b)
        for (std::size_t ik = 0; ik < dk; ++ik) {
            double* s = dst + inner * (ik + dk * b);
            for (std::size_t a = 0; a < inner; ++a) s[a] = src[ik + dk * (a + inner * b)];
        }
    return t;
}

// Two-mode matricization for k1 < k2. Row index linearizes (i_{k1}, i_{k2})
// with i_{k1} fastest; columns reuse the single-mode J_l convention over the
// remaining modes.
inline Matrix matricize_pair(const DenseTensor& t, int k1, int k2) {
    detail::check_mode(t, k1);
    detail::check_mode(t, k2);
    if (k1 >= k2) throw std::invalid_argument("matricize_pair: need k1 < k2");
    const std::vector<int>& dims = t.dims;
    std::size_t za = 1, zb = 1, zc = 1;
    for (int m = 1; m < k1; ++m) za *= static_cast<std::size_t>(dims[static_cast<std::size_t>(m - 1)]);
    for (int m = k1 + 1; m < k2; ++m) zb *= static_cast<std::size_t>(dims[static_cast<std::size_t>(m - 1)]);
    for (int m = k2 + 1; m <= static_cast<int>(dims.size()); ++m)
        zc *= static_cast<std::size_t>(dims[static_cast<std::size_t>(m - 1)]);
    const std::size_t d1 = static_cast<std::size_t>(dims[static_cast<std::size_t>(k1 - 1)]);
    const std::size_t d2 = static_cast<std::size_t>(dims[static_cast<std::size_t>(k2 - 1)]);
    Matrix out(static_cast<int>(d1 * d2), static_cast<int>(za * zb * zc));
    const double* src = t.data.data();
    for (std::size_t c = 0; c < zc; ++c)
        for (std::size_t i2 = 0; i2 < d2; ++i2)
            for (std::size_t b = 0; b < zb; ++b)
                for (std::size_t i1 = 0; i1 < d1; ++i1) {
                    const double* s = src + za * (i1 + d1 * (b + zb * (i2 + d2 * c)));
                    const std::size_t row = i1 + d1 * i2;
                    const std::size_t colbase = b + zb * c;
                    for (std::size_t a = 0; a < za; ++a)
                        out.data[row + d1 * d2 * (a + za * colbase)] = s[a];
                }
    return out;
}

// T x_k M with M of shape m x d_k. The mode survives with new size m unless
// m == 1, in which case it is dropped and the order shrinks by one.
inline DenseTensor mode_multiply(const DenseTensor& t, int k, const Matrix& m) {
    detail::check_mode(t, k);
    if (m.cols != t.dim(k)) throw std::invalid_argument("mode_multiply: dimension mismatch");
    std::size_t inner, dk, outer;
    detail::split_around(t.dims, k, inner, dk, outer);
    if (m.rows == 1) {
        std::vector<double> buf = t.data;
        std::vector<int> dims = t.dims;
        if (dims.size() == 1) throw std::invalid_argument("mode_multiply: cannot drop the last mode");
        detail::contract_mode_raw(buf, dims, k, m.data.data());
        return DenseTensor(std::move(dims), std::move(buf));
    }
    std::vector<int> out_dims = t.dims;
    out_dims[static_cast<std::size_t>(k - 1)] = m.rows;
    DenseTensor out(out_dims);
    const std::size_t mr = static_cast<std::size_t>(m.rows);
    const double* src = t.data.data();
    double* dst = out.data.data();
    for (std::size_t b = 0; b < outer; ++b)
        for (std::size_t ik = 0; ik < dk; ++ik) {
            const double* s = src + inner * (ik + dk * b);
            for (std::size_t j = 0; j < mr; ++j) {
                const double coef = m.at(static_cast<int>(j), static_cast<int>(ik));
                if (coef == 0.0) continue;
                double* d = dst + inner * (j + mr * b);
                for (std::size_t a = 0; a < inner; ++a) d[a] += coef * s[a];
            }
        }
    return out;
}

// Contract mode k with a vector, dropping the mode.
inline DenseTensor contract_mode(const DenseTensor& t, int k, const std::vector<double>& w) {
    detail::check_mode(t, k);
    if (static_cast<int>(w.size()) != t.dim(k))
        throw std::invalid_argument("contract_mode: dimension mismatch");
    if (t.order() == 1) throw std::invalid_argument("contract_mode: cannot drop the last mode");
    std::vector<double> buf = t.data;
    std::vector<int> dims = t.dims;
    detail::contract_mode_raw(buf, dims, k, w.data());
    return DenseTensor(std::move(dims), std::move(buf));
}

// Contract every mode except `keep` (1-based) with the given unit vectors;
// vecs[q-1] is used for mode q and vecs[keep-1] is ignored. This is the power
// iteration hot path.
inline std::vector<double> contract_all_but(const DenseTensor& t, int keep,
                                            const std::vector<std::vector<double>>& vecs) {
    detail::check_mode(t, keep);
    if (static_cast<int>(vecs.size()) != t.order())
        throw std::invalid_argument("contract_all_but: need one vector per mode");
    std::vector<double> buf = t.data;
    std::vector<int> dims = t.dims;
    // Contracting in descending mode order never shifts the position of a
    // lower mode, so mode m always sits at slot m of the working dims.
    for (int m = t.order(); m >= 1; --m) {
        if (m == keep) continue;
        const std::vector<double>& w = vecs[static_cast<std::size_t>(m - 1)];
        if (static_cast<int>(w.size()) != t.dim(m))
            throw std::invalid_argument("contract_all_but: dimension mismatch");
        detail::contract_mode_raw(buf, dims, m, w.data());
    }
    return buf;
}

// Full contraction <T, u1 o ... o up>.
inline double contract_full(const DenseTensor& t, const std::vector<std::vector<double>>& vecs) {
    if (static_cast<int>(vecs.size()) != t.order())
        throw std::invalid_argument("contract_full: need one vector per mode");
    std::vector<double> buf = t.data;
    std::vector<int> dims = t.dims;
    for (int m = t.order(); m >= 2; --m) {
        if (static_cast<int>(vecs[static_cast<std::size_t>(m - 1)].size()) != t.dim(m))
            throw std::invalid_argument("contract_full: dimension mismatch");
        detail::contract_mode_raw(buf, dims, m, vecs[static_cast<std::size_t>(m - 1)].data());
    }
    double s = 0.0;
    const std::vector<double>& w = vecs[0];
    for (std::size_t i = 0; i < buf.size(); ++i) s += buf[i] * w[i];
    return s;
}

// Contract modes k1 < k2 jointly with a vector of length d_{k1}*d_{k2},
// linearized i_{k1}-fastest (the matricize_pair row order).
inline DenseTensor contract_pair(const DenseTensor& t, int k1, int k2,
                                 const std::vector<double>& z) {
    detail::check_mode(t, k1);
    detail::check_mode(t, k2);
    if (k1 >= k2) throw std::invalid_argument("contract_pair: need k1 < k2");
    const std::size_t d1 = static_cast<std::size_t>(t.dim(k1));
    const std::size_t d2 = static_cast<std::size_t>(t.dim(k2));
    if (z.size() != d1 * d2) throw std::invalid_argument("contract_pair: vector length mismatch");
    if (t.order() < 3) throw std::invalid_argument("contract_pair: order too small");
    // Contract k2 rows of the reshaped vector one mode at a time: first mode
    // k2 against each fixed i_{k1} would not factor, so do it directly.
    std::vector<int> out_dims;
    for (int m = 1; m <= t.order(); ++m)
        if (m != k1 && m != k2) out_dims.push_back(t.dim(m));
    DenseTensor out(out_dims);
    std::size_t za = 1, zb = 1, zc = 1;
    for (int m = 1; m < k1; ++m) za *= static_cast<std::size_t>(t.dim(m));
    for (int m = k1 + 1; m < k2; ++m) zb *= static_cast<std::size_t>(t.dim(m));
    for (int m = k2 + 1; m <= t.order(); ++m) zc *= static_cast<std::size_t>(t.dim(m));
    const double* src = t.data.data();
    double* dst = out.data.data();
    for (std::size_t c = 0; c < zc; ++c)
        for (std::size_t i2 = 0; i2 < d2; ++i2)
            for (std::size_t b = 0; b < zb; ++b)
                for (std::size_t i1 = 0; i1 < d1; ++i1) {
                    const double w = z[i1 + d1 * i2];
                    if (w == 0.0) continue;
                    const double* s = src + za * (i1 + d1 * (b + zb * (i2 + d2 * c)));
                    double* d = dst + za * (b + zb * c);
                    for (std::size_t a = 0; a < za; ++a) d[a] += w * s[a];
                }
    return out;
}

// out += weight * u1 o ... o up (accumulating form used by synthesis and
// deflation to avoid temporaries). The mode-1 run is contiguous, so the
// inner loop is a plain axpy.
inline void add_outer_rank_one(DenseTensor& out, double weight,
                               const std::vector<std::vector<double>>& vectors) {
    if (static_cast<int>(vectors.size()) != out.order())
        throw std::invalid_argument("add_outer_rank_one: arity mismatch");
    for (int m = 1; m <= out.order(); ++m)
        if (static_cast<int>(vectors[static_cast<std::size_t>(m - 1)].size()) != out.dim(m))
            throw std::invalid_argument("add_outer_rank_one: dimension mismatch");
    if (weight == 0.0) return;
    const std::size_t d1 = static_cast<std::size_t>(out.dims[0]);
    const std::size_t n_outer = out.size() / d1;
    const int p = out.order();
    std::vector<int> idx(static_cast<std::size_t>(p), 0);  // idx[0] unused
    const double* u1 = vectors[0].data();
    for (std::size_t b = 0; b < n_outer; ++b) {
        double coef = weight;
        for (int m = 2; m <= p; ++m)
            coef *= vectors[static_cast<std::size_t>(m - 1)][static_cast<std::size_t>(idx[static_cast<std::size_t>(m - 1)])];
        double* dst = out.data.data() + b * d1;
        if (coef != 0.0)
            for (std::size_t a = 0; a < d1; ++a) dst[a] += coef * u1[a];
        for (std::size_t m = 1; m < idx.size(); ++m) {
            if (++idx[m] < out.dims[m]) break;
            idx[m] = 0;
        }
    }
}

// weight * u1 o u2 o ... o up.
inline DenseTensor outer_rank_one(double weight, const std::vector<std::vector<double>>& vectors) {
    std::vector<int> dims;
    dims.reserve(vectors.size());
    for (const auto& v : vectors) dims.push_back(static_cast<int>(v.size()));
    DenseTensor out(dims);
    add_outer_rank_one(out, weight, vectors);
    return out;
}

inline double inner(const DenseTensor& a, const DenseTensor& b) {
    if (a.dims != b.dims) throw std::invalid_argument("inner: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

inline double frobenius_norm(const DenseTensor& t) {
    double s = 0.0;
    for (double x : t.data) s += x * x;
    return std::sqrt(s);
}

inline DenseTensor add(const DenseTensor& a, const DenseTensor& b) {
    if (a.dims != b.dims) throw std::invalid_argument("add: dimension mismatch");
    DenseTensor out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

inline DenseTensor subtract(const DenseTensor& a, const DenseTensor& b) {
    if (a.dims != b.dims) throw std::invalid_argument("subtract: dimension mismatch");
    DenseTensor out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
    return out;
}

inline DenseTensor scale(const DenseTensor& a, double s) {
    DenseTensor out = a;
    for (double& x : out.data) x *= s;
    return out;
}

}  // namespace odeco
