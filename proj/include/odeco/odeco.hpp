#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "odeco/matrix.hpp"
#include "odeco/rng.hpp"
#include "odeco/tensor.hpp"

namespace odeco {

// Orthogonally decomposable tensor in factored form: weights lambda (stored
// nonincreasing, all positive) and one column-orthonormal d_q x r factor
// matrix per mode. The rank is bounded by the smallest mode dimension.
struct OdecoDecomposition {
    int p = 0;
    int r = 0;
    std::vector<int> dims;
    std::vector<double> lambdas;
    std::vector<Matrix> factors;

    std::vector<double> component(int j, int mode) const {  // mode 1-based, j 0-based
        return factors[static_cast<std::size_t>(mode - 1)].column(j);
    }

    std::vector<std::vector<double>> component_vectors(int j) const {
        std::vector<std::vector<double>> out(static_cast<std::size_t>(p));
        for (int q = 1; q <= p; ++q) out[static_cast<std::size_t>(q - 1)] = component(j, q);
        return out;
    }
};

inline void validate(const OdecoDecomposition& dec, double ortho_tol = 1e-8) {
    if (dec.p < 2 || dec.p > 6) throw std::invalid_argument("odeco: order must be in [2,6]");
    if (static_cast<int>(dec.dims.size()) != dec.p) throw std::invalid_argument("odeco: dims/p mismatch");
    int dmin = dec.dims[0];
    for (int d : dec.dims) dmin = std::min(dmin, d);
    if (dec.r < 1 || dec.r > dmin) throw std::invalid_argument("odeco: rank must satisfy 1 <= r <= min d_q");
    if (static_cast<int>(dec.lambdas.size()) != dec.r) throw std::invalid_argument("odeco: lambda count mismatch");
    for (int j = 0; j + 1 < dec.r; ++j)
        if (dec.lambdas[static_cast<std::size_t>(j)] < dec.lambdas[static_cast<std::size_t>(j + 1)])
            throw std::invalid_argument("odeco: lambdas must be nonincreasing");
    for (double l : dec.lambdas)
        if (!(l > 0.0)) throw std::invalid_argument("odeco: lambdas must be positive");
    if (static_cast<int>(dec.factors.size()) != dec.p) throw std::invalid_argument("odeco: factor count mismatch");
    for (int q = 0; q < dec.p; ++q) {
        const Matrix& f = dec.factors[static_cast<std::size_t>(q)];
        if (f.rows != dec.dims[static_cast<std::size_t>(q)] || f.cols != dec.r)
            throw std::invalid_argument("odeco: factor shape mismatch");
        for (int a = 0; a < dec.r; ++a)
            for (int b = 0; b <= a; ++b) {
                double g = 0.0;
                for (int i = 0; i < f.rows; ++i) g += f.at(i, a) * f.at(i, b);
                const double target = (a == b) ? 1.0 : 0.0;
                if (std::abs(g - target) > ortho_tol)
                    throw std::invalid_argument("odeco: factor columns not orthonormal");
            }
    }
}

// Weight presets for instance generation.
struct LambdaSpec {
    enum class Kind { equal, geometric, explicit_list };
    Kind kind = Kind::equal;
    double value = 1.0;             // equal: the common weight; geometric: lambda_max
    double ratio = 1.0;             // geometric decay in (0,1]
    std::vector<double> values;     // explicit list

    static LambdaSpec equal(double lambda) { return {Kind::equal, lambda, 1.0, {}}; }
    static LambdaSpec geometric(double lambda_max, double ratio) {
        return {Kind::geometric, lambda_max, ratio, {}};
    }
    static LambdaSpec explicit_list(std::vector<double> v) {
        return {Kind::explicit_list, 0.0, 1.0, std::move(v)};
    }

    std::vector<double> materialize(int r) const {
        std::vector<double> out;
        switch (kind) {
            case Kind::equal:
                out.assign(static_cast<std::size_t>(r), value);
                break;
            case Kind::geometric: {
                double l = value;
                for (int j = 0; j < r; ++j) {
                    out.push_back(l);
                    l *= ratio;
                }
                break;
            }
            case Kind::explicit_list:
                out = values;
                break;
        }
        if (static_cast<int>(out.size()) != r)
            throw std::invalid_argument("LambdaSpec: wrong number of weights");
        std::sort(out.begin(), out.end(), std::greater<double>());
        return out;
    }
};

// Sum of weighted rank-one terms.
inline DenseTensor synthesize(const OdecoDecomposition& dec) {
    DenseTensor out(dec.dims);
    for (int j = 0; j < dec.r; ++j)
        add_outer_rank_one(out, dec.lambdas[static_cast<std::size_t>(j)], dec.component_vectors(j));
    return out;
}

// Haar-distributed column-orthonormal factor: QR of a standard Gaussian
// matrix via two-pass Gram-Schmidt, which fixes the R diagonal positive so
// generation is deterministic given the Gaussian stream.
inline Matrix haar_factor(int d, int r, Rng& rng) {
    for (;;) {
        Matrix g(d, r);
        for (double& x : g.data) x = rng.gaussian();
        GramSchmidtResult gs = gram_schmidt(g);
        if (gs.degenerate.empty()) return gs.q;
    }
}

inline OdecoDecomposition random_odeco(const std::vector<int>& dims, int r,
                                       const LambdaSpec& lambda_spec, std::uint64_t seed) {
    OdecoDecomposition dec;
    dec.p = static_cast<int>(dims.size());
    dec.r = r;
    dec.dims = dims;
    dec.lambdas = lambda_spec.materialize(r);
    Rng rng(seed);
    for (int d : dims) dec.factors.push_back(haar_factor(d, r, rng));
    validate(dec);
    return dec;
}

// Closed-form worked example: a d x d x d pair
//   T = lambda * sum_{k<d} e_k o e_k o e_k
//   X = lambda * sum_{k<d} (e_k + v) o e_k o e_k
// with v = e_d/sqrt(d-1) - (e_1+...+e_{d-1})/(d-1). The vectors e_k + v are
// exactly orthonormal, so X is itself odeco with the same weights. The
// perturbed factors are returned unnormalized exactly as written (they happen
// to have unit norm).
struct WorkedExample {
    DenseTensor t;
    DenseTensor x;
    OdecoDecomposition truth;
    OdecoDecomposition perturbed_truth;
    std::vector<double> v;
};

inline WorkedExample worked_example(int d, double lambda) {
    if (d < 3) throw std::invalid_argument("worked_example: d >= 3 required");
    if (!(lambda > 0.0)) throw std::invalid_argument("worked_example: lambda > 0 required");
    WorkedExample ex;
    const int r = d - 1;
    ex.v.assign(static_cast<std::size_t>(d), -1.0 / (d - 1));
    ex.v[static_cast<std::size_t>(d - 1)] = 1.0 / std::sqrt(static_cast<double>(d - 1));

    Matrix basis(d, r);
    for (int k = 0; k < r; ++k) basis.at(k, k) = 1.0;
    Matrix shifted(d, r);
    for (int k = 0; k < r; ++k) {
        for (int i = 0; i < d; ++i) shifted.at(i, k) = ex.v[static_cast<std::size_t>(i)];
        shifted.at(k, k) += 1.0;
    }

    auto make = [&](const Matrix& first) {
        OdecoDecomposition dec;
        dec.p = 3;
        dec.r = r;
        dec.dims = {d, d, d};
        dec.lambdas.assign(static_cast<std::size_t>(r), lambda);
        dec.factors = {first, basis, basis};
        return dec;
    };
    ex.truth = make(basis);
    ex.perturbed_truth = make(shifted);
    ex.t = synthesize(ex.truth);
    ex.x = synthesize(ex.perturbed_truth);
    return ex;
}

struct IncoherenceReport {
    std::vector<double> max_abs_entry_per_mode;

    // Modes whose factor satisfies max|u_ij| <= threshold.
    std::vector<int> incoherent_modes(double threshold) const {
        std::vector<int> out;
        for (std::size_t q = 0; q < max_abs_entry_per_mode.size(); ++q)
            if (max_abs_entry_per_mode[q] <= threshold) out.push_back(static_cast<int>(q) + 1);
        return out;
    }
};

inline IncoherenceReport incoherence(const OdecoDecomposition& dec) {
    IncoherenceReport rep;
    for (const Matrix& f : dec.factors) rep.max_abs_entry_per_mode.push_back(max_abs(f));
    return rep;
}

}  // namespace odeco
