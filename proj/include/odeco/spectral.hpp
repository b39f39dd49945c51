#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "odeco/rng.hpp"
#include "odeco/tensor.hpp"

namespace odeco {

struct RankOneApprox {
    double value = 0.0;                           // best |<T, u1 o ... o up>| found
    std::vector<std::vector<double>> vectors;     // maximizing unit vectors
    int restarts_used = 0;
};

// Best rank-one correlation found by `restarts` independent runs of
// alternating power iteration from uniform random unit starts. The returned
// value is a lower bound on the spectral norm ||T||; for odeco and
// low-rank-plus-noise tensors at the default restart count it is exact with
// high probability. Iteration stops early once the form value changes by
// less than tol relatively.
inline RankOneApprox rank_one_approx(const DenseTensor& t, int restarts, int iters,
                                     std::uint64_t seed, double tol = 1e-12) {
    if (restarts < 1) throw std::invalid_argument("rank_one_approx: restarts >= 1 required");
    const int p = t.order();
    RankOneApprox best;
    bool all_zero = true;
    for (double x : t.data)
        if (x != 0.0) {
            all_zero = false;
            break;
        }
    if (all_zero) {
        best.vectors.resize(static_cast<std::size_t>(p));
        for (int q = 1; q <= p; ++q) {
            best.vectors[static_cast<std::size_t>(q - 1)].assign(static_cast<std::size_t>(t.dim(q)), 0.0);
            best.vectors[static_cast<std::size_t>(q - 1)][0] = 1.0;
        }
        return best;  // zero tensor -> 0
    }

    for (int r = 0; r < restarts; ++r) {
        Rng rng(derive_stream(seed, static_cast<std::uint64_t>(r)));
        std::vector<std::vector<double>> u(static_cast<std::size_t>(p));
        for (int q = 1; q <= p; ++q) u[static_cast<std::size_t>(q - 1)] = rng.unit_vector(t.dim(q));
        double prev = 0.0;
        double value = 0.0;
        bool dead = false;
        for (int it = 0; it < iters; ++it) {
            for (int q = 1; q <= p; ++q) {
                std::vector<double> v = contract_all_but(t, q, u);
                const double nv = norm2(v);
                if (nv == 0.0) {
                    dead = true;
                    break;
                }
                for (double& x : v) x /= nv;
                u[static_cast<std::size_t>(q - 1)] = std::move(v);
                value = nv;
            }
            if (dead) break;
            if (it > 0 && std::abs(value - prev) <= tol * std::max(1.0, std::abs(value))) break;
            prev = value;
        }
        if (dead) continue;
        const double form = std::abs(contract_full(t, u));
        if (form > best.value) {
            best.value = form;
            best.vectors = u;
        }
        best.restarts_used = r + 1;
    }
    if (best.vectors.empty()) {
        // every restart hit a zero contraction; report 0 with canonical axes
        best.vectors.resize(static_cast<std::size_t>(p));
        for (int q = 1; q <= p; ++q) {
            best.vectors[static_cast<std::size_t>(q - 1)].assign(static_cast<std::size_t>(t.dim(q)), 0.0);
            best.vectors[static_cast<std::size_t>(q - 1)][0] = 1.0;
        }
    }
    return best;
}

inline int default_spectral_restarts(const DenseTensor& t) { return 10 * t.order(); }

// Spectral norm estimate with the library defaults: restarts = 10p,
// iters = 100, relative tolerance 1e-12. Documented lower bound on ||T||.
inline double spectral_norm_estimate(const DenseTensor& t, int restarts, int iters,
                                     std::uint64_t seed, double tol = 1e-12) {
    return rank_one_approx(t, restarts, iters, seed, tol).value;
}

inline double spectral_norm_estimate(const DenseTensor& t, std::uint64_t seed = 0x5eedULL) {
    return spectral_norm_estimate(t, default_spectral_restarts(t), 100, seed);
}

}  // namespace odeco
