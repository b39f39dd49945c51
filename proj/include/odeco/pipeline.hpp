#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "odeco/decompose.hpp"
#include "odeco/initialization.hpp"
#include "odeco/odeco.hpp"
#include "odeco/rng.hpp"

namespace odeco {

// Oracle initializer: the true component, in truth order.
inline Initializer make_oracle_initializer(const OdecoDecomposition& truth) {
    return [truth](const DenseTensor&, int j) {
        if (j >= truth.r) throw std::invalid_argument("oracle initializer: component out of range");
        return truth.component_vectors(j);
    };
}

// Truth tilted by a fixed sin-angle inside each mode's orthocomplement:
// init = sqrt(1 - s^2) u + s w with w random, w perp u, so the starting
// sin-angle is exactly `sin_angle` per mode.
inline Initializer make_perturbed_oracle_initializer(const OdecoDecomposition& truth,
                                                     double sin_angle, std::uint64_t seed) {
    if (!(sin_angle >= 0.0 && sin_angle < 1.0))
        throw std::invalid_argument("perturbed oracle: sin_angle in [0,1) required");
    return [truth, sin_angle, seed](const DenseTensor&, int j) {
        if (j >= truth.r) throw std::invalid_argument("perturbed oracle: component out of range");
        Rng rng(derive_stream(seed, static_cast<std::uint64_t>(j)));
        std::vector<std::vector<double>> out = truth.component_vectors(j);
        const double c = std::sqrt(1.0 - sin_angle * sin_angle);
        for (auto& u : out) {
            std::vector<double> w;
            for (;;) {
                w = rng.unit_vector(static_cast<int>(u.size()));
                const double proj = dot(w, u);
                for (std::size_t i = 0; i < w.size(); ++i) w[i] -= proj * u[i];
                const double nw = norm2(w);
                if (nw > 1e-12) {
                    for (double& v : w) v /= nw;
                    break;
                }
            }
            for (std::size_t i = 0; i < u.size(); ++i) u[i] = c * u[i] + sin_angle * w[i];
        }
        return out;
    };
}

// Uniform random unit start per mode. Baseline strategy only; it carries the
// d^{(p-2)/2} signal requirement.
inline Initializer make_random_initializer(std::uint64_t seed) {
    return [seed](const DenseTensor& x, int j) {
        Rng rng(derive_stream(seed, static_cast<std::uint64_t>(j)));
        std::vector<std::vector<double>> out;
        for (int q = 1; q <= x.order(); ++q) out.push_back(rng.unit_vector(x.dim(q)));
        return out;
    };
}

// Random-slicing initializer (general strategy). Runs on the deflated tensor
// at every step; the HOSVD rank shrinks with the remaining components.
// L < 1 means the 2 r^2 log d default.
inline Initializer make_general_slicing_initializer(int r, int L, std::uint64_t seed) {
    return [r, L, seed](const DenseTensor& x, int j) {
        const int remaining = std::max(1, r - j);
        int dmax = 0;
        for (int d : x.dims) dmax = std::max(dmax, d);
        const int trials = L >= 1 ? L : default_slice_count(remaining, dmax);
        InitializationResult init =
            initialize_general(x, remaining, trials, derive_stream(seed, static_cast<std::uint64_t>(j)));
        return init.vectors;
    };
}

// Sample-split slicing initializer (incoherent strategy, p >= 4).
inline Initializer make_incoherent_slicing_initializer(int r, int L, std::uint64_t seed) {
    return [r, L, seed](const DenseTensor& x, int j) {
        const int remaining = std::max(1, r - j);
        int dmax = 0;
        for (int d : x.dims) dmax = std::max(dmax, d);
        const int trials = L >= 1 ? L : default_slice_count(remaining, dmax);
        InitializationResult init = initialize_incoherent(x, remaining, trials,
                                                          derive_stream(seed, static_cast<std::uint64_t>(j)));
        return init.vectors;
    };
}

// Deflation pipeline that also keeps each step's initial vectors so init
// quality can be scored separately from the final estimates.
struct PipelineRun {
    EstimatedDecomposition estimate;
    std::vector<std::vector<std::vector<double>>> inits;  // [component][mode]
};

inline PipelineRun run_deflation_pipeline(const DenseTensor& x, int r, const Initializer& inner,
                                          int iters = -1, bool keep_residual = false) {
    PipelineRun run;
    run.inits.resize(static_cast<std::size_t>(r));
    Initializer recording = [&run, &inner](const DenseTensor& t, int j) {
        std::vector<std::vector<double>> v = inner(t, j);
        run.inits[static_cast<std::size_t>(j)] = v;
        return v;
    };
    run.estimate = decompose_with_deflation(x, r, recording, iters, keep_residual);
    return run;
}

}  // namespace odeco
