#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "odeco/odeco.hpp"
#include "odeco/rng.hpp"
#include "odeco/spectral.hpp"
#include "odeco/svd.hpp"
#include "odeco/tensor.hpp"

namespace odeco {

// Noise ensemble description. student_t is rescaled to unit variance; df in
// (4, 8] is only allowed behind allow_heavy (the eighth moment the theory
// wants no longer exists there), df <= 4 is always rejected.
struct NoiseSpec {
    enum class Family { gaussian_iid, student_t_iid, rank_one_spike };
    Family family = Family::gaussian_iid;
    double sigma = 1.0;        // gaussian scale
    double df = 9.0;           // student_t degrees of freedom
    bool allow_heavy = false;
    double lambda_noise = 1.0; // spike weight
    std::uint64_t seed = 0;

    static NoiseSpec gaussian(double sigma, std::uint64_t seed) {
        NoiseSpec s;
        s.family = Family::gaussian_iid;
        s.sigma = sigma;
        s.seed = seed;
        return s;
    }
    static NoiseSpec student_t(double df, std::uint64_t seed, bool allow_heavy = false) {
        NoiseSpec s;
        s.family = Family::student_t_iid;
        s.df = df;
        s.allow_heavy = allow_heavy;
        s.seed = seed;
        return s;
    }
    static NoiseSpec rank_one_spike(double lambda_noise, std::uint64_t seed) {
        NoiseSpec s;
        s.family = Family::rank_one_spike;
        s.lambda_noise = lambda_noise;
        s.seed = seed;
        return s;
    }
};

// Draw an error tensor. For rank_one_spike the spike direction is the first
// component of `align` when given, otherwise a seeded random rank-one
// direction.
inline DenseTensor sample_noise(const std::vector<int>& dims, const NoiseSpec& spec,
                                const OdecoDecomposition* align = nullptr) {
    DenseTensor e(dims);
    Rng rng(spec.seed);
    switch (spec.family) {
        case NoiseSpec::Family::gaussian_iid:
            if (!(spec.sigma >= 0.0)) throw std::invalid_argument("sample_noise: sigma must be >= 0");
            if (spec.sigma > 0.0)
                for (double& x : e.data) x = spec.sigma * rng.gaussian();
            return e;
        case NoiseSpec::Family::student_t_iid: {
            if (spec.df <= 4.0) throw std::invalid_argument("sample_noise: student_t df <= 4 rejected");
            if (spec.df <= 8.0 && !spec.allow_heavy)
                throw std::invalid_argument(
                    "sample_noise: student_t with df <= 8 requires allow_heavy");
            for (double& x : e.data) x = rng.student_t_unit_variance(spec.df);
            return e;
        }
        case NoiseSpec::Family::rank_one_spike: {
            std::vector<std::vector<double>> u;
            if (align != nullptr) {
                if (align->dims != dims)
                    throw std::invalid_argument("sample_noise: alignment dims mismatch");
                u = align->component_vectors(0);
            } else {
                for (int d : dims) u.push_back(rng.unit_vector(d));
            }
            add_outer_rank_one(e, spec.lambda_noise, u);
            return e;
        }
    }
    throw std::logic_error("sample_noise: unknown family");
}

// The ground-truth-relative error functionals. eps0 contracts every mode with
// a true component, eps1 leaves one mode free (vector 2-norm), eps2 leaves two
// modes free (matrix spectral norm, exact via svd of the d x d slice).
// spectral_norm_est is the tensor_core power-iteration estimate of ||E||,
// a documented lower bound.
struct NoiseDiagnostics {
    double eps0 = 0.0;
    double eps1 = 0.0;
    double eps2 = 0.0;
    double spectral_norm_est = 0.0;

    struct ComponentDetail {
        int component = 0;  // 0-based
        double eps0 = 0.0;
        double eps1 = 0.0;  // max over the free mode
        double eps2 = 0.0;  // max over free mode pairs
    };
    std::vector<ComponentDetail> per_component;
};

inline NoiseDiagnostics error_functionals(const DenseTensor& e, const OdecoDecomposition& truth,
                                          std::uint64_t norm_seed = 0x5eedULL) {
    if (e.dims != truth.dims) throw std::invalid_argument("error_functionals: dims mismatch");
    const int p = truth.p;
    NoiseDiagnostics diag;
    for (int j = 0; j < truth.r; ++j) {
        const std::vector<std::vector<double>> u = truth.component_vectors(j);
        NoiseDiagnostics::ComponentDetail det;
        det.component = j;
        det.eps0 = std::abs(contract_full(e, u));
        for (int k = 1; k <= p; ++k) det.eps1 = std::max(det.eps1, norm2(contract_all_but(e, k, u)));
        for (int k1 = 1; k1 <= p; ++k1)
            for (int k2 = k1 + 1; k2 <= p; ++k2) {
                DenseTensor slice = e;
                // Descending order keeps mode positions stable while modes drop out.
                for (int m = p; m >= 1; --m) {
                    if (m == k1 || m == k2) continue;
                    slice = contract_mode(slice, m, u[static_cast<std::size_t>(m - 1)]);
                }
                det.eps2 = std::max(det.eps2, svd(matricize(slice, 1)).s[0]);
            }
        diag.eps0 = std::max(diag.eps0, det.eps0);
        diag.eps1 = std::max(diag.eps1, det.eps1);
        diag.eps2 = std::max(diag.eps2, det.eps2);
        diag.per_component.push_back(det);
    }
    diag.spectral_norm_est = spectral_norm_estimate(e, norm_seed);
    return diag;
}

// Random Bernoulli(1/2) split of the mode-p slices into two halves, matching
// the sample-splitting mechanism the incoherent initializer assumes. An
// all-one-side draw is resampled: both halves must be nonempty.
struct ModePSplit {
    DenseTensor first;
    DenseTensor second;
    std::vector<int> first_indices;   // 0-based retained slice indices, increasing
    std::vector<int> second_indices;
};

inline ModePSplit split_mode_p(const DenseTensor& x, std::uint64_t seed) {
    const int p = x.order();
    const int dp = x.dim(p);
    if (dp < 2) throw std::invalid_argument("split_mode_p: d_p >= 2 required");
    Rng rng(seed);
    std::vector<int> side(static_cast<std::size_t>(dp));
    for (;;) {
        int ones = 0;
        for (int i = 0; i < dp; ++i) {
            side[static_cast<std::size_t>(i)] = static_cast<int>(rng.next_u64() & 1ULL);
            ones += side[static_cast<std::size_t>(i)];
        }
        if (ones > 0 && ones < dp) break;
    }
    ModePSplit out;
    for (int i = 0; i < dp; ++i)
        (side[static_cast<std::size_t>(i)] == 0 ? out.first_indices : out.second_indices).push_back(i);

    const std::size_t slab = x.size() / static_cast<std::size_t>(dp);  // mode-p slices are contiguous
    auto take = [&](const std::vector<int>& idx) {
        std::vector<int> dims = x.dims;
        dims[static_cast<std::size_t>(p - 1)] = static_cast<int>(idx.size());
        DenseTensor t(dims);
        for (std::size_t s = 0; s < idx.size(); ++s)
            std::copy(x.data.begin() + static_cast<std::ptrdiff_t>(slab * static_cast<std::size_t>(idx[s])),
                      x.data.begin() + static_cast<std::ptrdiff_t>(slab * (static_cast<std::size_t>(idx[s]) + 1)),
                      t.data.begin() + static_cast<std::ptrdiff_t>(slab * s));
        return t;
    };
    out.first = take(out.first_indices);
    out.second = take(out.second_indices);
    return out;
}

// Reassemble a split (used by the round-trip checks).
inline DenseTensor unsplit_mode_p(const ModePSplit& split, const std::vector<int>& dims) {
    DenseTensor x(dims);
    const int p = x.order();
    const std::size_t slab = x.size() / static_cast<std::size_t>(x.dim(p));
    auto put = [&](const DenseTensor& part, const std::vector<int>& idx) {
        for (std::size_t s = 0; s < idx.size(); ++s)
            std::copy(part.data.begin() + static_cast<std::ptrdiff_t>(slab * s),
                      part.data.begin() + static_cast<std::ptrdiff_t>(slab * (s + 1)),
                      x.data.begin() + static_cast<std::ptrdiff_t>(slab * static_cast<std::size_t>(idx[s])));
    };
    put(split.first, split.first_indices);
    put(split.second, split.second_indices);
    return x;
}

}  // namespace odeco
