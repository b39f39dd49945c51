#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "odeco/noise.hpp"
#include "odeco/odeco.hpp"
#include "odeco/rng.hpp"
#include "odeco/svd.hpp"
#include "odeco/tensor.hpp"

namespace odeco {

// HOSVD subspace estimate along one mode or a mode pair: the top-r left
// singular vectors of the corresponding matricization. The projector is
// basis * basis^T and is never materialized for pairs.
struct ProjectionEstimate {
    std::vector<int> modes;   // {q} or {q1, q2}, 1-based
    Matrix basis;             // d x k or d^2 x k, column-orthonormal
    bool rank_deficient = false;  // fewer than r usable singular values
    bool gap_warning = false;     // sigma_r barely above sigma_{r+1}

    std::vector<double> apply_projector(const std::vector<double>& theta) const {
        return matvec(basis, matvec_transposed(basis, theta));
    }
};

inline ProjectionEstimate hosvd_projection(const DenseTensor& x, const std::vector<int>& mode_or_pair,
                                           int r) {
    ProjectionEstimate est;
    est.modes = mode_or_pair;
    Matrix mat;
    if (mode_or_pair.size() == 1) {
        mat = matricize(x, mode_or_pair[0]);
    } else if (mode_or_pair.size() == 2) {
        mat = matricize_pair(x, mode_or_pair[0], mode_or_pair[1]);
    } else {
        throw std::invalid_argument("hosvd_projection: need one mode or a pair");
    }
    const int maxrank = std::min(mat.rows, mat.cols);
    if (r < 1 || r > mat.rows) throw std::invalid_argument("hosvd_projection: bad rank");
    SvdResult s = svd(mat);
    const double sigma1 = s.s[0];
    int usable = 0;
    for (int j = 0; j < std::min(r, maxrank); ++j)
        if (s.s[static_cast<std::size_t>(j)] > 1e-12 * std::max(1.0, sigma1)) usable = j + 1;
    if (usable < r) est.rank_deficient = true;
    const int k = std::max(1, usable);
    if (static_cast<std::size_t>(r) < s.s.size() &&
        s.s[static_cast<std::size_t>(r - 1)] <= 2.0 * s.s[static_cast<std::size_t>(r)])
        est.gap_warning = true;  // no clear rank-r signal gap (e.g. pure noise)
    est.basis = Matrix(mat.rows, k);
    for (int j = 0; j < k; ++j)
        for (int i = 0; i < mat.rows; ++i) est.basis.at(i, j) = s.u.at(i, j);
    return est;
}

// One random-slicing trial.
struct SliceTrial {
    int index = 0;                        // l, 1-based
    double sigma1 = 0.0;                  // leading singular value of the sliced matricization
    double sigma2 = 0.0;                  // second singular value (gap diagnostic)
    bool valid = false;
    std::vector<std::vector<double>> candidates;  // per-mode unit vectors
};

struct InitializationResult {
    std::vector<std::vector<double>> vectors;  // selected per-mode init, unit norm
    int selected_trial = -1;                   // 1-based index of argmax sigma_l
    std::vector<SliceTrial> trials;
    ProjectionEstimate projection;
};

// (sigma1 / sigma2)^2 of a sliced matricization; +inf for a numerically
// rank-one slice. Gap selection needs this >= 1.2 for the
// selected trial.
inline double gap_ratio(const SliceTrial& trial) {
    if (!trial.valid) return 0.0;
    if (trial.sigma2 <= 1e-14 * std::max(1.0, trial.sigma1))
        return std::numeric_limits<double>::infinity();
    const double ratio = trial.sigma1 / trial.sigma2;
    return ratio * ratio;
}

inline double gap_diagnostic(const SliceTrial& trial, const Matrix& sliced) {
    SvdResult s = svd(sliced);
    SliceTrial t = trial;
    t.valid = true;
    t.sigma1 = s.s[0];
    t.sigma2 = s.s.size() > 1 ? s.s[1] : 0.0;
    return gap_ratio(t);
}

inline int default_slice_count(int r, int d) {
    return static_cast<int>(std::ceil(2.0 * r * r * std::log(static_cast<double>(d))));
}

// General random-slicing initializer: estimate the mode-1 projector by HOSVD,
// slice the tensor with L projected Gaussian probes, take per-mode leading
// singular vectors of the slice with the best leading singular value, and
// recover the mode-1 vector by contracting the tensor with the others.
inline InitializationResult initialize_general(const DenseTensor& x, int r, int L,
                                               std::uint64_t seed) {
    if (L < 1) throw std::invalid_argument("initialize_general: L >= 1 required");
    const int p = x.order();
    if (p < 3) throw std::invalid_argument("initialize_general: order >= 3 required");
    const int d1 = x.dim(1);

    InitializationResult res;
    res.projection = hosvd_projection(x, {1}, r);

    for (int l = 1; l <= L; ++l) {
        Rng rng(derive_stream(seed, static_cast<std::uint64_t>(l)));
        SliceTrial trial;
        trial.index = l;
        std::vector<double> theta(static_cast<std::size_t>(d1));
        for (double& v : theta) v = rng.gaussian();
        const std::vector<double> probe = res.projection.apply_projector(theta);

        DenseTensor sliced = contract_mode(x, 1, probe);  // order p-1
        bool zero = true;
        for (double v : sliced.data)
            if (v != 0.0) {
                zero = false;
                break;
            }
        if (zero) {
            res.trials.push_back(trial);  // degenerate slice, skipped
            continue;
        }

        Matrix m1 = matricize(sliced, 1);
        SvdResult s1 = svd(m1);
        trial.sigma1 = s1.s[0];
        trial.sigma2 = s1.s.size() > 1 ? s1.s[1] : 0.0;

        trial.candidates.assign(static_cast<std::size_t>(p), {});
        trial.candidates[1] = s1.u.column(0);  // mode 2 of x = mode 1 of the slice
        for (int q = 3; q <= p; ++q)
            trial.candidates[static_cast<std::size_t>(q - 1)] = svd(matricize(sliced, q - 1)).u.column(0);

        // Mode-1 vector from the full tensor; the same contraction normalizes it.
        std::vector<double> u1 = contract_all_but(x, 1, trial.candidates);
        const double n1 = norm2(u1);
        if (n1 == 0.0) {
            res.trials.push_back(trial);
            continue;
        }
        for (double& v : u1) v /= n1;
        trial.candidates[0] = std::move(u1);
        trial.valid = true;
        res.trials.push_back(std::move(trial));
    }

    double best = -1.0;
    for (const SliceTrial& tr : res.trials)
        if (tr.valid && tr.sigma1 > best) {
            best = tr.sigma1;
            res.selected_trial = tr.index;
        }
    if (res.selected_trial < 0)
        throw degenerate_contraction_error("initialize_general: every slicing trial degenerated");
    res.vectors = res.trials[static_cast<std::size_t>(res.selected_trial - 1)].candidates;
    return res;
}

// Incoherent variant for p >= 4: split along mode p, estimate the (1,2)-pair
// projector from one half, slice the other half with projected d^2 Gaussian
// probes, read modes 3..p off the slice, modes 1 and 2 from a final left/right
// singular pair, and refresh mode p against the full tensor.
inline InitializationResult initialize_incoherent(const DenseTensor& x, int r, int L,
                                                  std::uint64_t seed) {
    if (L < 1) throw std::invalid_argument("initialize_incoherent: L >= 1 required");
    const int p = x.order();
    if (p < 4) throw std::invalid_argument("initialize_incoherent: order >= 4 required");
    if (x.dim(p) < 2) throw std::invalid_argument("initialize_incoherent: d_p >= 2 required");
    const int d1 = x.dim(1), d2 = x.dim(2);

    ModePSplit split = split_mode_p(x, derive_stream(seed, 0));
    InitializationResult res;
    res.projection = hosvd_projection(split.first, {1, 2}, r);

    for (int l = 1; l <= L; ++l) {
        Rng rng(derive_stream(seed, static_cast<std::uint64_t>(l)));
        SliceTrial trial;
        trial.index = l;
        std::vector<double> theta(static_cast<std::size_t>(d1) * static_cast<std::size_t>(d2));
        for (double& v : theta) v = rng.gaussian();
        const std::vector<double> probe = res.projection.apply_projector(theta);

        DenseTensor sliced = contract_pair(split.second, 1, 2, probe);  // order p-2
        bool zero = true;
        for (double v : sliced.data)
            if (v != 0.0) {
                zero = false;
                break;
            }
        if (zero) {
            res.trials.push_back(trial);
            continue;
        }

        Matrix m1 = matricize(sliced, 1);
        SvdResult s1 = svd(m1);
        trial.sigma1 = s1.s[0];
        trial.sigma2 = s1.s.size() > 1 ? s1.s[1] : 0.0;

        trial.candidates.assign(static_cast<std::size_t>(p), {});
        // Modes 3..p of x are modes 1..p-2 of the slice. The mode-p candidate
        // lives in the subsampled half until the final refresh.
        trial.candidates[2] = s1.u.column(0);
        for (int q = 4; q <= p; ++q)
            trial.candidates[static_cast<std::size_t>(q - 1)] = svd(matricize(sliced, q - 2)).u.column(0);

        // Modes 1 and 2 from the contracted d1 x d2 matrix of the second half.
        DenseTensor pairwise = split.second;
        for (int m = p; m >= 3; --m)
            pairwise = contract_mode(pairwise, m, trial.candidates[static_cast<std::size_t>(m - 1)]);
        SvdResult s12 = svd(matricize(pairwise, 1));
        trial.candidates[0] = s12.u.column(0);
        trial.candidates[1] = s12.v.column(0);

        // Refresh mode p against the full tensor (not the half).
        std::vector<double> up = contract_all_but(x, p, trial.candidates);
        const double np = norm2(up);
        if (np == 0.0) {
            res.trials.push_back(trial);
            continue;
        }
        for (double& v : up) v /= np;
        trial.candidates[static_cast<std::size_t>(p - 1)] = std::move(up);
        trial.valid = true;
        res.trials.push_back(std::move(trial));
    }

    double best = -1.0;
    for (const SliceTrial& tr : res.trials)
        if (tr.valid && tr.sigma1 > best) {
            best = tr.sigma1;
            res.selected_trial = tr.index;
        }
    if (res.selected_trial < 0)
        throw degenerate_contraction_error("initialize_incoherent: every slicing trial degenerated");
    res.vectors = res.trials[static_cast<std::size_t>(res.selected_trial - 1)].candidates;
    return res;
}

}  // namespace odeco
