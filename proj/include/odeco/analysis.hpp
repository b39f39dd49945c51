#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "odeco/decompose.hpp"
#include "odeco/hungarian.hpp"
#include "odeco/noise.hpp"
#include "odeco/odeco.hpp"
#include "odeco/spectral.hpp"
#include "odeco/svd.hpp"
#include "odeco/tensor.hpp"

namespace odeco {

// sqrt(1 - <a,b>^2), clamped to [0,1]; sign- and orientation-invariant.
// Evaluated as the orthogonal-residual norm ||a - <a,b> b||, which is
// accurate to machine precision for nearly parallel vectors where the naive
// sqrt(1 - cos^2) loses half the digits.
inline double sin_angle(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("sin_angle: length mismatch");
    if (std::abs(norm2(a) - 1.0) > 1e-8 || std::abs(norm2(b) - 1.0) > 1e-8)
        throw std::invalid_argument("sin_angle: inputs must be unit vectors");
    const double c = dot(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double w = a[i] - c * b[i];
        s += w * w;
    }
    return std::min(1.0, std::sqrt(s));
}

// Truth-to-estimate correspondence. permutation[j] is the estimate index
// matched to truth component j; signs fix <gamma * u_hat, u> >= 0 per mode.
struct ComponentMatch {
    std::vector<int> permutation;
    std::vector<std::vector<int>> signs;          // [truth j][mode] in {+1,-1}
    std::vector<std::vector<double>> sin_angles;  // [truth j][mode]
    std::vector<double> max_sin;                  // max over modes
    std::vector<double> lambda_errors;            // |lambda_j - lambda_hat_{pi(j)}|
    std::vector<bool> matched;                    // false for padded entries
};

enum class MatchPolicy { strict, pad };

// Exact assignment maximizing sum_j prod_q |<u_j, u_hat_{pi(j)}>|. Product
// scoring penalizes any bad mode, matching the max-over-modes error the
// bounds control. Rank mismatch is an error unless pad is requested, in which
// case missing pairs score zero and unmatched truth components are flagged.
inline ComponentMatch match_components(const OdecoDecomposition& truth,
                                       const EstimatedDecomposition& est,
                                       MatchPolicy policy = MatchPolicy::strict) {
    const int rt = truth.r;
    const int re = est.rank();
    if (policy == MatchPolicy::strict && rt != re)
        throw std::invalid_argument("match_components: rank mismatch without pad policy");
    const int n = std::max(rt, re);
    const int p = truth.p;

    Matrix cost(n, n);
    for (int j = 0; j < n; ++j)
        for (int m = 0; m < n; ++m) {
            double score = 0.0;
            if (j < rt && m < re) {
                score = 1.0;
                for (int q = 1; q <= p; ++q)
                    score *= std::abs(dot(truth.component(j, q), est.component(m, q)));
            }
            cost.at(j, m) = -score;
        }
    const std::vector<int> assign = min_cost_assignment(cost);

    ComponentMatch match;
    match.permutation.assign(static_cast<std::size_t>(rt), -1);
    match.signs.assign(static_cast<std::size_t>(rt), std::vector<int>(static_cast<std::size_t>(p), 1));
    match.sin_angles.assign(static_cast<std::size_t>(rt), std::vector<double>(static_cast<std::size_t>(p), 1.0));
    match.max_sin.assign(static_cast<std::size_t>(rt), 1.0);
    match.lambda_errors.assign(static_cast<std::size_t>(rt), std::numeric_limits<double>::quiet_NaN());
    match.matched.assign(static_cast<std::size_t>(rt), false);

    for (int j = 0; j < rt; ++j) {
        const int m = assign[static_cast<std::size_t>(j)];
        if (m < 0 || m >= re) continue;
        // Failed pipeline components leave zero columns behind; report those
        // as unmatched rather than pretending a direction exists.
        bool usable = true;
        for (int q = 1; q <= p; ++q)
            if (std::abs(norm2(est.component(m, q)) - 1.0) > 1e-8) usable = false;
        if (!usable) continue;
        match.permutation[static_cast<std::size_t>(j)] = m;
        match.matched[static_cast<std::size_t>(j)] = true;
        double mx = 0.0;
        for (int q = 1; q <= p; ++q) {
            const std::vector<double> ut = truth.component(j, q);
            const std::vector<double> ue = est.component(m, q);
            const double c = dot(ue, ut);
            match.signs[static_cast<std::size_t>(j)][static_cast<std::size_t>(q - 1)] = c >= 0.0 ? 1 : -1;
            const double s = sin_angle(ut, ue);
            match.sin_angles[static_cast<std::size_t>(j)][static_cast<std::size_t>(q - 1)] = s;
            mx = std::max(mx, s);
        }
        match.max_sin[static_cast<std::size_t>(j)] = mx;
        match.lambda_errors[static_cast<std::size_t>(j)] =
            std::abs(truth.lambdas[static_cast<std::size_t>(j)] - est.lambdas_hat[static_cast<std::size_t>(m)]);
    }
    return match;
}

struct PerturbationOptions {
    const ComponentMatch* match = nullptr;  // recomputed when null
    double enorm_estimate = -1.0;           // spectral_norm_estimate(e) when negative
    bool matrix_baseline = true;
    std::uint64_t norm_seed = 0x5eedULL;
};

// Empirical constants for the gap-free perturbation bounds, next to the
// gap-dependent matrix Davis-Kahan baseline. Ratios follow the 1/0 = +inf
// convention; 0/0 is reported as 0.
struct PerturbationReport {
    double enorm_estimate = 0.0;
    double enorm_frobenius = 0.0;
    struct Component {
        double lambda_error = 0.0;
        double lambda_ratio = 0.0;   // |lambda err| / ||E||
        double max_sin = 0.0;
        double sin_ratio = 0.0;      // max sin * lambda_k / ||E||
        std::vector<double> matrix_sin;  // per mode: matricized-SVD vector error
        std::vector<double> dk_bound;    // per mode: 2||Mat_q(E)|| / adjacent gap
    };
    std::vector<Component> components;
};

// Numerators at the rounding floor count as zero so that a noiseless run
// reports 0 rather than tiny/0 = inf; a genuine error over a zero denominator
// still reports the +inf sentinel.
inline double safe_ratio(double num, double den, double num_floor = 1e-12) {
    if (num <= num_floor) return 0.0;
    if (den == 0.0) return std::numeric_limits<double>::infinity();
    return num / den;
}

inline PerturbationReport perturbation_report(const OdecoDecomposition& truth,
                                              const EstimatedDecomposition& est,
                                              const DenseTensor& e,
                                              const PerturbationOptions& opts = {}) {
    ComponentMatch local;
    const ComponentMatch* match = opts.match;
    if (match == nullptr) {
        local = match_components(truth, est);
        match = &local;
    }
    PerturbationReport rep;
    rep.enorm_estimate = opts.enorm_estimate >= 0.0 ? opts.enorm_estimate
                                                    : spectral_norm_estimate(e, opts.norm_seed);
    rep.enorm_frobenius = frobenius_norm(e);
    const int p = truth.p;
    const int r = truth.r;

    std::vector<Matrix> baseline_vectors;   // per mode: d x r top left singular vectors of Mat_q(X)
    std::vector<double> e_mat_norm(static_cast<std::size_t>(p), 0.0);
    if (opts.matrix_baseline) {
        DenseTensor x = add(synthesize(truth), e);
        for (int q = 1; q <= p; ++q) {
            GramSpectral gs = left_singular_via_gram(matricize(x, q), r);
            baseline_vectors.push_back(gs.vectors);
            e_mat_norm[static_cast<std::size_t>(q - 1)] = spectral_norm_matrix(matricize(e, q));
        }
    }

    for (int j = 0; j < r; ++j) {
        PerturbationReport::Component c;
        c.lambda_error = match->lambda_errors[static_cast<std::size_t>(j)];
        c.max_sin = match->max_sin[static_cast<std::size_t>(j)];
        const double lam = truth.lambdas[static_cast<std::size_t>(j)];
        const double floor = 1e-12 * std::max(1.0, lam);
        c.lambda_ratio = safe_ratio(c.lambda_error, rep.enorm_estimate, floor);
        c.sin_ratio = safe_ratio(c.max_sin * lam, rep.enorm_estimate, floor);
        if (opts.matrix_baseline) {
            for (int q = 1; q <= p; ++q) {
                const Matrix& bv = baseline_vectors[static_cast<std::size_t>(q - 1)];
                c.matrix_sin.push_back(sin_angle(truth.component(j, q), bv.column(j)));
                const double upper = j == 0 ? std::numeric_limits<double>::infinity()
                                            : truth.lambdas[static_cast<std::size_t>(j - 1)] - lam;
                const double lower =
                    lam - (j + 1 < r ? truth.lambdas[static_cast<std::size_t>(j + 1)] : 0.0);
                const double gap = std::min(upper, lower);
                c.dk_bound.push_back(safe_ratio(2.0 * e_mat_norm[static_cast<std::size_t>(q - 1)], gap));
            }
        }
        rep.components.push_back(std::move(c));
    }
    return rep;
}

struct FirstOrderOptions {
    const ComponentMatch* match = nullptr;
    double enorm_estimate = -1.0;
    double eps1 = -1.0;   // computed via error_functionals when negative
    double eps2 = -1.0;
    std::uint64_t norm_seed = 0x5eedULL;
};

// Residual sin-angle between each estimated singular vector and the
// normalized first-order prediction u + E x_{s != q} u^{(s)} / lambda, with
// the two theoretical envelopes evaluated alongside (epsilon = 0.1 in the
// perturbation envelope; the iteration envelope carries unit constant).
struct FirstOrderReport {
    std::vector<std::vector<double>> residuals;  // [component][mode]
    std::vector<double> envelope_perturbation;   // (2 + ||E||/l)((1.1)||E||/l)^{p-1}
    std::vector<double> envelope_iteration;      // (eps1^2 + eps1*eps2) / lambda^2
    std::vector<bool> envelope_defined;          // false when ||E|| >= lambda_k
    double enorm_estimate = 0.0;
    double eps1 = 0.0;
    double eps2 = 0.0;
};

inline FirstOrderReport first_order_residual(const OdecoDecomposition& truth,
                                             const EstimatedDecomposition& est,
                                             const DenseTensor& e,
                                             const FirstOrderOptions& opts = {}) {
    ComponentMatch local;
    const ComponentMatch* match = opts.match;
    if (match == nullptr) {
        local = match_components(truth, est);
        match = &local;
    }
    FirstOrderReport rep;
    rep.enorm_estimate = opts.enorm_estimate >= 0.0 ? opts.enorm_estimate
                                                    : spectral_norm_estimate(e, opts.norm_seed);
    if (opts.eps1 >= 0.0 && opts.eps2 >= 0.0) {
        rep.eps1 = opts.eps1;
        rep.eps2 = opts.eps2;
    } else {
        NoiseDiagnostics diag = error_functionals(e, truth, opts.norm_seed);
        rep.eps1 = diag.eps1;
        rep.eps2 = diag.eps2;
    }

    const int p = truth.p;
    for (int j = 0; j < truth.r; ++j) {
        const double lam = truth.lambdas[static_cast<std::size_t>(j)];
        std::vector<double> res_modes;
        const auto u = truth.component_vectors(j);
        const int m = match->permutation[static_cast<std::size_t>(j)];
        for (int q = 1; q <= p; ++q) {
            std::vector<double> pred = contract_all_but(e, q, u);
            for (std::size_t i = 0; i < pred.size(); ++i)
                pred[i] = u[static_cast<std::size_t>(q - 1)][i] + pred[i] / lam;
            const double np = norm2(pred);
            if (np == 0.0 || m < 0) {
                res_modes.push_back(1.0);
                continue;
            }
            for (double& v : pred) v /= np;
            res_modes.push_back(sin_angle(est.component(m, q), pred));
        }
        rep.residuals.push_back(std::move(res_modes));
        const bool defined = rep.enorm_estimate < lam;
        rep.envelope_defined.push_back(defined);
        if (defined) {
            const double ratio = rep.enorm_estimate / lam;
            rep.envelope_perturbation.push_back((2.0 + ratio) * std::pow(1.1 * ratio, p - 1));
        } else {
            rep.envelope_perturbation.push_back(std::numeric_limits<double>::infinity());
        }
        rep.envelope_iteration.push_back((rep.eps1 * rep.eps1 + rep.eps1 * rep.eps2) / (lam * lam));
    }
    return rep;
}

struct AsymptoticOptions {
    const ComponentMatch* match = nullptr;
    int linear_form_mode = 1;  // test directions apply to this mode
};

// Desk-scale evaluation of the asymptotic overlap and linear-form statistics.
// The overlap statistic centers at 1 - (d-1)/lambda^2 while the linear form
// divides by 1 - d/lambda^2; the d vs d-1 mismatch is intentional, both
// normalizations are kept as displayed.
struct AsymptoticStat {
    std::vector<std::vector<double>> overlap_stat;          // [component][mode]
    std::vector<std::vector<double>> one_minus_overlap_sq;  // [component][mode]
    std::vector<std::vector<double>> sigma_sq;              // [component][mode]
    std::vector<std::vector<double>> linear_residuals;      // [component][test dir]
    std::vector<bool> remainder_dominated;                  // (d-1)/lambda^2 > 0.5
};

inline AsymptoticStat asymptotic_statistics(const OdecoDecomposition& truth,
                                            const EstimatedDecomposition& est,
                                            const DenseTensor& e,
                                            const std::vector<std::vector<double>>& test_dirs,
                                            const AsymptoticOptions& opts = {}) {
    ComponentMatch local;
    const ComponentMatch* match = opts.match;
    if (match == nullptr) {
        local = match_components(truth, est);
        match = &local;
    }
    const int p = truth.p;
    const int qlin = opts.linear_form_mode;
    AsymptoticStat stat;
    for (int j = 0; j < truth.r; ++j) {
        const double lam = truth.lambdas[static_cast<std::size_t>(j)];
        const int m = match->permutation[static_cast<std::size_t>(j)];
        if (m < 0) throw std::invalid_argument("asymptotic_statistics: unmatched component");
        const auto u = truth.component_vectors(j);
        std::vector<double> stats_row, omo_row, sig_row;
        for (int q = 1; q <= p; ++q) {
            const double d = static_cast<double>(truth.dims[static_cast<std::size_t>(q - 1)]);
            const double overlap = dot(u[static_cast<std::size_t>(q - 1)], est.component(m, q));
            const double osq = overlap * overlap;
            omo_row.push_back(1.0 - osq);
            stats_row.push_back(lam * lam / std::sqrt(d) * (osq - (1.0 - (d - 1.0) / (lam * lam))));
            // sigma_j^2 = Var(E_i^2) over the contraction vector entries.
            std::vector<double> w = contract_all_but(e, q, u);
            double mean = 0.0;
            for (double v : w) mean += v * v;
            mean /= static_cast<double>(w.size());
            double var = 0.0;
            for (double v : w) var += (v * v - mean) * (v * v - mean);
            var /= static_cast<double>(w.size() > 1 ? w.size() - 1 : 1);
            sig_row.push_back(var);
        }
        stat.overlap_stat.push_back(std::move(stats_row));
        stat.one_minus_overlap_sq.push_back(std::move(omo_row));
        stat.sigma_sq.push_back(std::move(sig_row));
        const double dlin = static_cast<double>(truth.dims[static_cast<std::size_t>(qlin - 1)]);
        stat.remainder_dominated.push_back((dlin - 1.0) / (lam * lam) > 0.5);

        std::vector<double> lin_row;
        const std::vector<double> uq = truth.component(j, qlin);
        const int gamma = match->signs[static_cast<std::size_t>(j)][static_cast<std::size_t>(qlin - 1)];
        for (const auto& a : test_dirs) {
            if (std::abs(norm2(a) - 1.0) > 1e-8)
                throw std::invalid_argument("asymptotic_statistics: test directions must be unit");
            if (std::abs(dot(a, uq)) > 1e-10)
                throw std::invalid_argument("asymptotic_statistics: test direction not orthogonal to u");
            std::vector<std::vector<double>> dirs = u;
            dirs[static_cast<std::size_t>(qlin - 1)] = a;
            const double e_term = contract_full(e, dirs) / lam;
            const double mid = gamma * dot(a, uq) / (1.0 - dlin / (lam * lam));
            const double val = dot(a, est.component(m, qlin)) - mid - e_term;
            lin_row.push_back(std::abs(val));
        }
        stat.linear_residuals.push_back(std::move(lin_row));
    }
    return stat;
}

}  // namespace odeco
