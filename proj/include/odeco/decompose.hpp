#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "odeco/matrix.hpp"
#include "odeco/odeco.hpp"
#include "odeco/rng.hpp"
#include "odeco/spectral.hpp"
#include "odeco/svd.hpp"
#include "odeco/tensor.hpp"

namespace odeco {

struct FixedPointConfig {
    int t_inner = 30;              // fixed-point sweeps per component per round
    int max_outer_rounds = 10;
    double recovery_threshold = 0.1;  // post-orthogonalization residual below this = collapsed
    double tol = 1e-12;            // relative stabilization of the contraction norm

    void validate() const {
        if (t_inner < 1) throw std::invalid_argument("FixedPointConfig: t_inner >= 1 required");
        if (!(tol > 0.0)) throw std::invalid_argument("FixedPointConfig: tol > 0 required");
        if (!(recovery_threshold > 0.0 && recovery_threshold < 1.0))
            throw std::invalid_argument("FixedPointConfig: recovery_threshold in (0,1) required");
    }
};

// Full record of one power-iteration run: per-iteration per-mode unit
// iterates and the contraction norm before each normalization.
struct PowerIterationTrace {
    std::vector<std::vector<std::vector<double>>> iterates;  // [iter][mode] unit vectors
    std::vector<std::vector<double>> contraction_norms;      // [iter][mode]
    bool converged = false;
    int iterations_used = 0;

    const std::vector<std::vector<double>>& final_iterate() const { return iterates.back(); }
};

struct EstimatedDecomposition {
    std::vector<double> lambdas_hat;            // <X, o_q u_j> at extraction time
    std::vector<Matrix> factors_hat;            // per-mode d x r, unit columns
    std::vector<PowerIterationTrace> traces;
    std::vector<int> unrecovered;               // component indices that failed (0-based)
    bool has_deflation_residual = false;
    DenseTensor deflation_residual_tensor;

    int rank() const { return static_cast<int>(lambdas_hat.size()); }
    std::vector<double> component(int j, int mode) const {
        return factors_hat[static_cast<std::size_t>(mode - 1)].column(j);
    }
    std::vector<std::vector<double>> component_vectors(int j) const {
        std::vector<std::vector<double>> out(factors_hat.size());
        for (std::size_t q = 0; q < factors_hat.size(); ++q) out[q] = factors_hat[q].column(j);
        return out;
    }
};

// Residual-norm form of sqrt(1 - <a,b>^2); exact near parallel vectors.
inline double sin_angle_vec(const std::vector<double>& a, const std::vector<double>& b) {
    const double c = dot(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double w = a[i] - c * b[i];
        s += w * w;
    }
    return std::min(1.0, std::sqrt(s));
}

// One alternating power-iteration pass over the tensor: mode q is updated
// from the freshest iterates (modes below q already updated this sweep,
// modes above still at the previous sweep). Early exit once every mode moves
// by less than 1e-13 in sin-angle.
inline PowerIterationTrace power_iteration(const DenseTensor& x,
                                           std::vector<std::vector<double>> init, int iters) {
    const int p = x.order();
    if (static_cast<int>(init.size()) != p)
        throw std::invalid_argument("power_iteration: need one init vector per mode");
    if (iters < 1) throw std::invalid_argument("power_iteration: iters >= 1 required");
    for (int q = 1; q <= p; ++q) {
        if (static_cast<int>(init[static_cast<std::size_t>(q - 1)].size()) != x.dim(q))
            throw std::invalid_argument("power_iteration: init dimension mismatch");
        if (std::abs(norm2(init[static_cast<std::size_t>(q - 1)]) - 1.0) > 1e-8)
            throw std::invalid_argument("power_iteration: init vectors must be unit norm");
    }
    PowerIterationTrace trace;
    std::vector<std::vector<double>> u = std::move(init);
    for (int t = 0; t < iters; ++t) {
        double max_move = 0.0;
        std::vector<double> norms(static_cast<std::size_t>(p), 0.0);
        for (int q = 1; q <= p; ++q) {
            std::vector<double> v = contract_all_but(x, q, u);
            const double nv = norm2(v);
            if (nv == 0.0)
                throw degenerate_contraction_error("power_iteration: zero contraction at mode " +
                                                   std::to_string(q));
            for (double& w : v) w /= nv;
            max_move = std::max(max_move, sin_angle_vec(v, u[static_cast<std::size_t>(q - 1)]));
            u[static_cast<std::size_t>(q - 1)] = std::move(v);
            norms[static_cast<std::size_t>(q - 1)] = nv;
        }
        trace.iterates.push_back(u);
        trace.contraction_norms.push_back(std::move(norms));
        trace.iterations_used = t + 1;
        if (max_move < 1e-13) {
            trace.converged = true;
            break;
        }
    }
    return trace;
}

struct DeflationStep {
    DenseTensor deflated;
    double lambda_hat = 0.0;  // weight extracted from the tensor at call time
};

// X <- X - <X, o u> * o u. The weight is recomputed from the tensor passed
// in, not taken from any stale trace value.
inline DeflationStep deflate(const DenseTensor& x_current,
                             const std::vector<std::vector<double>>& unit_vectors) {
    DeflationStep step;
    step.lambda_hat = contract_full(x_current, unit_vectors);
    step.deflated = x_current;
    add_outer_rank_one(step.deflated, -step.lambda_hat, unit_vectors);
    return step;
}

// Initialization strategy: given the current (deflated) tensor and the
// 0-based component index, produce one unit vector per mode. Strategies that
// fail may throw; the pipeline records the failure for that component.
using Initializer = std::function<std::vector<std::vector<double>>(const DenseTensor&, int)>;

// Default iteration budget: max(30, ceil(3 log(1 + eps1_proxy * d))), the
// T >= C log eps1 schedule with C = 3 and sqrt(d) as the proxy when eps1 is
// unknown.
inline int default_power_iters(const DenseTensor& x, double eps1_proxy = -1.0) {
    int dmax = 0;
    for (int d : x.dims) dmax = std::max(dmax, d);
    const double proxy = eps1_proxy > 0.0 ? eps1_proxy : std::sqrt(static_cast<double>(dmax));
    const int sched = static_cast<int>(std::ceil(3.0 * std::log(1.0 + proxy * dmax)));
    return std::max(30, sched);
}

// Power iteration plus deflation: for j = 1..r obtain an initializer, iterate
// on the current deflated tensor, extract the weight, deflate, continue.
// Components come back in extraction order.
inline EstimatedDecomposition decompose_with_deflation(const DenseTensor& x, int r,
                                                       const Initializer& initializer,
                                                       int iters = -1,
                                                       bool keep_residual = false) {
    int dmin = x.dims[0];
    for (int d : x.dims) dmin = std::min(dmin, d);
    if (r < 1 || r > dmin)
        throw std::invalid_argument("decompose_with_deflation: need 1 <= r <= min d_q");
    const int p = x.order();
    const int budget = iters > 0 ? iters : default_power_iters(x);

    EstimatedDecomposition est;
    est.factors_hat.reserve(static_cast<std::size_t>(p));
    for (int q = 1; q <= p; ++q) est.factors_hat.emplace_back(x.dim(q), r);

    DenseTensor current = x;
    for (int j = 0; j < r; ++j) {
        bool ok = true;
        std::vector<std::vector<double>> init;
        try {
            init = initializer(current, j);
        } catch (const std::exception&) {
            ok = false;
        }
        PowerIterationTrace trace;
        if (ok) {
            try {
                trace = power_iteration(current, std::move(init), budget);
            } catch (const degenerate_contraction_error&) {
                ok = false;
            }
        }
        if (!ok) {
            est.unrecovered.push_back(j);
            est.lambdas_hat.push_back(0.0);
            est.traces.emplace_back();
            continue;
        }
        const std::vector<std::vector<double>>& u = trace.final_iterate();
        DeflationStep step = deflate(current, u);
        for (int q = 1; q <= p; ++q)
            est.factors_hat[static_cast<std::size_t>(q - 1)].set_column(j, u[static_cast<std::size_t>(q - 1)]);
        est.lambdas_hat.push_back(step.lambda_hat);
        est.traces.push_back(std::move(trace));
        current = std::move(step.deflated);
    }
    if (keep_residual) {
        est.has_deflation_residual = true;
        est.deflation_residual_tensor = std::move(current);
    }
    return est;
}

// Alternating fixed-point decomposition for (nearly) exact odeco tensors.
// Each unrecovered component runs t_inner sweeps from its initializer; a
// component whose contraction norm has stabilized and whose converged vector
// is not already inside the recovered span joins the recovered block, which
// is kept orthonormal. Remaining initializers are projected onto the
// orthocomplement of the recovered block before the next round.
inline EstimatedDecomposition noiseless_decompose(const DenseTensor& t, int r,
                                                  const FixedPointConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    int dmin = t.dims[0];
    for (int d : t.dims) dmin = std::min(dmin, d);
    if (r < 1 || r > dmin) throw std::invalid_argument("noiseless_decompose: need 1 <= r <= min d_q");
    const int p = t.order();

    Rng rng(seed);
    // Uniform Stiefel initializers, one column per component and mode.
    std::vector<Matrix> init(static_cast<std::size_t>(p));
    for (int q = 1; q <= p; ++q) init[static_cast<std::size_t>(q - 1)] = haar_factor(t.dim(q), r, rng);

    EstimatedDecomposition est;
    est.lambdas_hat.assign(static_cast<std::size_t>(r), 0.0);
    est.traces.assign(static_cast<std::size_t>(r), {});
    for (int q = 1; q <= p; ++q) est.factors_hat.emplace_back(t.dim(q), r);

    std::vector<int> pending;
    for (int j = 0; j < r; ++j) pending.push_back(j);
    std::vector<std::vector<std::vector<double>>> recovered(static_cast<std::size_t>(p));

    auto project_out_recovered = [&](std::vector<double>& v, int q) {
        for (const auto& w : recovered[static_cast<std::size_t>(q - 1)]) {
            const double proj = dot(w, v);
            for (std::size_t i = 0; i < v.size(); ++i) v[i] -= proj * w[i];
        }
    };

    for (int round = 0; round < cfg.max_outer_rounds && !pending.empty(); ++round) {
        std::vector<int> still_pending;
        for (int k : pending) {
            // Start from the initializer column projected off the recovered span.
            std::vector<std::vector<double>> u(static_cast<std::size_t>(p));
            bool degenerate_start = false;
            for (int q = 1; q <= p; ++q) {
                std::vector<double> v = init[static_cast<std::size_t>(q - 1)].column(k);
                project_out_recovered(v, q);
                const double nv = norm2(v);
                if (nv < 1e-14) {
                    degenerate_start = true;
                    break;
                }
                for (double& xv : v) xv /= nv;
                u[static_cast<std::size_t>(q - 1)] = std::move(v);
            }
            if (degenerate_start) {
                // Re-seed this column; with probability 1 this does not recur.
                for (int q = 1; q <= p; ++q)
                    init[static_cast<std::size_t>(q - 1)].set_column(k, rng.unit_vector(t.dim(q)));
                still_pending.push_back(k);
                continue;
            }

            PowerIterationTrace trace;
            bool stabilized = false;
            double prev_norm = -1.0;
            try {
                for (int it = 0; it < cfg.t_inner && !stabilized; ++it) {
                    std::vector<double> norms(static_cast<std::size_t>(p), 0.0);
                    for (int q = 1; q <= p; ++q) {
                        std::vector<double> v = contract_all_but(t, q, u);
                        const double nv = norm2(v);
                        if (nv == 0.0) throw degenerate_contraction_error("noiseless_decompose: zero contraction");
                        for (double& xv : v) xv /= nv;
                        u[static_cast<std::size_t>(q - 1)] = std::move(v);
                        norms[static_cast<std::size_t>(q - 1)] = nv;
                    }
                    const double n_now = norms[static_cast<std::size_t>(p - 1)];
                    trace.iterates.push_back(u);
                    trace.contraction_norms.push_back(std::move(norms));
                    trace.iterations_used = it + 1;
                    if (prev_norm >= 0.0 && std::abs(n_now - prev_norm) <= cfg.tol * std::max(1.0, n_now))
                        stabilized = true;
                    prev_norm = n_now;
                }
            } catch (const degenerate_contraction_error&) {
                still_pending.push_back(k);
                continue;
            }

            if (!stabilized) {
                still_pending.push_back(k);
                continue;
            }

            // Gram-Schmidt against the recovered block; a collapsed residual
            // means this run rediscovered an already-recovered component.
            std::vector<std::vector<double>> ortho(static_cast<std::size_t>(p));
            bool collapsed = false;
            for (int q = 1; q <= p; ++q) {
                std::vector<double> v = u[static_cast<std::size_t>(q - 1)];
                for (int pass = 0; pass < 2; ++pass) project_out_recovered(v, q);
                const double nv = norm2(v);
                if (nv < cfg.recovery_threshold) {
                    collapsed = true;
                    break;
                }
                for (double& xv : v) xv /= nv;
                ortho[static_cast<std::size_t>(q - 1)] = std::move(v);
            }
            if (collapsed) {
                still_pending.push_back(k);
                continue;
            }

            trace.converged = true;
            for (int q = 1; q <= p; ++q) {
                est.factors_hat[static_cast<std::size_t>(q - 1)].set_column(k, ortho[static_cast<std::size_t>(q - 1)]);
                recovered[static_cast<std::size_t>(q - 1)].push_back(ortho[static_cast<std::size_t>(q - 1)]);
            }
            est.lambdas_hat[static_cast<std::size_t>(k)] = contract_full(t, ortho);
            est.traces[static_cast<std::size_t>(k)] = std::move(trace);
        }
        pending = std::move(still_pending);
    }
    est.unrecovered = pending;
    return est;
}

// Diagnostics for the deflation assumptions: the A1 scale comparisons and the
// two A2 stacked-matrix operator norms, with "there exists q' != q" resolved
// as the minimum over q'.
struct AssumptionReport {
    double eps0 = 0.0, eps1 = 0.0, eps2 = 0.0;
    double spectral_norm_est = 0.0;
    double lambda_min = 0.0;
    double a1_eps0_eps1 = 0.0;           // eps0 * eps1
    double a1_eps1_r14 = 0.0;            // eps1 * r^{1/4}
    bool a1_lambda_dominates = false;    // lambda_min >= max of the three scales
    struct PerMode {
        int q = 0;                        // 1-based
        int qprime = 0;                   // argmin partner mode
        double first_norm = 0.0;          // ||[E_j^{(q,q')} u_j^{(q')}]_j||
        double second_norm = 0.0;         // ||[E_j E_j^T u_j^{(q)}]_j||
        double first_over_eps1 = 0.0;
        double second_over_eps1_sq = 0.0;
    };
    std::vector<PerMode> a2;
};

inline AssumptionReport assumption_diagnostics(const DenseTensor& e,
                                               const OdecoDecomposition& truth,
                                               std::uint64_t norm_seed = 0x5eedULL) {
    if (e.dims != truth.dims) throw std::invalid_argument("assumption_diagnostics: dims mismatch");
    const int p = truth.p;
    const int r = truth.r;
    AssumptionReport rep;
    // eps functionals computed inline to keep this header free of noise.hpp.
    for (int j = 0; j < r; ++j) {
        const auto u = truth.component_vectors(j);
        rep.eps0 = std::max(rep.eps0, std::abs(contract_full(e, u)));
        for (int k = 1; k <= p; ++k) rep.eps1 = std::max(rep.eps1, norm2(contract_all_but(e, k, u)));
        for (int k1 = 1; k1 <= p; ++k1)
            for (int k2 = k1 + 1; k2 <= p; ++k2) {
                DenseTensor slice = e;
                for (int m = p; m >= 1; --m) {
                    if (m == k1 || m == k2) continue;
                    slice = contract_mode(slice, m, u[static_cast<std::size_t>(m - 1)]);
                }
                rep.eps2 = std::max(rep.eps2, svd(matricize(slice, 1)).s[0]);
            }
    }
    rep.spectral_norm_est = spectral_norm_estimate(e, norm_seed);
    rep.lambda_min = truth.lambdas.back();
    rep.a1_eps0_eps1 = rep.eps0 * rep.eps1;
    rep.a1_eps1_r14 = rep.eps1 * std::pow(static_cast<double>(r), 0.25);
    rep.a1_lambda_dominates =
        rep.lambda_min >= std::max({rep.a1_eps0_eps1, rep.a1_eps1_r14, rep.spectral_norm_est});

    // E_j^{(q1,q2)} as a matrix mapping mode-q2 coordinates to mode-q1.
    auto pair_slice = [&](int j, int q1, int q2) {
        const auto u = truth.component_vectors(j);
        const int lo = std::min(q1, q2), hi = std::max(q1, q2);
        DenseTensor slice = e;
        for (int m = p; m >= 1; --m) {
            if (m == lo || m == hi) continue;
            slice = contract_mode(slice, m, u[static_cast<std::size_t>(m - 1)]);
        }
        Matrix mat = matricize(slice, 1);  // rows = mode lo, cols = mode hi
        return q1 == lo ? mat : transpose(mat);
    };

    for (int q = 1; q <= p; ++q) {
        AssumptionReport::PerMode pm;
        pm.q = q;
        double best_first = -1.0, best_second = -1.0;
        for (int qp = 1; qp <= p; ++qp) {
            if (qp == q) continue;
            Matrix first(e.dim(q), r), second(e.dim(q), r);
            for (int j = 0; j < r; ++j) {
                Matrix ej = pair_slice(j, q, qp);
                std::vector<double> col = matvec(ej, truth.component(j, qp));
                first.set_column(j, col);
                std::vector<double> col2 = matvec(ej, matvec_transposed(ej, truth.component(j, q)));
                second.set_column(j, col2);
            }
            const double n1 = svd(first).s[0];
            const double n2 = svd(second).s[0];
            if (best_first < 0.0 || n1 < best_first) {
                best_first = n1;
                pm.qprime = qp;
                pm.first_norm = n1;
                pm.second_norm = n2;
            }
            if (best_second < 0.0 || n2 < best_second) best_second = n2;
        }
        pm.first_over_eps1 = rep.eps1 > 0.0 ? pm.first_norm / rep.eps1 : 0.0;
        pm.second_over_eps1_sq = rep.eps1 > 0.0 ? pm.second_norm / (rep.eps1 * rep.eps1) : 0.0;
        rep.a2.push_back(pm);
    }
    return rep;
}

// Convergence diagnostic: per sweep, the weighted alignment
// lambda_k * prod_{q >= 2} |<u_{[t]}^{(q)}, u_k^{(q)}>| for every true
// component, reduced to the ratio of the largest to the second largest. On an
// exact odeco tensor this ratio is nondecreasing in t.
struct AlignmentDiagnostic {
    std::vector<double> ratio_per_sweep;      // largest / second largest weighted alignment
    std::vector<double> sin_per_sweep;        // max-mode sin angle to the winning component
    int winning_component = -1;               // 0-based index of the dominant component
};

inline AlignmentDiagnostic alignment_diagnostic(const PowerIterationTrace& trace,
                                                const OdecoDecomposition& truth) {
    AlignmentDiagnostic diag;
    if (trace.iterates.empty()) return diag;
    const int p = truth.p;
    const int r = truth.r;
    // Winner judged at the final sweep.
    auto weighted = [&](const std::vector<std::vector<double>>& u, int k) {
        double w = truth.lambdas[static_cast<std::size_t>(k)];
        for (int q = 2; q <= p; ++q)
            w *= std::abs(dot(u[static_cast<std::size_t>(q - 1)], truth.component(k, q)));
        return w;
    };
    const auto& last = trace.iterates.back();
    double best = -1.0;
    for (int k = 0; k < r; ++k) {
        const double w = weighted(last, k);
        if (w > best) {
            best = w;
            diag.winning_component = k;
        }
    }
    for (const auto& u : trace.iterates) {
        double w1 = -1.0, w2 = -1.0;
        for (int k = 0; k < r; ++k) {
            const double w = weighted(u, k);
            if (w > w1) {
                w2 = w1;
                w1 = w;
            } else if (w > w2) {
                w2 = w;
            }
        }
        diag.ratio_per_sweep.push_back(w2 > 0.0 ? w1 / w2 : std::numeric_limits<double>::infinity());
        double s = 0.0;
        for (int q = 1; q <= p; ++q)
            s = std::max(s, sin_angle_vec(u[static_cast<std::size_t>(q - 1)],
                                          truth.component(diag.winning_component, q)));
        diag.sin_per_sweep.push_back(s);
    }
    return diag;
}

}  // namespace odeco
