#pragma once

// Acceptance suite: one function per criterion, each returning a pass/fail
// verdict with the measured quantities. Thresholds are fixed here, not
// configurable; the CLI `verify` subcommand and the acceptance test binary
// both run exactly this code.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "odeco/analysis.hpp"
#include "odeco/decompose.hpp"
#include "odeco/experiment.hpp"
#include "odeco/initialization.hpp"
#include "odeco/io.hpp"
#include "odeco/noise.hpp"
#include "odeco/odeco.hpp"
#include "odeco/parallel.hpp"
#include "odeco/pipeline.hpp"
#include "odeco/spectral.hpp"

namespace odeco::verify {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double wall_ms = 0.0;
};

namespace detail {

inline EstimatedDecomposition as_estimate(const OdecoDecomposition& dec) {
    EstimatedDecomposition est;
    est.lambdas_hat = dec.lambdas;
    est.factors_hat = dec.factors;
    est.traces.resize(static_cast<std::size_t>(dec.r));
    return est;
}

inline double eps1_only(const DenseTensor& e, const OdecoDecomposition& truth) {
    double eps1 = 0.0;
    for (int j = 0; j < truth.r; ++j) {
        const auto u = truth.component_vectors(j);
        for (int k = 1; k <= truth.p; ++k)
            eps1 = std::max(eps1, norm2(contract_all_but(e, k, u)));
    }
    return eps1;
}

// Greedy claim of distinct truth components by the per-step init vectors;
// returns the max-mode sin angle of each claim in step order.
inline std::vector<double> init_claim_errors(const OdecoDecomposition& truth,
                                             const std::vector<std::vector<std::vector<double>>>& inits) {
    std::vector<bool> claimed(static_cast<std::size_t>(truth.r), false);
    std::vector<double> errors;
    for (const auto& init : inits) {
        double best = 2.0;
        int best_k = -1;
        if (!init.empty()) {
            for (int k = 0; k < truth.r; ++k) {
                if (claimed[static_cast<std::size_t>(k)]) continue;
                double worst = 0.0;
                for (int q = 1; q <= truth.p; ++q)
                    worst = std::max(worst, sin_angle(truth.component(k, q),
                                                      init[static_cast<std::size_t>(q - 1)]));
                if (worst < best) {
                    best = worst;
                    best_k = k;
                }
            }
        }
        if (best_k >= 0) claimed[static_cast<std::size_t>(best_k)] = true;
        errors.push_back(best);
    }
    return errors;
}

inline double fitted_slope(const std::vector<double>& logx, const std::vector<double>& logy) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < logx.size(); ++i) {
        mx += logx[i];
        my += logy[i];
    }
    mx /= static_cast<double>(logx.size());
    my /= static_cast<double>(logx.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < logx.size(); ++i) {
        num += (logx[i] - mx) * (logy[i] - my);
        den += (logx[i] - mx) * (logx[i] - mx);
    }
    return num / den;
}

template <typename F>
CriterionResult timed(int id, const std::string& name, F&& body) {
    CriterionResult res;
    res.id = id;
    res.name = name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(res);
    } catch (const std::exception& err) {
        res.passed = false;
        res.detail = std::string("exception: ") + err.what();
    }
    res.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

}  // namespace detail

// 1. Noiseless recovery by the alternating fixed-point iteration.
inline CriterionResult criterion_noiseless_recovery() {
    return detail::timed(1, "noiseless recovery (p=3, d=15, r=5, geometric weights)", [](CriterionResult& res) {
        const int seeds = 100;
        std::vector<double> worst(seeds, 1.0);
        parallel_for(seeds, [&](std::size_t s) {
            OdecoDecomposition truth =
                random_odeco({15, 15, 15}, 5, LambdaSpec::geometric(1.0, 0.8), 11000 + s);
            DenseTensor t = synthesize(truth);
            EstimatedDecomposition est = noiseless_decompose(t, 5, {}, derive_stream(21000, s));
            if (!est.unrecovered.empty()) return;
            ComponentMatch match = match_components(truth, est);
            double w = 0.0;
            for (double m : match.max_sin) w = std::max(w, m);
            worst[s] = w;
        });
        int ok = 0;
        double max_seen = 0.0;
        for (double w : worst) {
            if (w <= 1e-8) ++ok;
            max_seen = std::max(max_seen, w);
        }
        std::ostringstream d;
        d << ok << "/100 runs with max sin <= 1e-8; worst " << max_seen;
        res.detail = d.str();
        res.passed = ok == 100;
    });
}

// 2. Odeco matricization identity with the Khatri-Rao factor.
inline CriterionResult criterion_matricization_identity() {
    return detail::timed(2, "odeco matricization identity (50 random instances, p in {3,4})", [](CriterionResult& res) {
        int ok = 0;
        double worst_sigma = 0.0, worst_rec = 0.0;
        Rng meta(31337);
        for (int trial = 0; trial < 50; ++trial) {
            const int p = (trial % 2 == 0) ? 3 : 4;
            const int d = 4 + static_cast<int>(meta.next_u64() % 4);  // 4..7
            const int r = 2 + static_cast<int>(meta.next_u64() % static_cast<std::uint64_t>(d - 1));
            std::vector<int> dims(static_cast<std::size_t>(p), d);
            OdecoDecomposition dec = random_odeco(dims, std::min(r, d),
                                                  LambdaSpec::geometric(2.0, 0.8), meta.next_u64());
            DenseTensor t = synthesize(dec);
            bool good = true;
            for (int q = 1; q <= p; ++q) {
                Matrix lhs = matricize(t, q);
                std::vector<double> s = svd(lhs).s;
                for (int j = 0; j < dec.r; ++j) {
                    const double err = std::abs(s[static_cast<std::size_t>(j)] -
                                                dec.lambdas[static_cast<std::size_t>(j)]);
                    worst_sigma = std::max(worst_sigma, err);
                    if (err > 1e-10) good = false;
                }
                for (std::size_t j = static_cast<std::size_t>(dec.r); j < s.size(); ++j) {
                    worst_sigma = std::max(worst_sigma, s[j]);
                    if (s[j] > 1e-10) good = false;
                }
                Matrix v;
                bool first = true;
                for (int l = 1; l <= p; ++l) {
                    if (l == q) continue;
                    v = first ? dec.factors[static_cast<std::size_t>(l - 1)]
                              : khatri_rao(v, dec.factors[static_cast<std::size_t>(l - 1)]);
                    first = false;
                }
                for (int col = 0; col < v.cols; ++col)
                    for (int i = 0; i < v.rows; ++i)
                        v.at(i, col) *= dec.lambdas[static_cast<std::size_t>(col)];
                Matrix rhs = matmul(dec.factors[static_cast<std::size_t>(q - 1)], transpose(v));
                double err = 0.0;
                for (std::size_t i = 0; i < lhs.data.size(); ++i)
                    err += (lhs.data[i] - rhs.data[i]) * (lhs.data[i] - rhs.data[i]);
                err = std::sqrt(err);
                worst_rec = std::max(worst_rec, err);
                if (err > 1e-9) good = false;
            }
            if (good) ++ok;
        }
        std::ostringstream d;
        d << ok << "/50 instances; worst sigma error " << worst_sigma << ", worst reconstruction "
          << worst_rec;
        res.detail = d.str();
        res.passed = ok == 50;
    });
}

// 3. Worked-example exactness of the first-order expansion.
inline CriterionResult criterion_worked_example() {
    return detail::timed(3, "worked-example exactness (d in {11,51,101}, lambda=10)", [](CriterionResult& res) {
        const double lambda = 10.0;
        double worst_res = 0.0, worst_norm = 0.0;
        bool pass = true;
        for (int d : {11, 51, 101}) {
            WorkedExample ex = worked_example(d, lambda);
            DenseTensor e = subtract(ex.x, ex.t);
            const double want = lambda * std::sqrt(2.0 / (d - 1));
            const double got = spectral_norm_estimate(e, 1234);
            worst_norm = std::max(worst_norm, std::abs(got - want));
            if (std::abs(got - want) > 1e-6) pass = false;

            FirstOrderOptions opts;
            opts.enorm_estimate = want;
            opts.eps1 = 0.0;
            opts.eps2 = 0.0;
            FirstOrderReport rep =
                first_order_residual(ex.truth, detail::as_estimate(ex.perturbed_truth), e, opts);
            for (const auto& comp : rep.residuals)
                for (int q = 0; q < 2; ++q) {
                    worst_res = std::max(worst_res, comp[static_cast<std::size_t>(q)]);
                    if (comp[static_cast<std::size_t>(q)] > 1e-10) pass = false;
                }
        }
        std::ostringstream d;
        d << "worst mode-1/2 residual " << worst_res << "; worst ||E|| error " << worst_norm;
        res.detail = d.str();
        res.passed = pass;
    });
}

// 4. Gap-free perturbation constant and the lambda^{-1} error law.
inline CriterionResult criterion_gap_free_constant() {
    return detail::timed(4, "gap-free perturbation constant (d=40, r=3, equal weights)", [](CriterionResult& res) {
        const int d = 40, r = 3, seeds = 50;
        const std::vector<double> ratios = {10.0, 20.0, 40.0};
        std::vector<double> med_ratio(ratios.size()), med_err(ratios.size()), med_lambda(ratios.size());
        bool dk_infinite = true;
        std::mutex dk_mutex;
        for (std::size_t g = 0; g < ratios.size(); ++g) {
            std::vector<double> ratio_vals(seeds), err_vals(seeds), lambda_vals(seeds);
            parallel_for(seeds, [&](std::size_t s) {
                const std::uint64_t base = derive_stream(40000 + 100 * g, s);
                OdecoDecomposition truth = random_odeco({d, d, d}, r, LambdaSpec::equal(1.0),
                                                        derive_stream(base, 1));
                DenseTensor e = sample_noise({d, d, d}, NoiseSpec::gaussian(1.0, derive_stream(base, 2)));
                const double eps1 = detail::eps1_only(e, truth);
                const double lambda = ratios[g] * eps1;
                truth.lambdas.assign(static_cast<std::size_t>(r), lambda);
                DenseTensor x = add(synthesize(truth), e);
                EstimatedDecomposition est = decompose_with_deflation(
                    x, r, make_perturbed_oracle_initializer(truth, 0.25, derive_stream(base, 3)),
                    default_power_iters(x, eps1));
                ComponentMatch match = match_components(truth, est);
                double err = 0.0;
                for (double m : match.max_sin) err = std::max(err, m);
                ratio_vals[s] = err * lambda / eps1;
                err_vals[s] = err;
                lambda_vals[s] = lambda;
                if (s == 0) {
                    // matrix Davis-Kahan baseline: equal weights -> zero gap -> +inf
                    PerturbationOptions popts;
                    popts.match = &match;
                    popts.enorm_estimate = eps1;  // ratios keyed to eps1; the bound uses Mat_q(E)
                    PerturbationReport rep = perturbation_report(truth, est, e, popts);
                    bool inf_here = true;
                    for (const auto& c : rep.components)
                        for (double b : c.dk_bound)
                            if (!std::isinf(b)) inf_here = false;
                    std::lock_guard<std::mutex> lock(dk_mutex);
                    dk_infinite = dk_infinite && inf_here;
                }
            });
            med_ratio[g] = median(ratio_vals);
            med_err[g] = median(err_vals);
            med_lambda[g] = median(lambda_vals);
        }
        bool pass = dk_infinite;
        for (double m : med_ratio)
            if (!(m <= 10.0)) pass = false;
        std::vector<double> lx, ly;
        for (std::size_t g = 0; g < ratios.size(); ++g) {
            lx.push_back(std::log(med_lambda[g]));
            ly.push_back(std::log(med_err[g]));
        }
        const double slope = detail::fitted_slope(lx, ly);
        if (!(std::abs(slope + 1.0) <= 0.15)) pass = false;
        std::ostringstream det;
        det << "median sin*lambda/eps1 = {" << med_ratio[0] << ", " << med_ratio[1] << ", "
            << med_ratio[2] << "} (<= 10); log-log slope " << slope
            << " (-1 +/- 0.15); DK baseline infinite: " << (dk_infinite ? "yes" : "no");
        res.detail = det.str();
        res.passed = pass;
    });
}

// 5. Leading-order expansion of the power-iteration estimator.
inline CriterionResult criterion_leading_order() {
    return detail::timed(5, "power-iteration leading-order residual (lambda/eps1 = 50)", [](CriterionResult& res) {
        const int d = 40, r = 3, seeds = 50;
        std::vector<double> rel(seeds, std::numeric_limits<double>::infinity());
        parallel_for(seeds, [&](std::size_t s) {
            const std::uint64_t base = derive_stream(50000, s);
            OdecoDecomposition truth = random_odeco({d, d, d}, r, LambdaSpec::equal(1.0),
                                                    derive_stream(base, 1));
            DenseTensor e = sample_noise({d, d, d}, NoiseSpec::gaussian(1.0, derive_stream(base, 2)));
            NoiseDiagnostics diag;
            // eps1/eps2 only; the spectral estimate is not needed here
            diag.eps1 = detail::eps1_only(e, truth);
            for (int j = 0; j < r; ++j) {
                const auto u = truth.component_vectors(j);
                for (int k1 = 1; k1 <= 3; ++k1)
                    for (int k2 = k1 + 1; k2 <= 3; ++k2) {
                        DenseTensor slice = e;
                        for (int m = 3; m >= 1; --m) {
                            if (m == k1 || m == k2) continue;
                            slice = contract_mode(slice, m, u[static_cast<std::size_t>(m - 1)]);
                        }
                        diag.eps2 = std::max(diag.eps2, svd(matricize(slice, 1)).s[0]);
                    }
            }
            const double lambda = 50.0 * diag.eps1;
            truth.lambdas.assign(static_cast<std::size_t>(r), lambda);
            DenseTensor x = add(synthesize(truth), e);
            EstimatedDecomposition est = decompose_with_deflation(
                x, r, make_perturbed_oracle_initializer(truth, 0.25, derive_stream(base, 3)),
                default_power_iters(x, diag.eps1));
            ComponentMatch match = match_components(truth, est);
            FirstOrderOptions fopts;
            fopts.match = &match;
            fopts.enorm_estimate = 0.0;  // envelope_perturbation unused here
            fopts.eps1 = diag.eps1;
            fopts.eps2 = diag.eps2;
            FirstOrderReport rep = first_order_residual(truth, est, e, fopts);
            double worst = 0.0;
            for (const auto& comp : rep.residuals)
                for (double v : comp) worst = std::max(worst, v);
            const double envelope = 20.0 * (diag.eps1 * diag.eps1 + diag.eps1 * diag.eps2) / (lambda * lambda);
            rel[s] = worst / envelope;
        });
        int within = 0;
        for (double v : rel)
            if (v <= 1.0) ++within;
        std::ostringstream det;
        det << within << "/50 seeds inside 20 (eps1^2 + eps1 eps2)/lambda^2; median rel "
            << median(rel);
        res.detail = det.str();
        res.passed = within >= 45 && median(rel) <= 1.0;
    });
}

// 6. General random-slicing initialization and its signal threshold.
inline CriterionResult criterion_init_general() {
    return detail::timed(6, "general slicing initialization (HOSVD + random slicing)", [](CriterionResult& res) {
        const int d = 30, r = 3, seeds = 50;
        const double lambda_hi = 8.0 * std::pow(30.0, 0.75) * std::sqrt(std::log(30.0));
        const int L = default_slice_count(r, d);  // ceil(2 r^2 log d) = 62
        auto success_rate = [&](double lambda, std::uint64_t tag) {
            std::vector<int> ok(seeds, 0);
            parallel_for(seeds, [&](std::size_t s) {
                const std::uint64_t base = derive_stream(tag, s);
                OdecoDecomposition truth = random_odeco({d, d, d}, r, LambdaSpec::equal(lambda),
                                                        derive_stream(base, 1));
                DenseTensor x = add(synthesize(truth),
                                    sample_noise({d, d, d}, NoiseSpec::gaussian(1.0, derive_stream(base, 2))));
                PipelineRun run = run_deflation_pipeline(
                    x, r, make_general_slicing_initializer(r, L, derive_stream(base, 3)));
                std::vector<double> claims = detail::init_claim_errors(truth, run.inits);
                bool good = claims.size() == static_cast<std::size_t>(r);
                for (double c : claims)
                    if (!(c <= 0.25)) good = false;
                ok[s] = good ? 1 : 0;
            });
            int total = 0;
            for (int v : ok) total += v;
            return total;
        };
        const int hi = success_rate(lambda_hi, 60001);
        const int lo = success_rate(lambda_hi / 8.0, 60002);
        std::ostringstream det;
        det << "success " << hi << "/50 at lambda = 8 d^{3/4} sqrt(log d) (need >= 45); " << lo
            << "/50 at lambda/8 (need < 25); L = " << L;
        res.detail = det.str();
        res.passed = hi >= 45 && lo < 25;
    });
}

// 7. Incoherent sample-split initialization at p = 4.
inline CriterionResult criterion_init_incoherent() {
    return detail::timed(7, "incoherent slicing initialization (sample split, p=4)", [](CriterionResult& res) {
        const int d = 12, r = 2, seeds = 50;
        const double lambda = 8.0 * d * std::log(static_cast<double>(d));
        const int L = default_slice_count(r, d);  // 20
        const double threshold = 0.25 + 1.0 / std::sqrt(std::log(static_cast<double>(d)));
        std::vector<int> ok(seeds, 0);
        parallel_for(seeds, [&](std::size_t s) {
            const std::uint64_t base = derive_stream(70001, s);
            OdecoDecomposition truth = random_odeco({d, d, d, d}, r, LambdaSpec::equal(lambda),
                                                    derive_stream(base, 1));
            DenseTensor x = add(synthesize(truth),
                                sample_noise({d, d, d, d}, NoiseSpec::gaussian(1.0, derive_stream(base, 2))));
            PipelineRun run = run_deflation_pipeline(
                x, r, make_incoherent_slicing_initializer(r, L, derive_stream(base, 3)));
            std::vector<double> claims = detail::init_claim_errors(truth, run.inits);
            bool good = claims.size() == static_cast<std::size_t>(r);
            for (double c : claims)
                if (!(c <= threshold)) good = false;
            ok[s] = good ? 1 : 0;
        });
        int total = 0;
        for (int v : ok) total += v;
        std::ostringstream det;
        det << "success " << total << "/50 with threshold " << threshold << " (need >= 40); L = " << L;
        res.detail = det.str();
        res.passed = total >= 40;
    });
}

// 8. Asymptotic overlap statistic and the chi-square variance target.
inline CriterionResult criterion_asymptotic_overlap() {
    return detail::timed(8, "asymptotic overlap statistic (d=30, r=1, 200 seeds)", [](CriterionResult& res) {
        const int d = 30, seeds = 200;
        const double lambda = 20.0 * std::pow(30.0, 0.75);
        std::vector<double> omo(seeds, std::numeric_limits<double>::quiet_NaN());
        std::vector<double> sig(seeds, std::numeric_limits<double>::quiet_NaN());
        parallel_for(seeds, [&](std::size_t s) {
            const std::uint64_t base = derive_stream(80001, s);
            OdecoDecomposition truth = random_odeco({d, d, d}, 1, LambdaSpec::equal(lambda),
                                                    derive_stream(base, 1));
            DenseTensor e = sample_noise({d, d, d}, NoiseSpec::gaussian(1.0, derive_stream(base, 2)));
            DenseTensor x = add(synthesize(truth), e);
            PipelineRun run = run_deflation_pipeline(
                x, 1, make_general_slicing_initializer(1, default_slice_count(1, d), derive_stream(base, 3)));
            ComponentMatch match = match_components(truth, run.estimate);
            if (!match.matched[0]) return;
            const double overlap = dot(truth.component(0, 1), run.estimate.component(match.permutation[0], 1));
            omo[s] = 1.0 - overlap * overlap;
            const std::vector<double> w = contract_all_but(e, 1, truth.component_vectors(0));
            double mean = 0.0;
            for (double v : w) mean += v * v;
            mean /= static_cast<double>(w.size());
            double var = 0.0;
            for (double v : w) var += (v * v - mean) * (v * v - mean);
            sig[s] = var / static_cast<double>(w.size() - 1);
        });
        double omo_mean = 0.0, sig_mean = 0.0;
        int n = 0;
        for (int s = 0; s < seeds; ++s) {
            if (std::isnan(omo[static_cast<std::size_t>(s)])) continue;
            omo_mean += omo[static_cast<std::size_t>(s)];
            sig_mean += sig[static_cast<std::size_t>(s)];
            ++n;
        }
        omo_mean /= n;
        sig_mean /= n;
        const double target = (d - 1.0) / (lambda * lambda);
        const bool overlap_ok = std::abs(omo_mean - target) <= 0.2 * target;
        const bool sigma_ok = sig_mean >= 1.6 && sig_mean <= 2.4;
        std::ostringstream det;
        det << "mean(1-<u,uhat>^2) = " << omo_mean << " vs (d-1)/lambda^2 = " << target
            << " (within 20%); mean sigma^2 = " << sig_mean << " (in [1.6, 2.4]); " << n
            << "/200 seeds matched";
        res.detail = det.str();
        res.passed = overlap_ok && sigma_ok && n == seeds;
    });
}

// 9. Heavy-tail separation: the operator norm outgrows eps1 while the
// iteration error keeps tracking eps1. Stated at df = 9, where the eighth
// moment is still finite; a df = 5 companion run is reported alongside as
// the diagnostic for the separation mechanism itself.
inline CriterionResult criterion_heavy_tail() {
    return detail::timed(9, "heavy-tail separation (student t, df=9, p=4)", [](CriterionResult& res) {
        const std::vector<int> dgrid = {8, 12, 16};
        const int seeds = 20;
        std::vector<double> med_sep(dgrid.size()), med_track(dgrid.size()), med_sep5(dgrid.size());
        for (std::size_t gi = 0; gi < dgrid.size(); ++gi) {
            const int d = dgrid[gi];
            std::vector<double> sep(seeds), track(seeds), sep5(seeds);
            parallel_for(seeds, [&](std::size_t s) {
                const std::uint64_t base = derive_stream(90000 + 10 * gi, s);
                OdecoDecomposition truth = random_odeco({d, d, d, d}, 1, LambdaSpec::equal(1.0),
                                                        derive_stream(base, 1));
                DenseTensor e = sample_noise({d, d, d, d},
                                             NoiseSpec::student_t(9.0, derive_stream(base, 2)));
                NoiseDiagnostics diag = error_functionals(e, truth, derive_stream(base, 3));
                sep[s] = diag.spectral_norm_est / diag.eps1;
                const double lambda = 20.0 * diag.eps1;
                truth.lambdas.assign(1, lambda);
                DenseTensor x = add(synthesize(truth), e);
                EstimatedDecomposition est = decompose_with_deflation(
                    x, 1, make_perturbed_oracle_initializer(truth, 0.25, derive_stream(base, 4)),
                    default_power_iters(x, diag.eps1));
                ComponentMatch match = match_components(truth, est);
                track[s] = match.max_sin[0] * lambda / diag.eps1;
                // companion draw in the only-4th-moments regime
                DenseTensor e5 = sample_noise({d, d, d, d},
                                              NoiseSpec::student_t(5.0, derive_stream(base, 5), true));
                double eps1_5 = detail::eps1_only(e5, truth);
                sep5[s] = spectral_norm_estimate(e5, derive_stream(base, 6)) / eps1_5;
            });
            med_sep[gi] = median(sep);
            med_track[gi] = median(track);
            med_sep5[gi] = median(sep5);
        }
        bool increasing = med_sep[0] < med_sep[1] && med_sep[1] < med_sep[2];
        bool tracks = true;
        for (double t : med_track)
            if (!(t <= 10.0)) tracks = false;
        std::ostringstream det;
        det << "median ||E||/eps1 at df=9 = {" << med_sep[0] << ", " << med_sep[1] << ", "
            << med_sep[2] << "} (strictly increasing required); median sin*lambda/eps1 = {"
            << med_track[0] << ", " << med_track[1] << ", " << med_track[2]
            << "} (<= 10); df=5 companion = {" << med_sep5[0] << ", " << med_sep5[1] << ", "
            << med_sep5[2] << "}";
        res.detail = det.str();
        res.passed = increasing && tracks;
    });
}

// 10. Cross-module invariants re-run as a single gate.
inline CriterionResult criterion_invariants() {
    return detail::timed(10, "invariant suites (round-trip, eps chain, norms, deflation, matching, determinism)", [](CriterionResult& res) {
        std::ostringstream why;
        bool pass = true;
        Rng rng(101);

        // matricization round-trip, p in {3,4,5}
        for (const auto& dims : std::vector<std::vector<int>>{{3, 4, 2}, {2, 3, 2, 2}, {2, 2, 2, 2, 2}}) {
            DenseTensor t(dims);
            for (double& x : t.data) x = rng.gaussian();
            for (int k = 1; k <= t.order(); ++k)
                if (dematricize(matricize(t, k), k, dims).data != t.data) {
                    pass = false;
                    why << "round-trip failed at k=" << k << "; ";
                }
        }

        // eps chain on gaussian / student / spike draws
        for (std::uint64_t s = 0; s < 3; ++s) {
            OdecoDecomposition truth = random_odeco({8, 8, 8}, 2, LambdaSpec::equal(1.0), 500 + s);
            for (int fam = 0; fam < 3; ++fam) {
                NoiseSpec spec = fam == 0   ? NoiseSpec::gaussian(1.0, s)
                                 : fam == 1 ? NoiseSpec::student_t(9.0, s)
                                            : NoiseSpec::rank_one_spike(2.0, s);
                NoiseDiagnostics diag = error_functionals(sample_noise({8, 8, 8}, spec, &truth), truth, s);
                if (!(diag.eps0 <= diag.eps1 + 1e-12 && diag.eps1 <= diag.eps2 + 1e-12 &&
                      diag.eps2 <= diag.spectral_norm_est * (1.0 + 1e-6))) {
                    pass = false;
                    why << "eps chain violated; ";
                }
            }
        }

        // unit-norm trace invariant
        {
            OdecoDecomposition truth = random_odeco({7, 7, 7}, 2, LambdaSpec::equal(3.0), 7);
            DenseTensor x = add(synthesize(truth),
                                sample_noise({7, 7, 7}, NoiseSpec::gaussian(0.2, 8)));
            PowerIterationTrace trace =
                power_iteration(x, make_perturbed_oracle_initializer(truth, 0.2, 9)(x, 0), 25);
            for (const auto& sweep : trace.iterates)
                for (const auto& v : sweep)
                    if (std::abs(norm2(v) - 1.0) > 1e-12) {
                        pass = false;
                        why << "trace iterate not unit; ";
                    }
        }

        // deflation exactness with oracle components
        {
            OdecoDecomposition truth = random_odeco({9, 9, 9}, 4, LambdaSpec::geometric(2.0, 0.7), 12);
            DenseTensor t = synthesize(truth);
            DenseTensor current = t;
            for (int j = 0; j < 4; ++j) current = deflate(current, truth.component_vectors(j)).deflated;
            if (frobenius_norm(current) > 1e-10 * frobenius_norm(t)) {
                pass = false;
                why << "deflation residual too large; ";
            }
        }

        // matching invariance under permutation and paired sign flips
        {
            OdecoDecomposition truth = random_odeco({6, 6, 6}, 3, LambdaSpec::explicit_list({3.0, 2.0, 1.0}), 13);
            EstimatedDecomposition est;
            est.lambdas_hat = {truth.lambdas[2], truth.lambdas[0], truth.lambdas[1]};
            est.traces.resize(3);
            const int order[3] = {2, 0, 1};
            for (int q = 1; q <= 3; ++q) {
                Matrix f(6, 3);
                for (int slot = 0; slot < 3; ++slot) {
                    std::vector<double> col = truth.component(order[slot], q);
                    if (q <= 2)  // flip two modes: even parity per component
                        for (double& v : col) v = -v;
                    f.set_column(slot, col);
                }
                est.factors_hat.push_back(f);
            }
            ComponentMatch match = match_components(truth, est);
            for (int j = 0; j < 3; ++j)
                if (match.max_sin[static_cast<std::size_t>(j)] > 1e-12 ||
                    match.lambda_errors[static_cast<std::size_t>(j)] > 1e-12) {
                    pass = false;
                    why << "matching not invariant; ";
                }
        }

        // determinism of the harness under thread-count changes
        {
            ExperimentConfig cfg;
            cfg.dims = {6, 6, 6};
            cfg.rank = 2;
            cfg.lambda_value = 8.0;
            cfg.noise_family = "gaussian";
            cfg.noise_sigma = 0.2;
            cfg.initializer = "perturbed_oracle";
            cfg.seed_count = 4;
            const std::string a = csv_body(cfg, run_experiment(cfg, 1));
            const std::string b = csv_body(cfg, run_experiment(cfg, 2));
            if (a != b) {
                pass = false;
                why << "harness output depends on thread count; ";
            }
        }

        res.detail = pass ? "all invariant groups green" : why.str();
        res.passed = pass;
    });
}

struct AcceptanceSummary {
    std::vector<CriterionResult> results;
    bool all_passed = true;
};

template <typename Out>
inline AcceptanceSummary run_acceptance(Out& out) {
    AcceptanceSummary summary;
    const struct {
        CriterionResult (*fn)();
        double budget_ms;
    } table[] = {
        {criterion_noiseless_recovery, 30000.0},
        {criterion_matricization_identity, 0.0},
        {criterion_worked_example, 5000.0},
        {criterion_gap_free_constant, 120000.0},
        {criterion_leading_order, 0.0},
        {criterion_init_general, 120000.0},
        {criterion_init_incoherent, 180000.0},
        {criterion_asymptotic_overlap, 120000.0},
        {criterion_heavy_tail, 0.0},
        {criterion_invariants, 60000.0},
    };
    for (const auto& entry : table) {
        CriterionResult r = entry.fn();
        if (entry.budget_ms > 0.0 && r.wall_ms > entry.budget_ms) {
            r.passed = false;
            r.detail += " [over time budget]";
        }
        out << "criterion " << r.id << (r.passed ? " [PASS] " : " [FAIL] ") << r.name << " - "
            << r.detail << " (" << static_cast<long>(r.wall_ms) << " ms)\n";
        out.flush();
        summary.all_passed = summary.all_passed && r.passed;
        summary.results.push_back(std::move(r));
    }
    out << (summary.all_passed ? "ACCEPTANCE: all criteria passed\n"
                               : "ACCEPTANCE: at least one criterion failed\n");
    return summary;
}

}  // namespace odeco::verify
