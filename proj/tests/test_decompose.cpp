#include <catch_amalgamated.hpp>

#include <cmath>

#include "odeco/analysis.hpp"
#include "odeco/decompose.hpp"
#include "odeco/noise.hpp"
#include "odeco/odeco.hpp"
#include "odeco/pipeline.hpp"
#include "odeco/rng.hpp"
#include "odeco/spectral.hpp"
#include "odeco/tensor.hpp"

using namespace odeco;

TEST_CASE("fixed-point decomposition recovers exact odeco tensors") {
    OdecoDecomposition truth = random_odeco({10, 10, 10}, 4, LambdaSpec::geometric(3.0, 0.7), 21);
    DenseTensor t = synthesize(truth);
    EstimatedDecomposition est = noiseless_decompose(t, 4, {}, 77);
    REQUIRE(est.unrecovered.empty());
    ComponentMatch match = match_components(truth, est);
    for (double s : match.max_sin) REQUIRE(s <= 1e-8);
    for (double err : match.lambda_errors) REQUIRE(err <= 1e-7);
}

TEST_CASE("fixed-point decomposition on a rank-one tensor") {
    Rng rng(5);
    std::vector<double> u = rng.unit_vector(7), v = rng.unit_vector(7), w = rng.unit_vector(7);
    DenseTensor t = outer_rank_one(2.0, {u, v, w});
    FixedPointConfig cfg;
    cfg.t_inner = 10;
    EstimatedDecomposition est = noiseless_decompose(t, 1, cfg, 3);
    REQUIRE(est.unrecovered.empty());
    REQUIRE(est.traces[0].iterations_used <= 10);
    DenseTensor residual = t;
    add_outer_rank_one(residual, -est.lambdas_hat[0], est.component_vectors(0));
    REQUIRE(frobenius_norm(residual) <= 1e-10);
}

TEST_CASE("fixed-point decomposition survives a zero eigengap") {
    int successes = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        OdecoDecomposition truth = random_odeco({10, 10, 10}, 2, LambdaSpec::equal(2.0), 900 + seed);
        DenseTensor t = synthesize(truth);
        EstimatedDecomposition est = noiseless_decompose(t, 2, {}, seed);
        if (!est.unrecovered.empty()) continue;
        ComponentMatch match = match_components(truth, est);
        if (match.max_sin[0] <= 1e-6 && match.max_sin[1] <= 1e-6) ++successes;
    }
    REQUIRE(successes == 50);
}

TEST_CASE("power iteration holds exact components fixed") {
    OdecoDecomposition truth = random_odeco({8, 8, 8}, 3, LambdaSpec::geometric(2.0, 0.8), 2);
    DenseTensor t = synthesize(truth);
    PowerIterationTrace trace = power_iteration(t, truth.component_vectors(0), 5);
    REQUIRE(trace.converged);
    for (const auto& sweep : trace.iterates)
        for (int q = 1; q <= 3; ++q)
            REQUIRE(sin_angle_vec(sweep[static_cast<std::size_t>(q - 1)], truth.component(0, q)) <= 1e-12);
}

TEST_CASE("power iteration on the worked example pins mode 2 to a basis vector") {
    const int d = 13;
    WorkedExample ex = worked_example(d, 10.0);
    const int k = 4;
    // start within sin angle 1/4 of component k of X
    Initializer init = make_perturbed_oracle_initializer(ex.perturbed_truth, 0.25, 31);
    PowerIterationTrace trace = power_iteration(ex.x, init(ex.x, k), 60);
    std::vector<double> ek(static_cast<std::size_t>(d), 0.0);
    ek[static_cast<std::size_t>(k)] = 1.0;
    REQUIRE(sin_angle_vec(trace.final_iterate()[1], ek) <= 1e-9);
}

TEST_CASE("power iteration error tracks eps1 over lambda under gaussian noise") {
    int within = 0;
    const int seeds = 10;
    for (std::uint64_t seed = 0; seed < seeds; ++seed) {
        OdecoDecomposition truth = random_odeco({15, 15, 15}, 3, LambdaSpec::equal(1.0), 400 + seed);
        DenseTensor e = sample_noise({15, 15, 15}, NoiseSpec::gaussian(1.0, seed));
        NoiseDiagnostics diag = error_functionals(e, truth, seed);
        const double lambda = 20.0 * diag.eps1;
        truth.lambdas.assign(3, lambda);
        DenseTensor x = add(synthesize(truth), e);
        Initializer init = make_perturbed_oracle_initializer(truth, 0.25, seed);
        PowerIterationTrace trace = power_iteration(x, init(x, 0), 50);
        double worst = 0.0;
        for (int q = 1; q <= 3; ++q)
            worst = std::max(worst, sin_angle_vec(trace.final_iterate()[static_cast<std::size_t>(q - 1)],
                                                  truth.component(0, q)));
        if (worst <= 10.0 * diag.eps1 / lambda) ++within;
    }
    REQUIRE(within >= 9);
}

TEST_CASE("power iteration rejects degenerate input") {
    DenseTensor z({3, 3, 3});
    Rng rng(1);
    std::vector<std::vector<double>> init;
    for (int q = 0; q < 3; ++q) init.push_back(rng.unit_vector(3));
    REQUIRE_THROWS_AS(power_iteration(z, init, 5), degenerate_contraction_error);
    init[0][0] += 0.5;  // not unit
    REQUIRE_THROWS_AS(power_iteration(z, init, 5), std::invalid_argument);
}

TEST_CASE("deflation frozen examples") {
    Rng rng(9);
    std::vector<double> u = rng.unit_vector(6), v = rng.unit_vector(6), w = rng.unit_vector(6);
    SECTION("deflating a rank-one tensor by its own factors annihilates it") {
        DenseTensor t = outer_rank_one(1.5, {u, v, w});
        DeflationStep step = deflate(t, {u, v, w});
        REQUIRE(step.lambda_hat == Catch::Approx(1.5).margin(1e-12));
        REQUIRE(frobenius_norm(step.deflated) <= 1e-12);
    }
    SECTION("re-contracting the deflated tensor with the same vectors gives zero") {
        DenseTensor t({6, 6, 6});
        for (double& x : t.data) x = rng.gaussian();
        DeflationStep step = deflate(t, {u, v, w});
        REQUIRE(std::abs(contract_full(step.deflated, {u, v, w})) <= 1e-12);
    }
    SECTION("after removing the top component the spectral norm drops to lambda_2") {
        OdecoDecomposition truth = random_odeco({7, 7, 7}, 3, LambdaSpec::explicit_list({3.0, 2.0, 1.0}), 5);
        DenseTensor t = synthesize(truth);
        DeflationStep step = deflate(t, truth.component_vectors(0));
        REQUIRE(spectral_norm_estimate(step.deflated, 123) == Catch::Approx(2.0).margin(1e-8));
    }
}

TEST_CASE("deflation pipeline with oracle initialization is exact") {
    OdecoDecomposition truth = random_odeco({9, 9, 9}, 4, LambdaSpec::equal(2.0), 44);
    DenseTensor t = synthesize(truth);
    EstimatedDecomposition est =
        decompose_with_deflation(t, 4, make_oracle_initializer(truth), 40, true);
    ComponentMatch match = match_components(truth, est);
    for (double s : match.max_sin) REQUIRE(s <= 1e-10);
    REQUIRE(est.has_deflation_residual);
    REQUIRE(frobenius_norm(est.deflation_residual_tensor) <= 1e-10 * frobenius_norm(t));
}

TEST_CASE("requesting more components than the true rank extracts nothing extra") {
    OdecoDecomposition truth = random_odeco({8, 8, 8}, 2, LambdaSpec::explicit_list({4.0, 2.5}), 3);
    DenseTensor t = synthesize(truth);
    // oracle init for the true components, random afterwards
    Initializer mixed = [&](const DenseTensor& x, int j) {
        if (j < 2) return truth.component_vectors(j);
        return make_random_initializer(17)(x, j);
    };
    EstimatedDecomposition est = decompose_with_deflation(t, 4, mixed, 40);
    for (int j = 2; j < 4; ++j)
        REQUIRE(std::abs(est.lambdas_hat[static_cast<std::size_t>(j)]) <= 1e-8 * 4.0);
}

TEST_CASE("pipeline with perturbed oracle meets the eps1/lambda envelope") {
    int within = 0;
    const int seeds = 10;
    for (std::uint64_t seed = 0; seed < seeds; ++seed) {
        OdecoDecomposition truth = random_odeco({12, 12, 12}, 3, LambdaSpec::equal(1.0), 700 + seed);
        DenseTensor e = sample_noise({12, 12, 12}, NoiseSpec::gaussian(1.0, 70 + seed));
        NoiseDiagnostics diag = error_functionals(e, truth, seed);
        const double lambda = 20.0 * diag.eps1;
        truth.lambdas.assign(3, lambda);
        DenseTensor x = add(synthesize(truth), e);
        EstimatedDecomposition est = decompose_with_deflation(
            x, 3, make_perturbed_oracle_initializer(truth, 0.25, seed), 60);
        ComponentMatch match = match_components(truth, est);
        bool all = true;
        for (double s : match.max_sin)
            if (s > 10.0 * diag.eps1 / lambda) all = false;
        if (all) ++within;
    }
    REQUIRE(within >= 9);
}

TEST_CASE("assumption diagnostics") {
    OdecoDecomposition truth = random_odeco({10, 10, 10}, 3, LambdaSpec::equal(5.0), 8);
    SECTION("zero noise reports zeros") {
        DenseTensor z({10, 10, 10});
        AssumptionReport rep = assumption_diagnostics(z, truth);
        REQUIRE(rep.eps0 == 0.0);
        REQUIRE(rep.eps1 == 0.0);
        REQUIRE(rep.a1_eps0_eps1 == 0.0);
        REQUIRE(rep.a1_lambda_dominates);
        for (const auto& pm : rep.a2) {
            REQUIRE(pm.first_norm == 0.0);
            REQUIRE(pm.second_norm == 0.0);
        }
    }
    SECTION("weak signal is flagged against eps1 r^{1/4}") {
        OdecoDecomposition weak = random_odeco({10, 10, 10}, 3, LambdaSpec::equal(0.5), 8);
        DenseTensor e = sample_noise({10, 10, 10}, NoiseSpec::gaussian(1.0, 4));
        AssumptionReport rep = assumption_diagnostics(e, weak, 4);
        REQUIRE(rep.lambda_min < rep.a1_eps1_r14);
        REQUIRE_FALSE(rep.a1_lambda_dominates);
    }
    SECTION("gaussian A2 first norm stays within 3 eps1 across 20 seeds") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            OdecoDecomposition tr = random_odeco({20, 20, 20}, 3, LambdaSpec::equal(1.0), 300 + seed);
            DenseTensor e = sample_noise({20, 20, 20}, NoiseSpec::gaussian(1.0, seed));
            AssumptionReport rep = assumption_diagnostics(e, tr, seed);
            for (const auto& pm : rep.a2) REQUIRE(pm.first_over_eps1 <= 3.0);
        }
    }
}

TEST_CASE("alignment ratio is nondecreasing and contraction is quadratic") {
    OdecoDecomposition truth = random_odeco({10, 10, 10}, 4, LambdaSpec::geometric(2.0, 0.8), 15);
    DenseTensor t = synthesize(truth);
    Rng rng(123);
    std::vector<std::vector<double>> init;
    for (int q = 1; q <= 3; ++q) init.push_back(rng.unit_vector(10));
    PowerIterationTrace trace = power_iteration(t, init, 40);
    AlignmentDiagnostic diag = alignment_diagnostic(trace, truth);
    // Once the iterate agrees with the winner to machine precision the
    // runner-up alignment is rounding noise, so only compare meaningful sweeps.
    for (std::size_t i = 1; i < diag.ratio_per_sweep.size(); ++i) {
        if (diag.sin_per_sweep[i] < 1e-12 || diag.sin_per_sweep[i - 1] < 1e-12) break;
        REQUIRE(diag.ratio_per_sweep[i] >= diag.ratio_per_sweep[i - 1] * (1.0 - 1e-9));
    }
    double worst_k = 0.0;
    for (std::size_t i = 0; i + 1 < diag.sin_per_sweep.size(); ++i) {
        const double s = diag.sin_per_sweep[i];
        const double s_next = diag.sin_per_sweep[i + 1];
        if (s <= 0.1 && s >= 1e-7 && s_next >= 5e-16)
            worst_k = std::max(worst_k, s_next / (s * s));
    }
    INFO("empirical quadratic-contraction constant K = " << worst_k);
    REQUIRE(worst_k <= 50.0);
}

TEST_CASE("trace iterates are unit norm to 1e-12") {
    OdecoDecomposition truth = random_odeco({7, 7, 7}, 2, LambdaSpec::equal(3.0), 1);
    DenseTensor e = sample_noise({7, 7, 7}, NoiseSpec::gaussian(0.3, 2));
    DenseTensor x = add(synthesize(truth), e);
    PowerIterationTrace trace =
        power_iteration(x, make_perturbed_oracle_initializer(truth, 0.2, 3)(x, 0), 25);
    for (const auto& sweep : trace.iterates)
        for (const auto& v : sweep) REQUIRE(std::abs(norm2(v) - 1.0) <= 1e-12);
}
