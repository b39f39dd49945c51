#include <catch_amalgamated.hpp>

#include <cmath>

#include "odeco/noise.hpp"
#include "odeco/odeco.hpp"
#include "odeco/rng.hpp"
#include "odeco/tensor.hpp"

using namespace odeco;

TEST_CASE("sample_noise basics") {
    SECTION("sigma = 0 gives the zero tensor") {
        DenseTensor e = sample_noise({4, 4, 4}, NoiseSpec::gaussian(0.0, 5));
        for (double x : e.data) REQUIRE(x == 0.0);
    }
    SECTION("fixed seed reproduces the draw") {
        DenseTensor a = sample_noise({3, 4, 5}, NoiseSpec::gaussian(1.0, 42));
        DenseTensor b = sample_noise({3, 4, 5}, NoiseSpec::gaussian(1.0, 42));
        REQUIRE(a.data == b.data);
    }
    SECTION("entry mean obeys the CLT envelope over 20 seeds") {
        double avg = 0.0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            DenseTensor e = sample_noise({30, 30, 30}, NoiseSpec::gaussian(1.0, seed));
            double mean = 0.0;
            for (double x : e.data) mean += x;
            avg += mean / static_cast<double>(e.size());
        }
        REQUIRE(std::abs(avg / 20.0) <= 0.05);
    }
    SECTION("student_t moment guards") {
        REQUIRE_THROWS_AS(sample_noise({3, 3, 3}, NoiseSpec::student_t(3.5, 1)), std::invalid_argument);
        REQUIRE_THROWS_AS(sample_noise({3, 3, 3}, NoiseSpec::student_t(3.5, 1, true)), std::invalid_argument);
        REQUIRE_THROWS_AS(sample_noise({3, 3, 3}, NoiseSpec::student_t(6.0, 1)), std::invalid_argument);
        REQUIRE_NOTHROW(sample_noise({3, 3, 3}, NoiseSpec::student_t(6.0, 1, true)));
        REQUIRE_NOTHROW(sample_noise({3, 3, 3}, NoiseSpec::student_t(9.0, 1)));
    }
    SECTION("student_t is rescaled to unit variance") {
        DenseTensor e = sample_noise({20, 20, 20}, NoiseSpec::student_t(9.0, 123));
        double ss = 0.0;
        for (double x : e.data) ss += x * x;
        REQUIRE(ss / static_cast<double>(e.size()) == Catch::Approx(1.0).margin(0.06));
    }
}

TEST_CASE("error functionals") {
    OdecoDecomposition truth = random_odeco({8, 8, 8}, 3, LambdaSpec::equal(1.0), 7);

    SECTION("zero error gives all zeros") {
        DenseTensor z({8, 8, 8});
        NoiseDiagnostics diag = error_functionals(z, truth);
        REQUIRE(diag.eps0 == 0.0);
        REQUIRE(diag.eps1 == 0.0);
        REQUIRE(diag.eps2 == 0.0);
        REQUIRE(diag.spectral_norm_est == 0.0);
    }
    SECTION("aligned rank-one spike: every functional equals the spike weight") {
        const double mu = 0.7;
        DenseTensor e = sample_noise({8, 8, 8}, NoiseSpec::rank_one_spike(mu, 1), &truth);
        // hand contraction oracle: <E, u1 o u1 o u1> = mu for unit factors
        REQUIRE(contract_full(e, truth.component_vectors(0)) == Catch::Approx(mu).margin(1e-12));
        NoiseDiagnostics diag = error_functionals(e, truth);
        REQUIRE(diag.eps0 == Catch::Approx(mu).margin(1e-10));
        REQUIRE(diag.eps1 == Catch::Approx(mu).margin(1e-10));
        REQUIRE(diag.eps2 == Catch::Approx(mu).margin(1e-10));
        REQUIRE(diag.spectral_norm_est == Catch::Approx(mu).margin(1e-8));
    }
    SECTION("gaussian eps1 scales like sqrt(d)") {
        for (int d : {10, 20, 40}) {
            std::vector<double> ratios;
            for (std::uint64_t seed = 0; seed < 20; ++seed) {
                OdecoDecomposition tr = random_odeco({d, d, d}, 2, LambdaSpec::equal(1.0), 1000 + seed);
                DenseTensor e = sample_noise({d, d, d}, NoiseSpec::gaussian(1.0, seed));
                NoiseDiagnostics diag = error_functionals(e, tr, seed);
                ratios.push_back(diag.eps1 / std::sqrt(static_cast<double>(d)));
            }
            for (double r : ratios) {
                REQUIRE(r >= 0.7);
                REQUIRE(r <= 1.8);
            }
        }
    }
    SECTION("dims mismatch is rejected") {
        DenseTensor wrong({4, 4, 4});
        REQUIRE_THROWS_AS(error_functionals(wrong, truth), std::invalid_argument);
    }
}

TEST_CASE("epsilon chain holds on every generated instance") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        OdecoDecomposition truth = random_odeco({9, 9, 9}, 3, LambdaSpec::equal(1.0), 50 + seed);
        for (int fam = 0; fam < 3; ++fam) {
            NoiseSpec spec = fam == 0   ? NoiseSpec::gaussian(1.0, seed)
                             : fam == 1 ? NoiseSpec::student_t(9.0, seed)
                                        : NoiseSpec::rank_one_spike(2.0, seed);
            DenseTensor e = sample_noise({9, 9, 9}, spec, &truth);
            NoiseDiagnostics diag = error_functionals(e, truth, seed);
            REQUIRE(diag.eps0 <= diag.eps1 + 1e-12);
            REQUIRE(diag.eps1 <= diag.eps2 + 1e-12);
            REQUIRE(diag.eps2 <= diag.spectral_norm_est * (1.0 + 1e-6));
        }
    }
}

TEST_CASE("mode-p splitting") {
    Rng rng(3);
    DenseTensor x({4, 3, 6});
    for (double& v : x.data) v = rng.gaussian();

    SECTION("indices are disjoint, cover the mode, and reassemble bit-exactly") {
        ModePSplit split = split_mode_p(x, 17);
        std::vector<bool> seen(6, false);
        for (int i : split.first_indices) seen[static_cast<std::size_t>(i)] = true;
        for (int i : split.second_indices) {
            REQUIRE_FALSE(seen[static_cast<std::size_t>(i)]);
            seen[static_cast<std::size_t>(i)] = true;
        }
        for (bool b : seen) REQUIRE(b);
        REQUIRE(split.first.dim(3) + split.second.dim(3) == 6);
        DenseTensor back = unsplit_mode_p(split, x.dims);
        REQUIRE(back.data == x.data);
    }
    SECTION("d_p = 2 resamples to one slice per half") {
        DenseTensor small({3, 3, 2});
        for (double& v : small.data) v = 1.0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            ModePSplit split = split_mode_p(small, seed);
            REQUIRE(split.first_indices.size() == 1);
            REQUIRE(split.second_indices.size() == 1);
        }
        DenseTensor degenerate({3, 3, 1});
        REQUIRE_THROWS_AS(split_mode_p(degenerate, 1), std::invalid_argument);
    }
    SECTION("assignment frequency stays near 1/2 over 200 seeds") {
        const int dp = 10;
        DenseTensor t({2, 2, dp});
        for (double& v : t.data) v = 1.0;
        std::vector<int> counts(static_cast<std::size_t>(dp), 0);
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            ModePSplit split = split_mode_p(t, seed);
            for (int i : split.first_indices) counts[static_cast<std::size_t>(i)]++;
        }
        for (int c : counts) {
            REQUIRE(c >= 80);   // 0.4 * 200
            REQUIRE(c <= 120);  // 0.6 * 200
        }
    }
}

TEST_CASE("heavy-tail smoke: functionals finite and ordered for student_t") {
    OdecoDecomposition truth = random_odeco({8, 8, 8, 8}, 2, LambdaSpec::equal(1.0), 2);
    DenseTensor e = sample_noise({8, 8, 8, 8}, NoiseSpec::student_t(9.0, 5));
    NoiseDiagnostics diag = error_functionals(e, truth, 5);
    REQUIRE(std::isfinite(diag.spectral_norm_est));
    REQUIRE(diag.spectral_norm_est / diag.eps1 > 1.0);
}

TEST_CASE("rank-one spike without alignment uses a seeded random direction") {
    DenseTensor a = sample_noise({5, 5, 5}, NoiseSpec::rank_one_spike(2.0, 11));
    DenseTensor b = sample_noise({5, 5, 5}, NoiseSpec::rank_one_spike(2.0, 11));
    REQUIRE(a.data == b.data);
    REQUIRE(frobenius_norm(a) == Catch::Approx(2.0).margin(1e-12));
}
