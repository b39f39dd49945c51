#include <catch_amalgamated.hpp>

#include <cmath>

#include "odeco/odeco.hpp"
#include "odeco/rng.hpp"
#include "odeco/spectral.hpp"
#include "odeco/svd.hpp"
#include "odeco/tensor.hpp"

using namespace odeco;

TEST_CASE("synthesize frozen examples") {
    SECTION("single canonical component") {
        OdecoDecomposition dec;
        dec.p = 3;
        dec.r = 1;
        dec.dims = {2, 2, 2};
        dec.lambdas = {1.0};
        for (int q = 0; q < 3; ++q) {
            Matrix f(2, 1);
            f.at(0, 0) = 1.0;
            dec.factors.push_back(f);
        }
        DenseTensor t = synthesize(dec);
        REQUIRE(t.at({0, 0, 0}) == 1.0);
        REQUIRE(frobenius_norm(t) == 1.0);
    }
    SECTION("identity factors give a superdiagonal tensor") {
        OdecoDecomposition dec;
        dec.p = 3;
        dec.r = 2;
        dec.dims = {2, 2, 2};
        dec.lambdas = {2.0, 1.0};
        for (int q = 0; q < 3; ++q) dec.factors.push_back(Matrix::identity(2));
        DenseTensor t = synthesize(dec);
        REQUIRE(t.at({0, 0, 0}) == 2.0);
        REQUIRE(t.at({1, 1, 1}) == 1.0);
        REQUIRE(inner(t, t) == 5.0);
    }
    SECTION("singular values of the mode-1 unfolding are the weights") {
        OdecoDecomposition dec = random_odeco({6, 5, 7}, 4, LambdaSpec::geometric(3.0, 0.6), 11);
        std::vector<double> s = svd(matricize(synthesize(dec), 1)).s;
        for (int j = 0; j < 4; ++j)
            REQUIRE(s[static_cast<std::size_t>(j)] ==
                    Catch::Approx(dec.lambdas[static_cast<std::size_t>(j)]).margin(1e-10));
    }
}

TEST_CASE("random_odeco is deterministic and valid") {
    OdecoDecomposition a = random_odeco({5, 6, 4}, 3, LambdaSpec::equal(2.0), 123);
    OdecoDecomposition b = random_odeco({5, 6, 4}, 3, LambdaSpec::equal(2.0), 123);
    for (int q = 0; q < 3; ++q) REQUIRE(a.factors[static_cast<std::size_t>(q)].data == b.factors[static_cast<std::size_t>(q)].data);
    REQUIRE_NOTHROW(validate(a));

    // zero-eigengap preset used by the gap-free acceptance runs
    OdecoDecomposition eq = random_odeco({4, 4, 4}, 2, LambdaSpec::equal(5.0), 9);
    REQUIRE(eq.lambdas[0] == eq.lambdas[1]);

    REQUIRE_THROWS_AS(random_odeco({3, 3, 3}, 4, LambdaSpec::equal(1.0), 1), std::invalid_argument);
}

TEST_CASE("odeco Frobenius identity and spectral norm") {
    Rng seeds(404);
    for (int trial = 0; trial < 5; ++trial) {
        OdecoDecomposition dec =
            random_odeco({7, 6, 8}, 4, LambdaSpec::geometric(4.0, 0.75), seeds.next_u64());
        DenseTensor t = synthesize(dec);
        double sum_sq = 0.0;
        for (double l : dec.lambdas) sum_sq += l * l;
        REQUIRE(frobenius_norm(t) * frobenius_norm(t) == Catch::Approx(sum_sq).margin(1e-10));
        REQUIRE(spectral_norm_estimate(t, seeds.next_u64()) ==
                Catch::Approx(dec.lambdas[0]).margin(1e-6));
    }
}

TEST_CASE("worked example structure") {
    const int d = 11;
    const double lambda = 10.0;
    WorkedExample ex = worked_example(d, lambda);

    SECTION("modes 2 and 3 of X equal those of T exactly") {
        for (int q = 2; q <= 3; ++q)
            REQUIRE(ex.perturbed_truth.factors[static_cast<std::size_t>(q - 1)].data ==
                    ex.truth.factors[static_cast<std::size_t>(q - 1)].data);
    }
    SECTION("<e_k, v> = -1/(d-1) for k < d") {
        for (int k = 0; k < d - 1; ++k)
            REQUIRE(ex.v[static_cast<std::size_t>(k)] == Catch::Approx(-1.0 / (d - 1)));
        REQUIRE(ex.v[static_cast<std::size_t>(d - 1)] == Catch::Approx(1.0 / std::sqrt(d - 1.0)));
    }
    SECTION("X - T = lambda sum_k v o e_k o e_k entrywise") {
        DenseTensor e = subtract(ex.x, ex.t);
        DenseTensor want({d, d, d});
        for (int k = 0; k < d - 1; ++k) {
            std::vector<double> ek(static_cast<std::size_t>(d), 0.0);
            ek[static_cast<std::size_t>(k)] = 1.0;
            add_outer_rank_one(want, lambda, {ex.v, ek, ek});
        }
        for (std::size_t i = 0; i < e.data.size(); ++i)
            REQUIRE(e.data[i] == Catch::Approx(want.data[i]).margin(1e-13 * lambda));
    }
    SECTION("perturbed factors are exactly orthonormal") {
        REQUIRE_NOTHROW(validate(ex.perturbed_truth, 1e-12));
    }
    REQUIRE_THROWS_AS(worked_example(2, 1.0), std::invalid_argument);
}

TEST_CASE("incoherence report") {
    SECTION("identity factors are maximally coherent") {
        OdecoDecomposition dec;
        dec.p = 3;
        dec.r = 2;
        dec.dims = {4, 4, 4};
        dec.lambdas = {2.0, 1.0};
        Matrix f(4, 2);
        f.at(0, 0) = 1.0;
        f.at(1, 1) = 1.0;
        dec.factors = {f, f, f};
        IncoherenceReport rep = incoherence(dec);
        for (double v : rep.max_abs_entry_per_mode) REQUIRE(v == 1.0);
        REQUIRE(rep.incoherent_modes(0.5).empty());
    }
    SECTION("constant factor hits the 1/sqrt(d) floor") {
        const int d = 16;
        OdecoDecomposition dec;
        dec.p = 3;
        dec.r = 1;
        dec.dims = {d, d, d};
        dec.lambdas = {1.0};
        Matrix f(d, 1);
        for (int i = 0; i < d; ++i) f.at(i, 0) = 1.0 / 4.0;
        dec.factors = {f, f, f};
        IncoherenceReport rep = incoherence(dec);
        for (double v : rep.max_abs_entry_per_mode) REQUIRE(v == Catch::Approx(0.25));
        REQUIRE(rep.incoherent_modes(0.25).size() == 3);
    }
    SECTION("Haar factors at d=100 stay below 0.6 across 100 seeds") {
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            OdecoDecomposition dec = random_odeco({100, 100, 100}, 3, LambdaSpec::equal(1.0), seed);
            IncoherenceReport rep = incoherence(dec);
            for (double v : rep.max_abs_entry_per_mode) {
                REQUIRE(v <= 0.6);
                REQUIRE(v >= 1.0 / 10.0);  // 1/sqrt(d) floor
            }
        }
    }
}
