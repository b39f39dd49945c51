#include <catch_amalgamated.hpp>

#include <cmath>

#include "odeco/odeco.hpp"
#include "odeco/rng.hpp"
#include "odeco/spectral.hpp"
#include "odeco/tensor.hpp"

using namespace odeco;

namespace {

// Brute-force oracle at d = 2, p = 3: for unit u2(a), u3(b) on an angle grid,
// the best mode-1 vector is the normalized contraction, so
// ||T|| = max_{a,b} ||T x_2 u(a) x_3 u(b)||.
double grid_norm_oracle_d2(const DenseTensor& t, int steps) {
    double best = 0.0;
    for (int ia = 0; ia < steps; ++ia) {
        const double a = 3.14159265358979323846 * ia / steps;
        const std::vector<double> u2 = {std::cos(a), std::sin(a)};
        for (int ib = 0; ib < steps; ++ib) {
            const double b = 3.14159265358979323846 * ib / steps;
            const std::vector<double> u3 = {std::cos(b), std::sin(b)};
            std::vector<double> v = contract_all_but(t, 1, {{}, u2, u3});
            best = std::max(best, norm2(v));
        }
    }
    return best;
}

}  // namespace

TEST_CASE("spectral norm of a rank-one tensor equals its weight") {
    Rng rng(1);
    std::vector<double> u = rng.unit_vector(5), v = rng.unit_vector(4), w = rng.unit_vector(6);
    DenseTensor t = outer_rank_one(3.0, {u, v, w});
    REQUIRE(spectral_norm_estimate(t, 77) == Catch::Approx(3.0).margin(1e-10));
    REQUIRE(spectral_norm_estimate(t, 77) == Catch::Approx(frobenius_norm(t)).margin(1e-10));
}

TEST_CASE("odeco spectral norm equals the top weight, checked by grid search") {
    OdecoDecomposition dec = random_odeco({2, 2, 2}, 2, LambdaSpec::explicit_list({2.0, 1.0}), 99);
    DenseTensor t = synthesize(dec);
    const double est = spectral_norm_estimate(t, 5);
    REQUIRE(est == Catch::Approx(2.0).margin(1e-8));
    const double oracle = grid_norm_oracle_d2(t, 600);
    REQUIRE(oracle <= est + 1e-8);
    REQUIRE(oracle == Catch::Approx(2.0).margin(1e-4));
}

TEST_CASE("worked-example error tensor has norm lambda sqrt(2/(d-1))") {
    const int d = 101;
    const double lambda = 10.0;
    WorkedExample ex = worked_example(d, lambda);
    DenseTensor e = subtract(ex.x, ex.t);
    const double want = lambda * std::sqrt(2.0 / (d - 1));
    REQUIRE(want == Catch::Approx(1.41421).margin(5e-6));
    REQUIRE(spectral_norm_estimate(e, 7) == Catch::Approx(want).margin(1e-6));
}

TEST_CASE("zero tensor estimates to zero and the Frobenius bound holds") {
    DenseTensor z({3, 3, 3});
    REQUIRE(spectral_norm_estimate(z, 1) == 0.0);

    Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        DenseTensor t({3, 4, 2});
        for (double& x : t.data) x = rng.gaussian();
        REQUIRE(spectral_norm_estimate(t, trial) <= frobenius_norm(t) + 1e-12);
    }
    REQUIRE_THROWS_AS(rank_one_approx(z, 0, 10, 1), std::invalid_argument);
}
