#include <catch_amalgamated.hpp>

#include <cmath>

#include "odeco/matrix.hpp"
#include "odeco/odeco.hpp"
#include "odeco/rng.hpp"
#include "odeco/svd.hpp"
#include "odeco/tensor.hpp"

using namespace odeco;

namespace {

Matrix random_matrix(int r, int c, Rng& rng) {
    Matrix m(r, c);
    for (double& x : m.data) x = rng.gaussian();
    return m;
}

double ortho_defect(const Matrix& q) {
    double worst = 0.0;
    for (int a = 0; a < q.cols; ++a)
        for (int b = 0; b < q.cols; ++b) {
            double g = 0.0;
            for (int i = 0; i < q.rows; ++i) g += q.at(i, a) * q.at(i, b);
            worst = std::max(worst, std::abs(g - (a == b ? 1.0 : 0.0)));
        }
    return worst;
}

double reconstruction_residual(const Matrix& m, const SvdResult& s) {
    Matrix sv(s.u.cols, s.v.rows);
    for (int j = 0; j < s.v.rows; ++j)
        for (int k = 0; k < s.u.cols; ++k) sv.at(k, j) = s.s[static_cast<std::size_t>(k)] * s.v.at(j, k);
    Matrix rec = matmul(s.u, sv);
    double err = 0.0;
    for (std::size_t i = 0; i < m.data.size(); ++i) err += (rec.data[i] - m.data[i]) * (rec.data[i] - m.data[i]);
    return std::sqrt(err);
}

}  // namespace

TEST_CASE("gram_schmidt frozen examples") {
    SECTION("already orthonormal input is unchanged") {
        Matrix q = Matrix::identity(4);
        GramSchmidtResult g = gram_schmidt(q);
        REQUIRE(g.degenerate.empty());
        for (std::size_t i = 0; i < q.data.size(); ++i)
            REQUIRE(g.q.data[i] == Catch::Approx(q.data[i]).margin(1e-12));
    }
    SECTION("(1,0),(1,1) orthonormalizes to the canonical basis") {
        Matrix m(2, 2);
        m.at(0, 0) = 1.0;
        m.at(0, 1) = 1.0;
        m.at(1, 1) = 1.0;
        GramSchmidtResult g = gram_schmidt(m);
        REQUIRE(g.degenerate.empty());
        REQUIRE(g.q.at(0, 0) == Catch::Approx(1.0));
        REQUIRE(g.q.at(1, 0) == Catch::Approx(0.0).margin(1e-15));
        REQUIRE(g.q.at(0, 1) == Catch::Approx(0.0).margin(1e-15));
        REQUIRE(g.q.at(1, 1) == Catch::Approx(1.0));
    }
    SECTION("duplicated column is flagged degenerate, not silently fixed") {
        Matrix m(3, 2);
        m.at(0, 0) = 1.0;
        m.at(1, 0) = 2.0;
        m.at(0, 1) = 1.0;
        m.at(1, 1) = 2.0;
        GramSchmidtResult g = gram_schmidt(m);
        REQUIRE(g.degenerate == std::vector<int>{1});
    }
}

TEST_CASE("gram_schmidt output is orthonormal to 1e-10") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix m = random_matrix(12, 5, rng);
        GramSchmidtResult g = gram_schmidt(m);
        REQUIRE(g.degenerate.empty());
        REQUIRE(ortho_defect(g.q) <= 1e-10);
    }
}

TEST_CASE("svd frozen examples") {
    SECTION("diagonal matrix") {
        Matrix m(2, 2);
        m.at(0, 0) = 3.0;
        m.at(1, 1) = 1.0;
        SvdResult s = svd(m);
        REQUIRE(s.s[0] == Catch::Approx(3.0).margin(1e-12));
        REQUIRE(s.s[1] == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("rank one u v^T") {
        Rng rng(3);
        std::vector<double> u = rng.gaussian_vector(5), v = rng.gaussian_vector(3);
        Matrix m(5, 3);
        for (int j = 0; j < 3; ++j)
            for (int i = 0; i < 5; ++i) m.at(i, j) = u[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)];
        SvdResult s = svd(m);
        REQUIRE(s.s[0] == Catch::Approx(norm2(u) * norm2(v)).margin(1e-10));
        for (std::size_t k = 1; k < s.s.size(); ++k) REQUIRE(s.s[k] <= 1e-10 * s.s[0]);
        REQUIRE(ortho_defect(s.u) <= 1e-10);
        REQUIRE(ortho_defect(s.v) <= 1e-10);
    }
    REQUIRE_THROWS_AS(svd(Matrix(0, 0)), std::invalid_argument);
    Matrix bad(2, 2);
    bad.at(0, 0) = std::nan("");
    REQUIRE_THROWS_AS(svd(bad), std::invalid_argument);
}

TEST_CASE("svd satisfies the reconstruction and orthogonality contract") {
    Rng rng(17);
    const int shapes[][2] = {{6, 6}, {9, 4}, {4, 9}, {12, 3}, {1, 5}, {5, 1}};
    for (auto& sh : shapes) {
        Matrix m = random_matrix(sh[0], sh[1], rng);
        SvdResult s = svd(m);
        for (std::size_t k = 1; k < s.s.size(); ++k) REQUIRE(s.s[k] <= s.s[k - 1] + 1e-15);
        REQUIRE(ortho_defect(s.u) <= 1e-10);
        REQUIRE(ortho_defect(s.v) <= 1e-10);
        REQUIRE(reconstruction_residual(m, s) <= 1e-10 * std::max(1.0, frobenius_norm(m)));
    }
}

TEST_CASE("khatri_rao frozen examples") {
    SECTION("identity (.) identity") {
        Matrix kr = khatri_rao(Matrix::identity(2), Matrix::identity(2));
        REQUIRE(kr.rows == 4);
        REQUIRE(kr.cols == 2);
        // columns e1 (x) e1 and e2 (x) e2 in the first-factor-fastest layout
        REQUIRE(kr.at(0, 0) == 1.0);
        REQUIRE(kr.at(3, 1) == 1.0);
        REQUIRE(frobenius_norm(kr) == Catch::Approx(std::sqrt(2.0)));
    }
    SECTION("single columns give the Kronecker vector u_i v_j") {
        Matrix u(3, 1), v(2, 1);
        for (int i = 0; i < 3; ++i) u.at(i, 0) = i + 1.0;
        for (int j = 0; j < 2; ++j) v.at(j, 0) = 10.0 * (j + 1);
        Matrix kr = khatri_rao(u, v);
        for (int j = 0; j < 2; ++j)
            for (int i = 0; i < 3; ++i)
                REQUIRE(kr.at(i + 3 * j, 0) == u.at(i, 0) * v.at(j, 0));
    }
    Matrix a(2, 2), b(2, 3);
    REQUIRE_THROWS_AS(khatri_rao(a, b), std::invalid_argument);
}

TEST_CASE("odeco matricization identity with the khatri_rao factor") {
    Rng seeds(2024);
    for (int trial = 0; trial < 5; ++trial) {
        const std::uint64_t seed = seeds.next_u64();
        const int p = (trial % 2 == 0) ? 3 : 4;
        std::vector<int> dims(static_cast<std::size_t>(p), 5);
        OdecoDecomposition dec = random_odeco(dims, 3, LambdaSpec::geometric(2.0, 0.7), seed);
        DenseTensor t = synthesize(dec);
        for (int q = 1; q <= p; ++q) {
            // V^(q) = U^(1) kr ... kr U^(q-1) kr U^(q+1) kr ... kr U^(p)
            Matrix v;
            bool first = true;
            for (int l = 1; l <= p; ++l) {
                if (l == q) continue;
                v = first ? dec.factors[static_cast<std::size_t>(l - 1)]
                          : khatri_rao(v, dec.factors[static_cast<std::size_t>(l - 1)]);
                first = false;
            }
            Matrix lhs = matricize(t, q);
            Matrix scaled(v.rows, v.cols);
            for (int c = 0; c < v.cols; ++c)
                for (int i = 0; i < v.rows; ++i)
                    scaled.at(i, c) = v.at(i, c) * dec.lambdas[static_cast<std::size_t>(c)];
            Matrix rhs = matmul(dec.factors[static_cast<std::size_t>(q - 1)], transpose(scaled));
            double err = 0.0;
            for (std::size_t i = 0; i < lhs.data.size(); ++i)
                err += (lhs.data[i] - rhs.data[i]) * (lhs.data[i] - rhs.data[i]);
            REQUIRE(std::sqrt(err) <= 1e-10);

            // singular values of Mat_q equal the sorted weights
            std::vector<double> s = svd(lhs).s;
            for (int j = 0; j < dec.r; ++j)
                REQUIRE(s[static_cast<std::size_t>(j)] ==
                        Catch::Approx(dec.lambdas[static_cast<std::size_t>(j)]).margin(1e-10));
            for (std::size_t j = static_cast<std::size_t>(dec.r); j < s.size(); ++j)
                REQUIRE(s[j] <= 1e-10);
        }
    }
}

TEST_CASE("sym_eig and the gram fast path agree with svd") {
    Rng rng(31);
    Matrix m = random_matrix(6, 40, rng);
    SvdResult s = svd(m);
    GramSpectral g = left_singular_via_gram(m, 3);
    for (int k = 0; k < 3; ++k) {
        REQUIRE(g.values[static_cast<std::size_t>(k)] ==
                Catch::Approx(s.s[static_cast<std::size_t>(k)]).epsilon(1e-7));
        const double overlap = std::abs(dot(g.vectors.column(k), s.u.column(k)));
        REQUIRE(overlap == Catch::Approx(1.0).margin(1e-6));
    }
    REQUIRE(spectral_norm_matrix(m) == Catch::Approx(s.s[0]).epsilon(1e-7));
}
