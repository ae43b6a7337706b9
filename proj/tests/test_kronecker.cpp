#include "catch_amalgamated.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include "daepencil/kronecker.hpp"

#include <numeric>
#include <random>

using namespace daepencil;
using fixtures::mat;
using fixtures::vec;

TEST_CASE("example 4 primal basis is a constant vector along (1,0,1)", "[kronecker]") {
    const MinimalBasis b = polynomial_kernel_basis(fixtures::ex4_pencil(), Side::Primal);
    REQUIRE(b.vectors.size() == 1);
    CHECK(b.vectors[0].degree == 0);
    CHECK(la::max_principal_angle(b.vectors[0].leading(), vec({1, 0, 1})) < 1e-12);
}

TEST_CASE("example 4 dual basis has degree one and spans the exact stacked kernel", "[kronecker][oracle]") {
    const Pencil p = fixtures::ex4_pencil();
    const MinimalBasis b = polynomial_kernel_basis(p, Side::Dual);
    REQUIRE(b.vectors.size() == 1);
    REQUIRE(b.vectors[0].degree == 1);

    const Mat At = p.A().transpose(), Bt = p.B().transpose();
    const Mat M0 = band_matrix(At, Bt, 0), M1 = band_matrix(At, Bt, 1);
    CHECK(M0.cols() - oracle::exact_rank(M0) == 0);
    CHECK(M1.cols() - oracle::exact_rank(M1) == 1);
    Vec stack(6);
    stack << b.vectors[0].coeffs[0], b.vectors[0].coeffs[1];
    CHECK((M1 * stack).norm() < 1e-12 * stack.norm());
}

TEST_CASE("minimal indices of small pencils", "[kronecker]") {
    const MinimalIndices e4 = minimal_indices(fixtures::ex4_pencil());
    CHECK(e4.primal == std::vector<int>{0});
    CHECK(e4.dual == std::vector<int>{1});

    const MinimalIndices e1 = minimal_indices(fixtures::ex1_pencil());
    CHECK(e1.primal.empty());
    CHECK(e1.dual.empty());

    const MinimalIndices l1 = minimal_indices(Pencil(mat(1, 2, {1, 0}), mat(1, 2, {0, 1})));
    CHECK(l1.primal == std::vector<int>{1});
    CHECK(l1.dual.empty());

    CHECK(polynomial_kernel_basis(Pencil(Mat::Identity(2, 2), Mat::Identity(2, 2)), Side::Primal).vectors.empty());
}

TEST_CASE("chain validation", "[kronecker]") {
    const Pencil p = fixtures::ex4_pencil();
    const MinimalBasis b = polynomial_kernel_basis(p, Side::Primal);
    CHECK(validate_chain(p, Side::Primal, b.vectors[0]) <= 1e-15);
    ChainVector exact;
    exact.degree = 0;
    exact.coeffs = {vec({1, 0, 1})};
    CHECK(validate_chain(p, Side::Primal, exact) == 0.0);

    ChainVector bad;
    bad.degree = 0;
    bad.coeffs = {vec({0, 1, 0})};
    const double expected = std::sqrt(6.0) / p.scale();
    CHECK_THAT(validate_chain(p, Side::Primal, bad), Catch::Matchers::WithinRel(expected, 1e-12));

    // A degree-one chain perturbed by 1e-6.
    const Pencil l1(mat(1, 2, {1, 0}), mat(1, 2, {0, 1}));
    ChainVector c = polynomial_kernel_basis(l1, Side::Primal).vectors.at(0);
    REQUIRE(validate_chain(l1, Side::Primal, c) < 1e-14);
    c.coeffs[0](0) += 1e-6;
    const double r = validate_chain(l1, Side::Primal, c);
    CHECK(r >= 1e-7);
    CHECK(r <= 1e-5);
}

TEST_CASE("minimal bases satisfy their invariants on random integer pencils", "[kronecker][property]") {
    std::mt19937_64 gen(17);
    for (int k = 0; k < 60; ++k) {
        const oracle::BlockPencil bp = oracle::random_block_pencil(gen, 2, 2);
        const Pencil p(bp.A, bp.B);
        const double scale = p.scale();
        const int rank = oracle::exact_pencil_rank(bp.A, bp.B);
        const auto n = static_cast<int>(p.cols()), m = static_cast<int>(p.rows());
        for (Side side : {Side::Primal, Side::Dual}) {
            const MinimalBasis b = polynomial_kernel_basis(p, side);
            CHECK(static_cast<int>(b.vectors.size()) == (side == Side::Primal ? n - rank : m - rank));
            Mat leads(side == Side::Primal ? n : m, static_cast<Eigen::Index>(b.vectors.size()));
            for (std::size_t i = 0; i < b.vectors.size(); ++i) {
                CHECK(validate_chain(p, side, b.vectors[i]) <= 1e-10 * scale);
                leads.col(static_cast<Eigen::Index>(i)) = b.vectors[i].leading();
            }
            CHECK(la::numerical_rank(leads) == leads.cols());
        }
        const MinimalIndices mi = minimal_indices(p);
        CHECK(mi.primal == bp.primal);
        CHECK(mi.dual == bp.dual);
        CHECK(mi.primal == oracle::indices_from_nullities(bp.A, bp.B));
        const int sum = std::accumulate(mi.primal.begin(), mi.primal.end(), 0);
        CHECK(sum <= m);
        CHECK(sum + static_cast<int>(mi.primal.size()) <= n);
    }
}
