#include "catch_amalgamated.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include "daepencil/error.hpp"
#include "daepencil/pencil.hpp"

#include <map>
#include <random>

using namespace daepencil;
using fixtures::mat;

namespace {

Mat random_invertible(std::mt19937_64& gen, Eigen::Index n) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Mat M(n, n);
    for (;;) {
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) M(i, j) = d(gen);
        if (la::cond2(M) < 50) return M;
    }
}

} // namespace

TEST_CASE("pencil rank on known pencils", "[pencil]") {
    CHECK(pencil_rank(fixtures::ex4_pencil()) == 2);
    CHECK(pencil_rank(Pencil(Mat::Identity(2, 2), Mat::Zero(2, 2))) == 2);
}

TEST_CASE("pencil rank of random integer 4x3 pencils matches exact rank", "[pencil][oracle]") {
    std::mt19937_64 gen(7);
    std::uniform_int_distribution<int> c(-3, 3), q(0, 3);
    for (int k = 0; k < 40; ++k) {
        const int inner = q(gen);
        Mat L(4, inner), R(inner, 3), L2(4, inner);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < inner; ++j) L(i, j) = c(gen), L2(i, j) = c(gen);
        for (int i = 0; i < inner; ++i)
            for (int j = 0; j < 3; ++j) R(i, j) = c(gen);
        Mat A = L * R, B = L2 * R;
        if (k % 3 == 0) {
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 3; ++j) A(i, j) = c(gen), B(i, j) = c(gen);
        }
        CHECK(pencil_rank(Pencil(A, B)) == oracle::exact_pencil_rank(A, B));
    }
}

TEST_CASE("classification of the worked examples", "[pencil]") {
    const Classification c1 = classify(fixtures::ex1_pencil());
    CHECK(c1.kind == PencilKind::Regular);
    CHECK(c1.rank == 2);
    CHECK(c1.index == RegularIndex::One);

    const Classification c4 = classify(fixtures::ex4_pencil());
    CHECK(c4.kind == PencilKind::Singular);
    CHECK(c4.rank == 2);
    CHECK(c4.defect == 1);
    CHECK(c4.dual_defect == 1);
    CHECK(c4.total_defect == 2);
    CHECK_FALSE(c4.index.has_value());

    const Classification z = classify(Pencil(Mat::Zero(2, 2), Mat::Identity(2, 2)));
    CHECK(z.kind == PencilKind::Regular);
    CHECK(z.index == RegularIndex::One);
}

TEST_CASE("regular index", "[pencil]") {
    CHECK(regular_index(fixtures::ex2_pencil().A(), fixtures::ex2_pencil().B()) == RegularIndex::One);
    CHECK(regular_index(Mat::Identity(3, 3), mat(3, 3, {1, 2, 3, 4, 5, 6, 7, 8, 10})) == RegularIndex::Zero);

    // Nilpotent A of order 2: the resolvent has a pole of order 2 at mu = 0.
    const Mat N = mat(2, 2, {0, 1, 0, 0}), I = Mat::Identity(2, 2);
    const double mu = 1e-4;
    const Mat R = (N + mu * I).inverse();
    CHECK((mu * R).norm() > 1e3);
    CHECK((mu * mu * R).norm() < 2.0);
    CHECK(regular_index(N, I) == RegularIndex::Higher);

    CHECK_THROWS_MATCHES(regular_index(mat(2, 2, {1, 0, 0, 0}), mat(2, 2, {1, 0, 0, 0})), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) { return e.kind() == ErrorKind::NotRegular; }));
}

TEST_CASE("index one implies a well-conditioned G", "[pencil][property]") {
    for (const Pencil& p : {fixtures::ex1_pencil(), fixtures::ex2_pencil(), fixtures::ex3_pencil()}) {
        REQUIRE(regular_index(p.A(), p.B()) == RegularIndex::One);
        const Mat K = la::null_space(p.A());
        const Mat G = p.A() + p.B() * K * K.transpose();
        CHECK(la::cond2(G) < 1.0 / (100.0 * la::default_rel_tol(2, 2)));
    }
}

TEST_CASE("rank, defect and dual defect add up", "[pencil][property]") {
    std::mt19937_64 gen(11);
    std::uniform_int_distribution<int> dim(1, 5), c(-2, 2);
    for (int k = 0; k < 100; ++k) {
        const int m = dim(gen), n = dim(gen);
        Mat A(m, n), B(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) A(i, j) = c(gen) * (k % 2), B(i, j) = c(gen);
        const Classification cl = classify(Pencil(A, B));
        CHECK(cl.defect + cl.rank == n);
        CHECK(cl.dual_defect + cl.rank == m);
        CHECK(cl.total_defect == n + m - 2 * cl.rank);
        CHECK((cl.kind == PencilKind::Regular) == (n == m && m == cl.rank));
    }
}

TEST_CASE("classification is invariant under equivalence", "[pencil][property]") {
    std::mt19937_64 gen(13);
    for (const Pencil& p : {fixtures::ex1_pencil(), fixtures::ex2_pencil(), fixtures::ex3_pencil(),
                            fixtures::ex4_pencil()}) {
        const Classification ref = classify(p);
        for (int k = 0; k < 10; ++k) {
            const Mat L = random_invertible(gen, p.rows()), R = random_invertible(gen, p.cols());
            const Classification c = classify(Pencil(L * p.A() * R, L * p.B() * R));
            CHECK(c.kind == ref.kind);
            CHECK(c.rank == ref.rank);
            CHECK(c.defect == ref.defect);
            CHECK(c.dual_defect == ref.dual_defect);
            CHECK(c.index == ref.index);
        }
    }
}

TEST_CASE("pencil rank is repeatable across seeds", "[pencil][property]") {
    for (const Pencil& p : {fixtures::ex4_pencil(), fixtures::ex1_pencil()}) {
        std::map<int, int> votes;
        for (std::uint64_t s = 1; s <= 10; ++s) ++votes[pencil_rank(p, RankTolerance{-1.0, s})];
        CHECK(votes.size() == 1);
    }
}

TEST_CASE("pencil construction guards", "[pencil]") {
    auto kind_is = [](ErrorKind k) {
        return Catch::Matchers::Predicate<Error>([k](const Error& e) { return e.kind() == k; });
    };
    CHECK_THROWS_MATCHES(Pencil(Mat::Zero(2, 2), Mat::Zero(2, 3)), Error, kind_is(ErrorKind::ShapeMismatch));
    Mat bad = Mat::Zero(2, 2);
    bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_MATCHES(Pencil(bad, Mat::Zero(2, 2)), Error, kind_is(ErrorKind::NonFinite));
}
