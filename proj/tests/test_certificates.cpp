#include "catch_amalgamated.hpp"

#include "fixtures.hpp"

#include "daepencil/certificates.hpp"
#include "daepencil/error.hpp"
#include "daepencil/integrator.hpp"
#include "daepencil/problem.hpp"

#include <cmath>

using namespace daepencil;
using fixtures::vec;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Expr scalar(const std::string& s) { return parse_expr(s, Scope::scalar_only("v", true)); }

Region region(int n, std::vector<std::string> diff, std::vector<std::string> alg = {}, std::vector<double> guess = {}) {
    Region r;
    for (const auto& d : diff) r.diff.push_back(parse_predicate(d, Scope::state(n)));
    for (const auto& a : alg) r.alg.push_back(parse_predicate(a, Scope::state(n)));
    r.guess = std::move(guess);
    return r;
}

LyapunovCert chi_cert(int n, std::vector<std::string> diff, const std::string& V, const std::string& chi) {
    LyapunovCert c;
    c.name = diff.empty() ? "" : diff.front();
    c.region = region(n, std::move(diff));
    c.V = parse_expr(V, n);
    c.chi = scalar(chi);
    return c;
}

CertificateSpec spec_of(const std::string& file) {
    return *load_problem(std::string(DAEPENCIL_PROBLEM_DIR) + "/" + file).certificates;
}

SamplerOptions small(int count = 512) {
    SamplerOptions o;
    o.count = count;
    return o;
}

} // namespace

TEST_CASE("example 1 Lyapunov certificates", "[certificates]") {
    const ReducedSystem rs = fixtures::ex1();

    const CertificateReport g = check_global_certificate(rs, chi_cert(2, {"x1 < 0"}, "x1^2", "2*v"), small());
    CHECK(g.outcome == Outcome::VerifiedOnSamples);
    CHECK(g.samples_used > 0);

    // Along x1' = x1^2, d/dt x1^2 = 2 x1^3 = 2 V^(3/2): the product form holds with equality at k = 2.
    LyapunovCert b;
    b.region = region(2, {"x1 > 0"});
    b.V = parse_expr("x1^2", 2);
    b.k = scalar("2");
    b.U = scalar("v^(3/2)");
    const CertificateReport ok = check_blowup_certificate(rs, b, small());
    CHECK(ok.outcome == Outcome::VerifiedOnSamples);
    CHECK(ok.extras.at("osgood_integral") > 0.0);

    b.k = scalar("2.5");
    const CertificateReport bad = check_blowup_certificate(rs, b, small());
    REQUIRE(bad.outcome == Outcome::ViolatedAtPoint);
    REQUIRE(bad.witness);
    CHECK(bad.witness->lhs < bad.witness->rhs);
    CHECK(bad.witness->x(0) > 0.0);
}

TEST_CASE("V must be positive on the region", "[certificates]") {
    const CertificateReport r =
        check_blowup_certificate(fixtures::ex1(), chi_cert(2, {"x1 > 0"}, "x1^2 - 1", "0"), small());
    REQUIRE(r.outcome == Outcome::ViolatedAtPoint);
    REQUIRE(r.witness);
    CHECK(r.witness->inequality == "V > 0");
    CHECK(r.witness->lhs <= 0.0);
}

TEST_CASE("a zero comparison function proves nothing about escape", "[certificates]") {
    // d/dt x1^2 = 2 x1^3 >= 0 holds, but v' = 0 never escapes.
    const CertificateReport r = check_blowup_certificate(fixtures::ex1(), chi_cert(2, {"x1 > 0"}, "x1^2", "0"), small());
    CHECK(r.outcome == Outcome::Inconclusive);
    CHECK(!r.reason.empty());
}

TEST_CASE("invariance of the unit interval in example 3 depends on the sign of b", "[certificates]") {
    const CertificateSpec s = spec_of("example3.json");
    CHECK(check_invariance(fixtures::ex3(1.0), *s.invariance, small()).outcome == Outcome::VerifiedOnSamples);
    const CertificateReport r = check_invariance(fixtures::ex3(-1.0), *s.invariance, small());
    CHECK(r.outcome == Outcome::ViolatedAtPoint);
    CHECK(r.witness);
}

TEST_CASE("bounded manifold suprema", "[certificates]") {
    const CertificateSpec s3 = spec_of("example3.json");
    const CertificateReport r3 = check_bounded_manifold(fixtures::ex3(), *s3.bounded, small());
    REQUIRE(r3.outcome == Outcome::VerifiedOnSamples);
    CHECK(r3.extras.at("sup_xp2") <= 1.0 + 1e-9);
    CHECK(r3.extras.at("sup_xp2") > 0.9);

    // Example 2 near x1 = 1 has x2 = 1/(x1 - 1) unbounded; away from it the bound follows the samples.
    BoundedManifoldCert c2;
    c2.M_bound = 0.5;
    c2.region = region(2, {"x1 < -0.2"}, {}, {-0.5});
    const CertificateReport r2 = check_bounded_manifold(fixtures::ex2(), c2, small());
    REQUIRE(r2.outcome == Outcome::VerifiedOnSamples);
    CHECK(r2.extras.at("sup_xp2") <= 1.0 / 1.2 + 1e-9);

    BoundedManifoldCert empty;
    empty.M_bound = 1.0;
    empty.region = region(2, {"x1 > 5"});
    CHECK(check_bounded_manifold(fixtures::ex3(), empty, small()).outcome == Outcome::Inconclusive);

    empty.M_bound = 0.0;
    CHECK_THROWS_AS(check_bounded_manifold(fixtures::ex3(), empty, small()), Error);
}

TEST_CASE("Osgood integral test", "[certificates]") {
    CHECK(osgood_test(scalar("1"), 1.0).kind == OsgoodResult::Kind::Diverges);
    CHECK(osgood_test(scalar("v"), 1.0).kind == OsgoodResult::Kind::Diverges);
    // Diverges like log log v: too slow to see on a finite grid, but it must not be called convergent.
    CHECK(osgood_test(scalar("v*log(1+v)"), 1.0).kind != OsgoodResult::Kind::Converges);

    const OsgoodResult sq = osgood_test(scalar("v^2"), 4.0);
    REQUIRE(sq.kind == OsgoodResult::Kind::Converges);
    CHECK_THAT(sq.value, WithinRel(0.25, 1e-9));

    const OsgoodResult q = osgood_test(scalar("v^2 + 1"), 1.0);
    REQUIRE(q.kind == OsgoodResult::Kind::Converges);
    CHECK_THAT(q.value, WithinRel(std::atan(1.0), 1e-6)); // pi/2 - atan(1)

    try {
        osgood_test(scalar("v - 2"), 1.0);
        FAIL("expected NonpositiveU");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NonpositiveU);
    }
}

TEST_CASE("comparison equation", "[certificates]") {
    const ComparisonResult esc = comparison_solve(scalar("v^2"), 1.0, 0.0, INFINITY);
    REQUIRE(esc.kind == ComparisonResult::Kind::FiniteEscape);
    CHECK_THAT(esc.T, WithinAbs(1.0, 1e-6));

    const ComparisonResult esc2 = comparison_solve(scalar("2*v^2"), 0.5, 3.0, INFINITY);
    REQUIRE(esc2.kind == ComparisonResult::Kind::FiniteEscape);
    CHECK_THAT(esc2.T, WithinAbs(4.0, 1e-6));

    const ComparisonResult lin = comparison_solve(scalar("v"), 1.0, 0.0, 10.0);
    REQUIRE(lin.kind == ComparisonResult::Kind::Global);
    CHECK_THAT(lin.values.back(), WithinRel(std::exp(lin.times.back()), 1e-6));

    CHECK(comparison_solve(scalar("v/(1+t)"), 1.0, 0.0, INFINITY).kind != ComparisonResult::Kind::FiniteEscape);
}

TEST_CASE("verdicts survive a larger sample with a fresh seed", "[certificates]") {
    for (const char* f : {"example1_global.json", "example2.json", "example4_flipped.json"}) {
        CertificateSpec s = spec_of(f);
        s.invariance.reset();
        s.bounded.reset();
        const ProblemFile pf = load_problem(std::string(DAEPENCIL_PROBLEM_DIR) + "/" + f);
        const ReducedSystem rs(pf.dae, decompose(pf.dae.pencil));
        const CertifyResult a = certify(rs, s);
        s.sampler.count *= 2;
        s.sampler.seed += 7919;
        const CertifyResult b = certify(rs, s);
        REQUIRE(a.reports.size() == b.reports.size());
        for (std::size_t i = 0; i < a.reports.size(); ++i) {
            INFO(f << " " << a.reports[i].check);
            CHECK(a.reports[i].outcome == Outcome::VerifiedOnSamples);
            CHECK(b.reports[i].outcome == a.reports[i].outcome);
        }
        CHECK(b.verdict == a.verdict);
    }
}

TEST_CASE("thread count does not change the result", "[certificates]") {
    const ReducedSystem rs = fixtures::ex2();
    const CertificateSpec s = spec_of("example2.json");
    SamplerOptions o = small(1024);
    const CertificateReport one = check_global_certificate(rs, *s.global, o);
    o.jobs = 4;
    const CertificateReport four = check_global_certificate(rs, *s.global, o);
    CHECK(one.outcome == four.outcome);
    CHECK(one.samples_used == four.samples_used);
    CHECK(one.margin == four.margin);

    const auto p1 = sample_region(rs, s.global->region, small(256), 10.0, 1e3);
    SamplerOptions o4 = small(256);
    o4.jobs = 3;
    const auto p4 = sample_region(rs, s.global->region, o4, 10.0, 1e3);
    REQUIRE(p1.size() == p4.size());
    for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i].x == p4[i].x);
}

TEST_CASE("dV/dt matches finite differences along trajectories", "[certificates][property]") {
    struct Run {
        ReducedSystem rs;
        Vec x0;
        const char* V;
    };
    const std::vector<Run> runs{{fixtures::ex1(), vec({-1, 1}), "x1^2 + sin(t)*x1"},
                                {fixtures::ex2(), vec({3, 0.5}), "(x1-1)^2"},
                                {fixtures::ex3(), vec({0.5, std::sqrt(0.75)}), "x1^2 + t*x1"}};
    for (const Run& r : runs) {
        IntegratorOptions o;
        o.fixed_step = 1e-3;
        const Trajectory tr = integrate(r.rs, 0.0, r.x0, {}, 0.5, o);
        const Expr V = parse_expr(r.V, r.rs.n());
        auto Vat = [&](std::size_t i) { return V.eval(tr.times[i], r.rs.diff_vector(r.rs.diff_coords(tr.states[i]))); };
        for (std::size_t i = 1; i + 1 < tr.times.size(); i += 25) {
            const double fd = (Vat(i + 1) - Vat(i - 1)) / (tr.times[i + 1] - tr.times[i - 1]);
            const double dv = lyapunov_derivative(r.rs, V, tr.times[i], tr.states[i]);
            CHECK(std::abs(fd - dv) <= 1e-5 * (1 + std::abs(dv)));
        }
    }
}
