#pragma once

#include "daepencil/reduction.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace daepencil {

/**
 * A sampling region. Differential predicates see x_s1 + x_p1, free predicates see x_s2,
 * algebraic predicates see x_p2; each as a full vector in R^n (so "x1" means its first entry).
 */
struct Region {
    std::vector<Predicate> diff;
    std::vector<Predicate> free;
    std::vector<Predicate> alg;
    double scale = 1.0;            ///< inner scale of the region
    std::optional<double> R;       ///< radius of M_R; defaults to 10 * scale where used
    std::vector<double> guess;     ///< Newton start for x_p2 (X_2 coordinates); zeros if empty

    double radius() const { return R.value_or(10.0 * scale); }
};

/// V with either a comparison function chi(t, v) or the product form k(t) * U(v).
struct LyapunovCert {
    std::string name;
    Region region;
    Expr V;
    std::optional<Expr> chi;
    std::optional<Expr> k;
    std::optional<Expr> U;
};

struct InvarianceCert {
    Region region;          ///< its diff predicates describe M_1 (or M_s1)
    Expr W;
    std::vector<Predicate> Kr; ///< closed subset of M_1, scalar "r" is the margin
    std::vector<double> r_grid{0.1, 0.01, 0.001};
};

struct BoundedManifoldCert {
    double M_bound = 1.0;
    Region region;
};

struct SamplerOptions {
    int count = 4096;
    std::uint64_t seed = 20240601;
    int jobs = 1;
    double t_span = 1e3; ///< t drawn log-uniformly from [t_plus, t_plus + t_span]
};

struct CertificateSpec {
    std::optional<LyapunovCert> global;
    std::optional<LyapunovCert> blowup;
    std::optional<InvarianceCert> invariance;
    std::optional<BoundedManifoldCert> bounded;
    SamplerOptions sampler;
};

enum class Outcome { VerifiedOnSamples, ViolatedAtPoint, Inconclusive };
std::string to_string(Outcome o);

struct Witness {
    double t = 0.0;
    Vec x;
    double lhs = 0.0;
    double rhs = 0.0;
    std::string inequality;
};

struct CertificateReport {
    std::string check;  ///< "global", "blowup", "invariance", "bounded"
    std::string name;
    Outcome outcome = Outcome::Inconclusive;
    std::optional<Witness> witness;
    std::string reason;
    double margin = 0.0;  ///< smallest slack seen (rhs - lhs for <=, lhs - rhs for >=)
    int samples_drawn = 0;
    int samples_used = 0;
    std::vector<std::string> notes;
    std::map<std::string, double> extras;
};

/// On-manifold sample with its derived pieces.
struct SamplePoint {
    double t = 0.0;
    Vec x;
    Vec xd; ///< x_s1 + x_p1
};

/**
 * Quasi-random points of the region on the consistency manifold: Halton sequence with a
 * seeded shift, log-uniform radii in [lo, hi], plus bisection points on predicate boundaries.
 * Points whose projection fails or lands outside the algebraic/domain predicates are dropped.
 */
std::vector<SamplePoint> sample_region(const ReducedSystem& rs, const Region& region, const SamplerOptions& opts,
                                       double r_lo, double r_hi, int* drawn = nullptr);

/// dV/dt along the reduced system at an on-manifold point.
double lyapunov_derivative(const ReducedSystem& rs, const Expr& V, double t, const Vec& x);

CertificateReport check_global_certificate(const ReducedSystem& rs, const LyapunovCert& cert,
                                           const SamplerOptions& opts = {});
CertificateReport check_blowup_certificate(const ReducedSystem& rs, const LyapunovCert& cert,
                                           const SamplerOptions& opts = {});
CertificateReport check_invariance(const ReducedSystem& rs, const InvarianceCert& cert,
                                   const SamplerOptions& opts = {});
CertificateReport check_bounded_manifold(const ReducedSystem& rs, const BoundedManifoldCert& cert,
                                         const SamplerOptions& opts = {});

struct OsgoodResult {
    enum class Kind { Diverges, Converges, Inconclusive } kind = Kind::Inconclusive;
    double value = 0.0; ///< integral of dv/U on [v0, inf) when it converges
    std::string method; ///< "power-law" or "quadrature"
};
std::string to_string(OsgoodResult::Kind k);

/// Integral test for dv/U(v) on [v0, inf). Throws NonpositiveU if U <= 0 somewhere on the grid.
OsgoodResult osgood_test(const Expr& U, double v0);

struct ComparisonResult {
    enum class Kind { Global, FiniteEscape, Inconclusive } kind = Kind::Inconclusive;
    double T = 0.0;  ///< escape time for FiniteEscape
    std::vector<double> times;
    std::vector<double> values;
    std::string reason;
};
std::string to_string(ComparisonResult::Kind k);

/// Solves v' = chi(t, v), v(t0) = v0 > 0, up to t0 + horizon (horizon may be +inf).
ComparisonResult comparison_solve(const Expr& chi, double v0, double t0, double horizon = 50.0);

enum class CombinedVerdict { GlobalCertified, BlowUpCertified, Mixed, Inconclusive };
std::string to_string(CombinedVerdict v);

struct CertifyResult {
    std::vector<CertificateReport> reports;
    CombinedVerdict verdict = CombinedVerdict::Inconclusive;
};

/// Runs every declared check; only the Lyapunov checks decide the combined verdict.
CertifyResult certify(const ReducedSystem& rs, const CertificateSpec& spec);

} // namespace daepencil
