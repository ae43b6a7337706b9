#include "daepencil/certificates.hpp"

#include "daepencil/error.hpp"
#include "daepencil/rk45.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

namespace daepencil {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double slack_tol(double lhs, double rhs) { return 1e-9 * (1.0 + std::abs(lhs) + std::abs(rhs)); }

EvalPoint at(double t, const Vec& x, double s = 0.0) { return {t, x.data(), static_cast<int>(x.size()), s}; }

bool all_hold(const std::vector<Predicate>& ps, double t, const Vec& x, double s = 0.0) {
    for (const auto& p : ps)
        if (!p.holds(at(t, x, s))) return false;
    return true;
}

std::string fmt_point(double t, const Vec& x) {
    std::ostringstream os;
    os.precision(6);
    os << "t=" << t << ", x=(";
    for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x(i);
    os << ")";
    return os.str();
}

// ---- quasi-random sampler ----

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};

double radical_inverse(std::uint64_t i, int base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

class Halton {
public:
    Halton(int dims, std::uint64_t seed) : shift_(dims) {
        if (dims > static_cast<int>(std::size(kPrimes)))
            throw Error(ErrorKind::ResourceError, "sampler supports at most 25 dimensions");
        std::mt19937_64 gen(seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (auto& s : shift_) s = u(gen);
    }
    double operator()(std::uint64_t i, int dim) const {
        const double v = radical_inverse(i + 1, kPrimes[dim]) + shift_[dim];
        return v - std::floor(v);
    }

private:
    std::vector<double> shift_;
};

struct Candidate {
    double t = 0.0;
    Vec xd; // x_s1 + x_p1
    Vec xs; // x_s2
};

struct RadiusLaw {
    double lo, hi;
    double operator()(double u) const { return lo > 0.0 ? lo * std::pow(hi / lo, u) : lo + (hi - lo) * u; }
};

Vec unit_direction(const Halton& h, std::uint64_t i, int first_dim, int d) {
    Vec c(d);
    for (int j = 0; j < d; ++j) c(j) = 2.0 * h(i, first_dim + j) - 1.0;
    const double nrm = c.norm();
    if (nrm < 1e-12) {
        c.setZero();
        if (d > 0) c(0) = 1.0;
        return c;
    }
    return c / nrm;
}

std::vector<Candidate> raw_candidates(const ReducedSystem& rs, const Region& region, const SamplerOptions& opts,
                                      RadiusLaw diff_r) {
    const Decomposition& d = rs.dec();
    const int dd = rs.diff_dim(), ds = d.xdims.s2;
    const Halton h(2 + dd + (ds > 0 ? 1 + ds : 0), opts.seed);
    const RadiusLaw free_r{1e-3 * region.scale, 1e3 * region.scale};
    const double t_plus = rs.dae().t_plus;
    const double log_span = std::log1p(opts.t_span);

    std::vector<Candidate> out(static_cast<std::size_t>(std::max(opts.count, 0)));
    for (std::size_t i = 0; i < out.size(); ++i) {
        Candidate& c = out[i];
        c.t = t_plus + std::expm1(h(i, 0) * log_span);
        if (dd > 0) {
            const Vec dir = rs.diff_vector(unit_direction(h, i, 2, dd));
            c.xd = diff_r(h(i, 1)) * dir / dir.norm();
        } else {
            c.xd = Vec::Zero(rs.n());
        }
        if (ds > 0) {
            const Vec dir = d.X_s2 * unit_direction(h, i, 3 + dd, ds);
            c.xs = free_r(h(i, 2 + dd)) * dir / dir.norm();
        } else {
            c.xs = Vec::Zero(rs.n());
        }
    }
    return out;
}

// Bisects consecutive candidate pairs on every sign change of a predicate gap.
// Returns both bracket ends, and with keep_path every midpoint visited on the way.
std::vector<Candidate> boundary_points(const std::vector<Candidate>& raw, const std::vector<Predicate>& preds,
                                       double s, bool keep_path, std::size_t limit) {
    std::vector<Candidate> out;
    auto gap = [&](const Predicate& p, const Candidate& c) {
        try {
            return p.gap(at(c.t, c.xd, s));
        } catch (const Error&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };
    for (std::size_t i = 0; i + 1 < raw.size() && out.size() < limit; ++i) {
        const Candidate& a = raw[i];
        const Candidate& b = raw[i + 1];
        for (const auto& p : preds) {
            const double ga = gap(p, a), gb = gap(p, b);
            if (!(std::isfinite(ga) && std::isfinite(gb)) || (ga > 0) == (gb > 0)) continue;
            Candidate lo = a, hi = a;
            hi.xd = b.xd;
            double glo = ga;
            for (int it = 0; it < 48; ++it) {
                Candidate mid = a;
                mid.xd = 0.5 * (lo.xd + hi.xd);
                const double gm = gap(p, mid);
                if (!std::isfinite(gm)) break;
                if (keep_path) out.push_back(mid);
                if ((gm > 0) == (glo > 0)) lo = mid, glo = gm;
                else hi = mid;
                if ((hi.xd - lo.xd).norm() <= 1e-13 * (1.0 + lo.xd.norm())) break;
            }
            out.push_back(lo);
            out.push_back(hi);
        }
    }
    return out;
}

template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
    const auto workers = static_cast<std::size_t>(std::clamp(jobs, 1, 64));
    if (workers == 1 || n < 64) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    for (auto& th : pool) th.join();
}

std::vector<SamplePoint> project_all(const ReducedSystem& rs, const Region& region,
                                     const std::vector<Candidate>& cands, int jobs) {
    const Decomposition& d = rs.dec();
    Vec guess = Vec::Zero(d.xdims.r2);
    if (!region.guess.empty()) {
        if (static_cast<int>(region.guess.size()) != d.xdims.r2)
            throw Error(ErrorKind::ShapeMismatch, "region guess must have dim X_2 = " + std::to_string(d.xdims.r2) + " entries");
        guess = Eigen::Map<const Vec>(region.guess.data(), d.xdims.r2);
    }
    std::vector<std::optional<SamplePoint>> slots(cands.size());
    parallel_for(cands.size(), jobs, [&](std::size_t i) {
        const Candidate& c = cands[i];
        try {
            const ConsistencyResult cr = consistency_project(rs, c.t, c.xd + c.xs, guess);
            const Vec xp2 = d.X_2 * cr.x_p2;
            if (!all_hold(region.alg, c.t, xp2)) return;
            if (rs.dae().outside_domain(c.t, cr.x)) return;
            if (!cr.x.allFinite()) return;
            slots[i] = SamplePoint{c.t, cr.x, c.xd};
        } catch (const Error&) {
        }
    });
    std::vector<SamplePoint> out;
    for (auto& s : slots)
        if (s) out.push_back(std::move(*s));
    return out;
}

bool in_region(const Region& region, const Candidate& c) {
    return all_hold(region.diff, c.t, c.xd) && all_hold(region.free, c.t, c.xs);
}

// Symbolic pieces of d/dt F(t, x_s1 + x_p1).
struct TotalDerivative {
    Expr f, ft;
    std::vector<Expr> fx;

    TotalDerivative(const Expr& e, int n) : f(e), ft(e.diff(Var::t())) {
        for (int j = 0; j < n; ++j) fx.push_back(e.diff(Var::x(j)));
    }
    double value(const ReducedSystem& rs, double t, const Vec& x) const {
        const Vec xd = rs.diff_vector(rs.diff_coords(x));
        const Vec ups = rs.upsilon(t, x);
        double acc = ft.eval(t, xd);
        for (std::size_t j = 0; j < fx.size(); ++j)
            if (ups(static_cast<Eigen::Index>(j)) != 0.0) acc += fx[j].eval(t, xd) * ups(static_cast<Eigen::Index>(j));
        return acc;
    }
};

double chi_value(const LyapunovCert& cert, double t, double v) {
    if (cert.chi) return cert.chi->eval_scalar(v, t);
    return cert.k->eval_scalar(0.0, t) * cert.U->eval_scalar(v, t);
}

void validate_cert(const LyapunovCert& cert) {
    const bool product = cert.k.has_value() && cert.U.has_value();
    if (!cert.chi && !product) throw Error(ErrorKind::InvalidSpec, "certificate '" + cert.name + "' needs chi or both k and U");
    if (cert.chi && (cert.k || cert.U))
        throw Error(ErrorKind::InvalidSpec, "certificate '" + cert.name + "' gives both chi and (k, U)");
}

std::vector<double> quantiles(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    for (double q : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const double x = v[static_cast<std::size_t>(q * static_cast<double>(v.size() - 1))];
        if (out.empty() || x != out.back()) out.push_back(x);
    }
    return out;
}

const char* kTimeNote = "uniformity in t is checked on a finite sample of times only";

enum class Bound { Upper, Lower }; // Vdot <= chi or Vdot >= chi

// Shared sampling loop for the global and blow-up checks. Returns false on a violation.
bool check_comparison(const ReducedSystem& rs, const LyapunovCert& cert, const std::vector<SamplePoint>& pts,
                      Bound side, CertificateReport& rep, std::vector<double>& v_values) {
    const TotalDerivative dV(cert.V, rs.n());
    rep.margin = kInf;
    for (const SamplePoint& p : pts) {
        double v, vdot, rhs;
        try {
            v = cert.V.eval(p.t, p.xd);
            if (!(v > 0.0)) {
                rep.outcome = Outcome::ViolatedAtPoint;
                rep.witness = Witness{p.t, p.x, v, 0.0, "V > 0"};
                rep.reason = "V is not positive at " + fmt_point(p.t, p.x);
                return false;
            }
            vdot = dV.value(rs, p.t, p.x);
            rhs = chi_value(cert, p.t, v);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::EvalDomainError) throw;
            continue;
        }
        if (!std::isfinite(vdot) || !std::isfinite(rhs)) continue;
        ++rep.samples_used;
        v_values.push_back(v);
        const double slack = side == Bound::Upper ? rhs - vdot : vdot - rhs;
        rep.margin = std::min(rep.margin, slack);
        if (slack < -slack_tol(vdot, rhs)) {
            rep.outcome = Outcome::ViolatedAtPoint;
            rep.witness = Witness{p.t, p.x, vdot, rhs, side == Bound::Upper ? "Vdot <= chi(t, V)" : "Vdot >= chi(t, V)"};
            std::ostringstream os;
            os << "Vdot = " << vdot << (side == Bound::Upper ? " exceeds" : " falls below") << " chi = " << rhs << " at "
               << fmt_point(p.t, p.x);
            rep.reason = os.str();
            return false;
        }
    }
    return true;
}

// c * v^p, if the expression has that shape in the scalar variable.
std::optional<std::pair<double, double>> power_law(const Expr& e) {
    using K = Expr::Kind;
    switch (e.kind()) {
        case K::Const: return std::pair{e.value(), 0.0};
        case K::Scalar: return std::pair{1.0, 1.0};
        case K::Neg: {
            auto a = power_law(e.args()[0]);
            if (!a) return std::nullopt;
            return std::pair{-a->first, a->second};
        }
        case K::Mul:
        case K::Div: {
            auto a = power_law(e.args()[0]), b = power_law(e.args()[1]);
            if (!a || !b) return std::nullopt;
            if (e.kind() == K::Mul) return std::pair{a->first * b->first, a->second + b->second};
            if (b->first == 0.0) return std::nullopt;
            return std::pair{a->first / b->first, a->second - b->second};
        }
        case K::Pow:
        case K::Call: {
            Expr base, expo;
            if (e.kind() == K::Pow) {
                base = e.args()[0], expo = e.args()[1];
            } else if (e.func() == Func::Pow) {
                base = e.args()[0], expo = e.args()[1];
            } else if (e.func() == Func::Sqrt) {
                base = e.args()[0], expo = Expr::constant(0.5);
            } else {
                return std::nullopt;
            }
            if (expo.uses(Var::Kind::Scalar) || expo.uses(Var::Kind::Time) || expo.uses(Var::Kind::State))
                return std::nullopt;
            const double q = expo.eval_scalar(0.0);
            auto a = power_law(base);
            if (!a || a->first <= 0.0) return std::nullopt;
            return std::pair{std::pow(a->first, q), a->second * q};
        }
        default: return std::nullopt;
    }
}

} // namespace

std::string to_string(Outcome o) {
    switch (o) {
        case Outcome::VerifiedOnSamples: return "VerifiedOnSamples";
        case Outcome::ViolatedAtPoint: return "ViolatedAtPoint";
        case Outcome::Inconclusive: return "Inconclusive";
    }
    return "?";
}

std::string to_string(OsgoodResult::Kind k) {
    switch (k) {
        case OsgoodResult::Kind::Diverges: return "Diverges";
        case OsgoodResult::Kind::Converges: return "Converges";
        case OsgoodResult::Kind::Inconclusive: return "Inconclusive";
    }
    return "?";
}

std::string to_string(ComparisonResult::Kind k) {
    switch (k) {
        case ComparisonResult::Kind::Global: return "Global";
        case ComparisonResult::Kind::FiniteEscape: return "FiniteEscape";
        case ComparisonResult::Kind::Inconclusive: return "Inconclusive";
    }
    return "?";
}

std::string to_string(CombinedVerdict v) {
    switch (v) {
        case CombinedVerdict::GlobalCertified: return "GlobalCertified";
        case CombinedVerdict::BlowUpCertified: return "BlowUpCertified";
        case CombinedVerdict::Mixed: return "Mixed";
        case CombinedVerdict::Inconclusive: return "Inconclusive";
    }
    return "?";
}

std::vector<SamplePoint> sample_region(const ReducedSystem& rs, const Region& region, const SamplerOptions& opts,
                                       double r_lo, double r_hi, int* drawn) {
    if (!(r_lo >= 0.0) || !(r_hi > r_lo)) throw Error(ErrorKind::InvalidSpec, "sampling radii must satisfy 0 <= lo < hi");
    const std::vector<Candidate> raw = raw_candidates(rs, region, opts, RadiusLaw{r_lo, r_hi});
    std::vector<Candidate> cands;
    for (const auto& c : raw)
        if (in_region(region, c)) cands.push_back(c);
    for (auto& c : boundary_points(raw, region.diff, 0.0, false, raw.size())) {
        const double r = c.xd.norm();
        if (r >= r_lo && r <= r_hi && in_region(region, c)) cands.push_back(std::move(c));
    }
    if (drawn) *drawn = static_cast<int>(raw.size());
    return project_all(rs, region, cands, opts.jobs);
}

double lyapunov_derivative(const ReducedSystem& rs, const Expr& V, double t, const Vec& x) {
    return TotalDerivative(V, rs.n()).value(rs, t, x);
}

CertificateReport check_global_certificate(const ReducedSystem& rs, const LyapunovCert& cert, const SamplerOptions& opts) {
    validate_cert(cert);
    CertificateReport rep;
    rep.check = "global";
    rep.name = cert.name;
    rep.notes.push_back(kTimeNote);
    const double R = cert.region.radius();
    rep.extras["R"] = R;
    const auto pts = sample_region(rs, cert.region, opts, R, 1e4 * R, &rep.samples_drawn);
    std::vector<double> vs;
    if (!check_comparison(rs, cert, pts, Bound::Upper, rep, vs)) return rep;
    if (vs.empty()) {
        rep.reason = "no usable samples in M_R";
        return rep;
    }
    if (cert.U) {
        const OsgoodResult os = osgood_test(*cert.U, *std::min_element(vs.begin(), vs.end()));
        rep.extras["osgood_integral"] = os.value;
        if (os.kind != OsgoodResult::Kind::Diverges) {
            rep.reason = "integral of dv/U is " + to_string(os.kind) + "; the product form does not exclude escape";
            return rep;
        }
    } else {
        const double t0 = rs.dae().t_plus;
        for (double v0 : quantiles(vs)) {
            const ComparisonResult cr = comparison_solve(*cert.chi, v0, t0, 50.0);
            if (cr.kind != ComparisonResult::Kind::Global) {
                std::ostringstream os;
                os << "comparison equation from v0=" << v0 << " is " << to_string(cr.kind);
                if (cr.kind == ComparisonResult::Kind::FiniteEscape) os << " at T=" << cr.T;
                rep.reason = os.str();
                return rep;
            }
        }
        rep.notes.push_back("comparison solutions checked up to t_plus + 50 only");
    }
    rep.outcome = Outcome::VerifiedOnSamples;
    return rep;
}

CertificateReport check_blowup_certificate(const ReducedSystem& rs, const LyapunovCert& cert, const SamplerOptions& opts) {
    validate_cert(cert);
    CertificateReport rep;
    rep.check = "blowup";
    rep.name = cert.name;
    rep.notes.push_back(kTimeNote);
    const double sc = cert.region.scale;
    const auto pts = sample_region(rs, cert.region, opts, 1e-3 * sc, 1e3 * sc, &rep.samples_drawn);
    std::vector<double> vs;
    if (!check_comparison(rs, cert, pts, Bound::Lower, rep, vs)) return rep;
    if (vs.empty()) {
        rep.reason = "no usable samples in the region";
        return rep;
    }
    const double t0 = rs.dae().t_plus;
    if (cert.U) {
        double k_min = kInf;
        for (int i = 0; i <= 200; ++i) k_min = std::min(k_min, cert.k->eval_scalar(0.0, t0 + std::expm1(i * std::log1p(opts.t_span) / 200)));
        rep.extras["k_min"] = k_min;
        if (!(k_min > 0.0)) {
            rep.reason = "k is not bounded away from zero on the time grid";
            return rep;
        }
        const OsgoodResult os = osgood_test(*cert.U, *std::min_element(vs.begin(), vs.end()));
        rep.extras["osgood_integral"] = os.value;
        if (os.kind != OsgoodResult::Kind::Converges) {
            rep.reason = "integral of dv/U is " + to_string(os.kind) + ", no escape is forced";
            return rep;
        }
    } else {
        double T_max = 0.0;
        for (double v0 : quantiles(vs)) {
            const ComparisonResult cr = comparison_solve(*cert.chi, v0, t0, kInf);
            if (cr.kind != ComparisonResult::Kind::FiniteEscape) {
                std::ostringstream os;
                os << "comparison equation from v0=" << v0 << " is " << to_string(cr.kind);
                if (!cr.reason.empty()) os << " (" << cr.reason << ")";
                rep.reason = os.str();
                return rep;
            }
            T_max = std::max(T_max, cr.T);
        }
        rep.extras["comparison_T_max"] = T_max;
    }
    rep.outcome = Outcome::VerifiedOnSamples;
    return rep;
}

CertificateReport check_invariance(const ReducedSystem& rs, const InvarianceCert& cert, const SamplerOptions& opts) {
    CertificateReport rep;
    rep.check = "invariance";
    rep.name = "W";
    rep.notes.push_back(kTimeNote);
    if (cert.r_grid.empty()) throw Error(ErrorKind::InvalidSpec, "invariance check needs at least one margin r");
    const Region& region = cert.region;
    const double sc = region.scale;
    const std::vector<Candidate> raw = raw_candidates(rs, region, opts, RadiusLaw{1e-3 * sc, 1e3 * sc});
    rep.samples_drawn = static_cast<int>(raw.size());
    const TotalDerivative dW(cert.W, rs.n());
    rep.margin = kInf;

    // Outside points (closure of the complement of M_1): raw misses plus boundary limits.
    std::vector<Candidate> outside;
    for (const auto& c : raw)
        if (!all_hold(region.diff, c.t, c.xd)) outside.push_back(c);
    const std::vector<Candidate> m1_path = boundary_points(raw, region.diff, 0.0, true, 4 * raw.size());
    {
        const auto edges = boundary_points(raw, region.diff, 0.0, false, raw.size());
        outside.insert(outside.end(), edges.begin(), edges.end());
    }
    int inner_total = 0;

    for (double r : cert.r_grid) {
        // (a) W(t1, p) < W(t2, q) for p in K_r, q outside M_1, t1 <= t2.
        struct Tagged {
            double t, w;
            bool inner;
            const Candidate* c;
        };
        std::vector<Tagged> tags;
        for (const auto& c : raw)
            if (all_hold(region.diff, c.t, c.xd) && all_hold(cert.Kr, c.t, c.xd, r)) {
                try {
                    tags.push_back({c.t, cert.W.eval(c.t, c.xd), true, &c});
                } catch (const Error&) {
                }
            }
        for (const auto& c : outside) {
            try {
                tags.push_back({c.t, cert.W.eval(c.t, c.xd), false, &c});
            } catch (const Error&) {
            }
        }
        std::sort(tags.begin(), tags.end(), [](const Tagged& a, const Tagged& b) {
            return a.t < b.t || (a.t == b.t && a.inner && !b.inner);
        });
        double sup_inner = -kInf;
        const Candidate* arg_inner = nullptr;
        for (const auto& g : tags) {
            if (g.inner) {
                if (g.w > sup_inner) sup_inner = g.w, arg_inner = g.c;
                continue;
            }
            if (arg_inner && !(sup_inner < g.w)) {
                rep.outcome = Outcome::ViolatedAtPoint;
                rep.witness = Witness{g.t, g.c->xd, sup_inner, g.w, "W(t1, p in K_r) < W(t2, q outside M_1)"};
                std::ostringstream os;
                os << "r=" << r << ": W=" << sup_inner << " on K_r at " << fmt_point(arg_inner->t, arg_inner->xd)
                   << " is not below W=" << g.w << " at " << fmt_point(g.t, g.c->xd);
                rep.reason = os.str();
                return rep;
            }
        }
        if (!arg_inner || tags.size() == static_cast<std::size_t>(std::count_if(tags.begin(), tags.end(), [](const Tagged& g) { return g.inner; })))
            rep.notes.push_back("r=" + std::to_string(r) + ": separation vacuous on samples");

        // (b) Wdot <= 0 on M_1 minus K_r, on-manifold.
        std::vector<Candidate> ring;
        auto in_ring = [&](const Candidate& c) {
            return all_hold(region.diff, c.t, c.xd) && all_hold(region.free, c.t, c.xs) &&
                   !all_hold(cert.Kr, c.t, c.xd, r);
        };
        for (const auto& c : raw)
            if (in_ring(c)) ring.push_back(c);
        for (const auto& c : m1_path)
            if (in_ring(c)) ring.push_back(c);
        for (const auto& c : boundary_points(raw, cert.Kr, r, true, 4 * raw.size()))
            if (in_ring(c)) ring.push_back(c);
        const auto pts = project_all(rs, region, ring, opts.jobs);
        for (const SamplePoint& p : pts) {
            double wdot;
            try {
                wdot = dW.value(rs, p.t, p.x);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::EvalDomainError) throw;
                continue;
            }
            if (!std::isfinite(wdot)) continue;
            ++rep.samples_used;
            ++inner_total;
            rep.margin = std::min(rep.margin, -wdot);
            if (wdot > slack_tol(wdot, 0.0)) {
                rep.outcome = Outcome::ViolatedAtPoint;
                rep.witness = Witness{p.t, p.x, wdot, 0.0, "Wdot <= 0"};
                std::ostringstream os;
                os << "r=" << r << ": Wdot = " << wdot << " > 0 at " << fmt_point(p.t, p.x);
                rep.reason = os.str();
                return rep;
            }
        }
    }
    if (inner_total == 0) {
        rep.reason = "no on-manifold samples between K_r and the boundary of M_1";
        return rep;
    }
    rep.outcome = Outcome::VerifiedOnSamples;
    return rep;
}

CertificateReport check_bounded_manifold(const ReducedSystem& rs, const BoundedManifoldCert& cert,
                                         const SamplerOptions& opts) {
    CertificateReport rep;
    rep.check = "bounded";
    rep.name = "M_bound=" + std::to_string(cert.M_bound);
    if (!(cert.M_bound > 0.0)) throw Error(ErrorKind::InvalidSpec, "M_bound must be positive");
    const auto pts = sample_region(rs, cert.region, opts, 0.0, cert.M_bound, &rep.samples_drawn);
    const Decomposition& d = rs.dec();
    double sup_xp2 = 0.0, sup_q2f = 0.0;
    for (const SamplePoint& p : pts) {
        const double a = (d.P2 * p.x).norm();
        double b;
        try {
            b = (d.Q2 * rs.dae().eval_f(p.t, p.x)).norm();
        } catch (const Error&) {
            continue;
        }
        ++rep.samples_used;
        sup_xp2 = std::max(sup_xp2, a);
        sup_q2f = std::max(sup_q2f, b);
    }
    rep.extras["sup_xp2"] = sup_xp2;
    rep.extras["sup_Q2f"] = sup_q2f;
    if (rep.samples_used == 0) {
        rep.reason = "no on-manifold samples with |x_p1| <= M_bound";
        return rep;
    }
    rep.outcome = Outcome::VerifiedOnSamples;
    rep.notes.push_back("sample suprema are evidence for the bound, not a proof");
    return rep;
}

OsgoodResult osgood_test(const Expr& U, double v0) {
    if (!(v0 > 0.0) || !std::isfinite(v0)) throw Error(ErrorKind::InvalidSpec, "osgood_test needs v0 > 0");
    constexpr double v_end = 1e12;
    const double s0 = std::log(v0), s1 = std::log(std::max(v_end, 10.0 * v0));
    for (int i = 0; i <= 240; ++i) {
        const double v = std::exp(s0 + (s1 - s0) * i / 240.0);
        double u;
        try {
            u = U.eval_scalar(v);
        } catch (const Error&) {
            u = std::numeric_limits<double>::quiet_NaN();
        }
        if (!(u > 0.0) || !std::isfinite(u)) {
            std::ostringstream os;
            os << "U(" << v << ") = " << u << " is not positive";
            throw Error(ErrorKind::NonpositiveU, os.str());
        }
    }
    OsgoodResult res;
    if (auto pl = power_law(U)) {
        res.method = "power-law";
        const auto [c, p] = *pl;
        if (p <= 1.0) {
            res.kind = OsgoodResult::Kind::Diverges;
            res.value = kInf;
        } else {
            res.kind = OsgoodResult::Kind::Converges;
            res.value = std::pow(v0, 1.0 - p) / (c * (p - 1.0));
        }
        return res;
    }
    res.method = "quadrature";
    auto integrand = [&](double s) {
        const double v = std::exp(s);
        return v / U.eval_scalar(v);
    };
    const double body = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, s0, s1, 15, 1e-10);
    // Local growth exponent of U near the upper end decides the tail.
    const double va = std::exp(s1 - 2.0), vb = std::exp(s1);
    const double p_eff = std::log(U.eval_scalar(vb) / U.eval_scalar(va)) / 2.0;
    if (p_eff > 1.05) {
        res.kind = OsgoodResult::Kind::Converges;
        res.value = body + vb / (U.eval_scalar(vb) * (p_eff - 1.0));
    } else if (p_eff < 0.95) {
        res.kind = OsgoodResult::Kind::Diverges;
        res.value = kInf;
    } else {
        res.value = body;
    }
    return res;
}

ComparisonResult comparison_solve(const Expr& chi, double v0, double t0, double horizon) {
    if (!(v0 > 0.0) || !std::isfinite(v0)) throw Error(ErrorKind::InvalidSpec, "comparison_solve needs v0 > 0");
    ComparisonResult res;
    const bool bounded_horizon = std::isfinite(horizon);
    // Without a horizon, time runs until the step budget or until t itself stops being meaningful.
    const double t_cap = bounded_horizon ? t0 + horizon : 1e250;
    const double v_switch = 1e6 * std::max(1.0, v0);
    constexpr double rtol = 1e-10, atol = 1e-12;
    constexpr int max_steps = 200000;
    res.times.push_back(t0);
    res.values.push_back(v0);
    auto global = [&] {
        res.kind = ComparisonResult::Kind::Global;
        if (!bounded_horizon) res.reason = "no escape before t = 1e250";
        return res;
    };

    // Phase 1: v' = chi(t, v) in t.
    double t = t0;
    Vec y(1);
    y(0) = v0;
    const rk::Rhs f_t = [&](double tt, const Vec& yy) {
        Vec r(1);
        r(0) = chi.eval_scalar(yy(0), tt);
        return r;
    };
    double h = bounded_horizon ? std::min(1e-3, horizon / 50.0) : 1e-3;
    rk::Controller ctrl;
    int steps = 0;
    try {
        while (y(0) <= v_switch) {
            if (t >= t_cap) return global();
            if (++steps > max_steps) {
                res.reason = "step budget exhausted in t";
                return res;
            }
            h = std::min(h, t_cap - t);
            const rk::StepResult sr = rk::dopri_step(f_t, t, y, h);
            const double err = rk::error_norm(sr.err, y, sr.y, rtol, atol);
            if (err > 1.0) {
                h *= ctrl.reject(err);
                if (h < 1e-15 * (1.0 + std::abs(t))) break; // hand over to phase 2
                continue;
            }
            t += h;
            y = sr.y;
            res.times.push_back(t);
            res.values.push_back(y(0));
            if (!(y(0) > 0.0)) {
                res.kind = ComparisonResult::Kind::Global;
                res.reason = "solution left (0, inf)";
                return res;
            }
            h *= ctrl.accept(err);
            if (bounded_horizon) h = std::min(h, horizon / 50.0);
        }
    } catch (const Error& e) {
        res.reason = e.what();
        return res;
    }

    // Phase 2: dt/ds = v / chi with s = ln v, until v = 1e300 or chi overflows.
    const double s_end = std::log(1e300);
    double s = std::log(y(0));
    Vec tv(1);
    tv(0) = t;
    const rk::Rhs f_s = [&](double ss, const Vec& tt) {
        Vec r(1);
        const double c = chi.eval_scalar(std::exp(ss), tt(0));
        if (!(c > 0.0)) throw Error(ErrorKind::EvalDomainError, "chi is not positive for large v");
        r(0) = std::isfinite(c) ? std::exp(ss) / c : 0.0;
        return r;
    };
    rk::Controller ctrl2;
    double hs = 0.1;
    double s_prev = s, g_prev = 0.0, g_last = 0.0;
    try {
        g_last = f_s(s, tv)(0);
        while (s < s_end && g_last > 0.0) {
            if (++steps > max_steps) {
                res.reason = "step budget exhausted in ln v";
                return res;
            }
            hs = std::min(hs, s_end - s);
            const rk::StepResult sr = rk::dopri_step(f_s, s, tv, hs);
            const double err = rk::error_norm(sr.err, tv, sr.y, rtol, 1e-300);
            if (err > 1.0) {
                hs *= ctrl2.reject(err);
                if (hs < 1e-12) {
                    res.reason = "step collapse in ln v";
                    return res;
                }
                continue;
            }
            const double g = f_s(s + hs, sr.y)(0);
            if (g > 0.0) s_prev = s, g_prev = g_last, g_last = g;
            else g_last = 0.0;
            s += hs;
            tv = sr.y;
            res.times.push_back(tv(0));
            res.values.push_back(std::exp(s));
            if (tv(0) >= t_cap) return global();
            hs = std::min(hs * ctrl2.accept(err), 5.0);
        }
    } catch (const Error& e) {
        res.reason = e.what();
        return res;
    }
    // Geometric tail: dt/ds ~ g exp(-kappa (s - s_last)) leaves g / kappa.
    double tail = 0.0;
    if (g_last > 0.0) {
        const double kappa = g_prev > 0.0 ? std::log(g_prev / g_last) / (s - s_prev) : 0.0;
        if (!(kappa > 0.01)) {
            res.reason = "dt/d(ln v) does not decay geometrically";
            return res;
        }
        tail = g_last / kappa;
    }
    res.T = tv(0) + tail;
    if (res.T > t_cap) return global();
    res.kind = ComparisonResult::Kind::FiniteEscape;
    return res;
}

CertifyResult certify(const ReducedSystem& rs, const CertificateSpec& spec) {
    CertifyResult out;
    bool global_ok = false, blowup_ok = false;
    if (spec.global) {
        out.reports.push_back(check_global_certificate(rs, *spec.global, spec.sampler));
        global_ok = out.reports.back().outcome == Outcome::VerifiedOnSamples;
    }
    if (spec.blowup) {
        out.reports.push_back(check_blowup_certificate(rs, *spec.blowup, spec.sampler));
        blowup_ok = out.reports.back().outcome == Outcome::VerifiedOnSamples;
    }
    if (spec.invariance) out.reports.push_back(check_invariance(rs, *spec.invariance, spec.sampler));
    if (spec.bounded) out.reports.push_back(check_bounded_manifold(rs, *spec.bounded, spec.sampler));
    if (global_ok && blowup_ok) out.verdict = CombinedVerdict::Mixed;
    else if (global_ok) out.verdict = CombinedVerdict::GlobalCertified;
    else if (blowup_ok) out.verdict = CombinedVerdict::BlowUpCertified;
    return out;
}

} // namespace daepencil
