#include "daepencil/integrator.hpp"

#include "daepencil/error.hpp"
#include "daepencil/rk45.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace daepencil {

std::string to_string(VerdictKind k) {
    switch (k) {
        case VerdictKind::GlobalToHorizon: return "GlobalToHorizon";
        case VerdictKind::BlowUp: return "BlowUp";
        case VerdictKind::LeftDomain: return "LeftDomain";
        case VerdictKind::ConstraintFailure: return "ConstraintFailure";
        case VerdictKind::PhiSingular: return "PhiSingular";
    }
    return "?";
}

std::string to_string(LagrangeVerdict v) {
    switch (v) {
        case LagrangeVerdict::Stable: return "Stable";
        case LagrangeVerdict::Unstable: return "Unstable";
        case LagrangeVerdict::Undetermined: return "Undetermined";
    }
    return "?";
}

Vec FreeComponent::coords(const ReducedSystem& rs, double t) const {
    const int ds2 = rs.dims().s2;
    const int n = rs.n();
    Vec v(static_cast<Eigen::Index>(exprs.size()));
    for (std::size_t i = 0; i < exprs.size(); ++i) v(static_cast<Eigen::Index>(i)) = exprs[i].eval_scalar(0.0, t);
    if (v.size() == ds2) return v;
    if (v.size() == n) return rs.dec().Wx_s2 * v;
    throw Error(ErrorKind::ShapeMismatch, "phi_s2 has " + std::to_string(exprs.size()) + " entries; expected " +
                                              std::to_string(ds2) + " (X_s2 coordinates) or " + std::to_string(n));
}

FreeComponent parse_free_component(const std::vector<std::string>& texts) {
    FreeComponent fc;
    const Scope scope{0, true, std::nullopt};
    for (const auto& s : texts) fc.exprs.push_back(parse_expr(s, scope));
    return fc;
}

namespace {

struct StageSolver {
    const ReducedSystem& rs;
    const FreeComponent& phi;
    const ConsistencyOptions& newton;
    Vec z2;
    int iterations = 0;

    Vec state(double t, const Vec& y) {
        Vec known = rs.diff_vector(y);
        if (rs.dims().s2 > 0) known += rs.dec().X_s2 * phi.coords(rs, t);
        const ConsistencyResult r = consistency_project(rs, t, known, z2, newton);
        z2 = r.x_p2;
        iterations = r.iterations;
        return r.x;
    }
};

struct Failure {
    ErrorKind kind;
    std::string message;
};

} // namespace

Trajectory integrate(const ReducedSystem& rs, double t0, const Vec& x0, const FreeComponent& phi_s2, double horizon,
                     const IntegratorOptions& opts) {
    const Decomposition& d = rs.dec();
    if (x0.size() != rs.n()) throw Error(ErrorKind::ShapeMismatch, "x0 must have n = " + std::to_string(rs.n()) + " entries");
    if (!(horizon > t0)) throw Error(ErrorKind::InvalidSpec, "horizon must exceed t0");
    if (d.xdims.s2 > 0 && phi_s2.empty())
        throw Error(ErrorKind::MissingFreeComponent,
                    "X_s2 has dimension " + std::to_string(d.xdims.s2) +
                        "; the free component S2 x(t) must be prescribed by phi_s2");
    if (d.xdims.s2 > 0) {
        const Vec c = phi_s2.coords(rs, t0);
        const double gap = (d.Wx_s2 * x0 - c).norm();
        if (gap > 1e-9 * (1.0 + c.norm()))
            throw Error(ErrorKind::InconsistentStart, "S2 x0 differs from phi_s2(t0) by " + std::to_string(gap));
    }
    const ResidualPair r0 = rs.check_consistency(t0, x0);
    if (r0.max() > opts.consistency_tol * rs.residual_scale(t0, x0)) {
        std::ostringstream msg;
        msg << "initial point is not on the consistency manifold: ae1 residual " << r0.ae1 << ", ae2 residual " << r0.ae2;
        throw Error(ErrorKind::InconsistentStart, msg.str());
    }
    if (auto k = rs.dae().outside_domain(t0, x0))
        throw Error(ErrorKind::InconsistentStart, "x0 violates domain predicate '" + rs.dae().domain[*k].text + "'");

    const double h_max = opts.h_max > 0 ? opts.h_max : (horizon - t0) / 50.0;
    double h = opts.fixed_step ? *opts.fixed_step : (opts.h0 > 0 ? opts.h0 : std::min(h_max, 1e-3));

    StageSolver solver{rs, phi_s2, opts.newton, d.Wx_2 * x0};
    Vec z2_acc = solver.z2;
    const rk::Rhs rhs = [&](double t, const Vec& y) { return rs.upsilon_coords(t, solver.state(t, y)); };

    Trajectory traj;
    auto record = [&](double t, const Vec& x, const ResidualPair& r, int iters) {
        traj.times.push_back(t);
        traj.states.push_back(x);
        traj.residuals.push_back(r);
        traj.diff_norms.push_back(rs.diff_vector(rs.diff_coords(x)).norm());
        traj.newton_iterations.push_back(iters);
    };
    record(t0, x0, r0, 0);

    double t = t0;
    Vec y = rs.diff_coords(x0);
    rk::Controller ctrl;
    int post = 0;
    bool triggered = false;
    Verdict& v = traj.verdict;

    auto finish_blowup = [&] {
        v.kind = VerdictKind::BlowUp;
        v.t = t;
        v.weak = !(v.norm_trigger && v.step_trigger);
        try {
            const EscapeFit fit = estimate_escape_time(traj);
            v.T_est = fit.T;
            v.gamma = fit.gamma;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::FitFailed) throw;
            v.witness = "escape-time fit failed; t_last is a lower bound";
        }
        return traj;
    };

    std::optional<Failure> failure;
    for (int step = 0; t < horizon; ++step) {
        if (step >= opts.max_steps) throw Error(ErrorKind::NoConvergence, "step budget exhausted before the horizon");
        const double h_min = opts.h_min_rel * (1.0 + std::abs(t));
        h = std::min(h, horizon - t);
        const bool last = h >= horizon - t;

        solver.z2 = z2_acc;
        double err = std::numeric_limits<double>::infinity();
        rk::StepResult sr;
        Vec x_new;
        try {
            sr = rk::dopri_step(rhs, t, y, h);
            err = opts.fixed_step ? 0.0 : rk::error_norm(sr.err, y, sr.y, opts.rtol, opts.atol);
            if (!sr.y.allFinite()) err = std::numeric_limits<double>::infinity();
            if (err <= 1.0) x_new = solver.state(last ? horizon : t + h, sr.y);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::PhiSingular && e.kind() != ErrorKind::NoConvergence &&
                e.kind() != ErrorKind::EvalDomainError)
                throw;
            failure = Failure{e.kind(), e.what()};
            err = std::numeric_limits<double>::infinity();
        }

        if (err > 1.0) {
            ++traj.rejected_steps;
            const double h_next = opts.fixed_step ? 0.0 : h * ctrl.reject(err);
            if (h_next >= h_min) {
                h = h_next;
                continue;
            }
            if (failure && !triggered) {
                v.t = t;
                v.witness = failure->message;
                switch (failure->kind) {
                    case ErrorKind::PhiSingular: v.kind = VerdictKind::PhiSingular; break;
                    case ErrorKind::EvalDomainError: v.kind = VerdictKind::LeftDomain; break;
                    default: v.kind = VerdictKind::ConstraintFailure; break;
                }
                return traj;
            }
            // Step size collapsed below h_min: the step trigger.
            v.step_trigger = true;
            triggered = true;
            if (v.norm_trigger || opts.fixed_step || h <= h_min || post >= opts.post_trigger_steps)
                return finish_blowup();
            h = h_min;
            ++post;
            continue;
        }
        failure.reset();

        const double t_new = last ? horizon : t + h;
        if (auto k = rs.dae().outside_domain(t_new, x_new)) {
            // Localize the crossing by re-stepping from the last accepted point.
            double lo = t, hi = t_new;
            while (hi - lo > 1e-9) {
                const double mid = 0.5 * (lo + hi);
                solver.z2 = z2_acc;
                bool outside = true;
                try {
                    const Vec ym = rk::dopri_step(rhs, t, y, mid - t).y;
                    outside = rs.dae().outside_domain(mid, solver.state(mid, ym)).has_value();
                } catch (const Error&) {
                }
                (outside ? hi : lo) = mid;
            }
            v.kind = VerdictKind::LeftDomain;
            v.t = hi;
            v.witness = rs.dae().domain[*k].text;
            return traj;
        }

        const ResidualPair rp = rs.check_consistency(t_new, x_new);
        const double tol = opts.consistency_tol * rs.residual_scale(t_new, x_new);
        t = t_new;
        y = sr.y;
        z2_acc = solver.z2;
        if (rp.max() > tol) {
            v.kind = VerdictKind::ConstraintFailure;
            v.t = t;
            v.residual = rp.max();
            v.witness = "algebraic residual above tolerance";
            return traj;
        }
        record(t, x_new, rp, solver.iterations);

        if (traj.diff_norms.back() > opts.blowup_norm) {
            v.norm_trigger = true;
            triggered = true;
        }
        if (!opts.fixed_step && h < h_min) {
            // Accepted, but only at a size the controller would not allow.
            v.step_trigger = true;
            triggered = true;
        }
        if (v.norm_trigger && v.step_trigger) return finish_blowup();
        if (triggered && ++post > opts.post_trigger_steps) return finish_blowup();

        if (!opts.fixed_step) {
            h *= ctrl.accept(err);
            h = std::min(h, h_max);
            if (v.step_trigger) h = std::max(h, h_min);
        }
    }
    if (triggered) return finish_blowup();
    v.kind = VerdictKind::GlobalToHorizon;
    v.t = t;
    return traj;
}

EscapeFit estimate_escape_time(const Trajectory& traj) {
    if (traj.verdict.kind != VerdictKind::BlowUp)
        throw Error(ErrorKind::InvalidSpec, "escape time is only defined for a BlowUp verdict");
    const std::size_t N = traj.times.size();
    const std::size_t k = std::min<std::size_t>(20, N);
    if (k < 3) throw Error(ErrorKind::FitFailed, "fewer than three accepted steps");
    const double t_last = traj.times.back();

    EscapeFit best;
    bool found = false;
    for (double gamma : {0.5, 1.0, 2.0}) {
        double st = 0, sy = 0, stt = 0, syy = 0, sty = 0;
        bool ok = true;
        for (std::size_t i = N - k; i < N; ++i) {
            const double nrm = traj.diff_norms[i];
            if (!(nrm > 0) || !std::isfinite(nrm)) {
                ok = false;
                break;
            }
            const double tau = traj.times[i] - t_last;
            const double yv = std::pow(nrm, -gamma);
            st += tau, sy += yv, stt += tau * tau, syy += yv * yv, sty += tau * yv;
        }
        if (!ok) continue;
        const double kk = static_cast<double>(k);
        const double ctt = stt - st * st / kk, cyy = syy - sy * sy / kk, cty = sty - st * sy / kk;
        if (ctt <= 0 || cyy <= 0) continue;
        const double slope = cty / ctt;
        const double icpt = (sy - slope * st) / kk;
        const double r = cty / std::sqrt(ctt * cyy);
        if (slope >= 0) continue;
        if (!found || std::abs(r) > std::abs(best.correlation)) {
            best.correlation = r;
            best.gamma = gamma;
            best.T = t_last + std::max(0.0, -icpt / slope);
            found = true;
        }
    }
    if (!found || std::abs(best.correlation) < 0.9)
        throw Error(ErrorKind::FitFailed, "no power-law fit of the norm reaches |r| >= 0.9");
    return best;
}

LagrangeReport lagrange_report(const Trajectory& traj, const std::vector<Predicate>& bounds) {
    LagrangeReport rep;
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        rep.sup_norm = std::max(rep.sup_norm, traj.states[i].norm());
        if (rep.first_violation) continue;
        for (const auto& b : bounds)
            if (!b.holds(traj.times[i], traj.states[i])) {
                rep.first_violation = i;
                break;
            }
    }
    switch (traj.verdict.kind) {
        case VerdictKind::BlowUp: rep.verdict = LagrangeVerdict::Unstable; break;
        case VerdictKind::GlobalToHorizon:
            rep.verdict = (!bounds.empty() && !rep.first_violation) ? LagrangeVerdict::Stable : LagrangeVerdict::Undetermined;
            break;
        default: rep.verdict = LagrangeVerdict::Undetermined; break;
    }
    return rep;
}

namespace {

void put_number(std::ostream& os, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    os.write(buf, res.ptr - buf);
}

double get_number(std::string_view s) {
    double v = 0.0;
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc()) throw Error(ErrorKind::SyntaxError, "bad number '" + std::string(s) + "' in CSV");
    return v;
}

} // namespace

void write_csv(std::ostream& os, const Trajectory& traj) {
    const Eigen::Index n = traj.states.empty() ? 0 : traj.states.front().size();
    os << "t";
    for (Eigen::Index j = 0; j < n; ++j) os << ",x" << j + 1;
    os << ",res_ae1,res_ae2\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        put_number(os, traj.times[i]);
        for (Eigen::Index j = 0; j < n; ++j) {
            os << ',';
            put_number(os, traj.states[i](j));
        }
        os << ',';
        put_number(os, traj.residuals[i].ae1);
        os << ',';
        put_number(os, traj.residuals[i].ae2);
        os << '\n';
    }
}

Trajectory read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw Error(ErrorKind::SyntaxError, "empty CSV");
    const auto cols = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',') + 1);
    if (cols < 3) throw Error(ErrorKind::SyntaxError, "CSV header has too few columns");
    const Eigen::Index n = cols - 3;
    Trajectory traj;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> vals;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            vals.push_back(get_number(std::string_view(line).substr(start, comma - start)));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (static_cast<Eigen::Index>(vals.size()) != cols) throw Error(ErrorKind::SyntaxError, "CSV row has the wrong width");
        traj.times.push_back(vals[0]);
        traj.states.push_back(Eigen::Map<const Vec>(vals.data() + 1, n));
        traj.residuals.push_back({vals[n + 1], vals[n + 2]});
    }
    return traj;
}

} // namespace daepencil
