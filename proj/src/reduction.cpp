#include "daepencil/reduction.hpp"

#include "daepencil/error.hpp"

#include <cmath>
#include <limits>

namespace daepencil {

ReducedSystem::ReducedSystem(SemilinearDAE dae, Decomposition dec) : dae_(std::move(dae)), dec_(std::move(dec)) {
    const Pencil& p = dec_.pencil;
    if (p.rows() != dae_.pencil.rows() || p.cols() != dae_.pencil.cols())
        throw Error(ErrorKind::ShapeMismatch, "decomposition does not match the DAE pencil");
    if (static_cast<int>(dae_.f.size()) != dae_.m())
        throw Error(ErrorKind::ShapeMismatch, "f does not match the pencil rows");
    if (dae_.df.empty() && dae_.m() > 0) dae_.validate();
    B_norm_ = la::norm2(dae_.pencil.B());
}

bool ReducedSystem::regular() const {
    return dec_.xdims.s1 + dec_.xdims.s2 == 0 && dec_.ydims.s1 + dec_.ydims.s2 == 0;
}

Components ReducedSystem::split(const Vec& x) const {
    return {dec_.Wx_s1 * x, dec_.Wx_s2 * x, dec_.Wx_1 * x, dec_.Wx_2 * x};
}

Vec ReducedSystem::join(const Components& c) const {
    return dec_.X_s1 * c.s1 + dec_.X_s2 * c.s2 + dec_.X_1 * c.p1 + dec_.X_2 * c.p2;
}

Vec ReducedSystem::diff_coords(const Vec& x) const {
    Vec z(diff_dim());
    z << dec_.Wx_s1 * x, dec_.Wx_1 * x;
    return z;
}

Vec ReducedSystem::diff_vector(const Vec& z) const {
    const int s1 = dec_.xdims.s1;
    return dec_.X_s1 * z.head(s1) + dec_.X_1 * z.tail(dec_.xdims.r1);
}

// F1 B P = 0 and Q1 B S = 0, so F1 (f - Bx) and Q1 (f - Bx) reduce to the projected right-hand sides.
Vec ReducedSystem::upsilon(double t, const Vec& x) const {
    const Vec r = dae_.eval_f(t, x) - dae_.pencil.B() * x;
    return dec_.inv.gen * r + dec_.inv.a1 * r;
}

Vec ReducedSystem::upsilon_coords(double t, const Vec& x) const {
    const Vec r = dae_.eval_f(t, x) - dae_.pencil.B() * x;
    Vec z(diff_dim());
    z << dec_.Wx_s1 * (dec_.inv.gen * r), dec_.Wx_1 * (dec_.inv.a1 * r);
    return z;
}

Vec ReducedSystem::pi(double t, const Vec& x) const {
    const Vec r = dae_.eval_f(t, x) - dae_.pencil.B() * x;
    return dec_.inv.a1 * r;
}

PhiOperator ReducedSystem::phi_operator(double t, const Vec& x) const {
    PhiOperator out;
    if (dec_.xdims.r2 == 0) {
        out.matrix = Mat(0, 0);
        return out;
    }
    out.matrix = dec_.Wy_2 * (dae_.jacobian(t, x) - dae_.pencil.B()) * dec_.X_2;
    Eigen::JacobiSVD<Mat> svd(out.matrix);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    out.condition = smin > 0.0 ? std::max(s(0), B_norm_) / smin : std::numeric_limits<double>::infinity();
    return out;
}

Vec ReducedSystem::algebraic_residual(double t, const Vec& x) const {
    return dec_.Wy_2 * (dae_.eval_f(t, x) - dae_.pencil.B() * x);
}

ResidualPair ReducedSystem::check_consistency(double t, const Vec& x) const {
    const Vec f = dae_.eval_f(t, x);
    ResidualPair r;
    if (dec_.xdims.r2 > 0) r.ae1 = (dec_.Wx_2 * (dec_.inv.b2 * f) - dec_.Wx_2 * x).norm();
    if (dec_.ydims.s2 > 0) r.ae2 = (dec_.Wy_s2 * (f - dae_.pencil.B() * x)).norm();
    return r;
}

double ReducedSystem::residual_scale(double t, const Vec& x) const {
    return 1.0 + dae_.eval_f(t, x).norm() + (dae_.pencil.B() * x).norm();
}

Vec ReducedSystem::dae_defect(double t, const Vec& x) const {
    return dae_.pencil.A() * upsilon(t, x) + dae_.pencil.B() * x - dae_.eval_f(t, x);
}

ConsistencyResult consistency_project(const ReducedSystem& rs, double t, const Vec& known, const Vec& guess,
                                      const ConsistencyOptions& opts) {
    const Decomposition& d = rs.dec();
    const int d2 = d.xdims.r2;
    if (guess.size() != d2)
        throw Error(ErrorKind::ShapeMismatch, "guess must have dim X_2 = " + std::to_string(d2) + " entries");
    if (!guess.allFinite()) throw Error(ErrorKind::NonFinite, "guess is not finite");

    const Vec base = known - d.X_2 * (d.Wx_2 * known);
    ConsistencyResult res;
    res.x_p2 = guess;
    res.x = base + d.X_2 * guess;
    if (d2 == 0) return res;

    auto residual_at = [&](const Vec& z, Vec& g, double& tol) {
        const Vec x = base + d.X_2 * z;
        g = rs.algebraic_residual(t, x);
        tol = opts.newton_tol * rs.residual_scale(t, x);
        return g.norm();
    };

    Vec z = guess, g;
    double tol = 0.0;
    double rn = residual_at(z, g, tol);
    for (int it = 0; it <= opts.max_iter; ++it) {
        res.iterations = it;
        if (rn <= tol) {
            res.x_p2 = z;
            res.x = base + d.X_2 * z;
            res.residual = rn;
            return res;
        }
        if (it == opts.max_iter) break;
        const PhiOperator phi = rs.phi_operator(t, base + d.X_2 * z);
        res.phi_condition = phi.condition;
        if (!(phi.condition <= opts.max_condition))
            throw Error(ErrorKind::PhiSingular, "Phi is singular (condition " + std::to_string(phi.condition) +
                                                    ") at t=" + std::to_string(t) + "; the invertibility hypothesis fails here");
        const Vec step = phi.matrix.fullPivLu().solve(g);
        double alpha = 1.0;
        Vec z_new, g_new;
        double tol_new = tol, rn_new = std::numeric_limits<double>::infinity();
        for (int h = 0; h <= opts.max_halvings; ++h, alpha *= 0.5) {
            z_new = z - alpha * step;
            try {
                rn_new = residual_at(z_new, g_new, tol_new);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::EvalDomainError) throw;
                rn_new = std::numeric_limits<double>::infinity();
            }
            if (rn_new < rn) break;
        }
        if (!(rn_new < rn)) {
            // Rounding floor: accept when Newton cannot make progress but is already tight.
            if (rn <= 1e4 * tol && alpha * step.norm() <= 1e-12 * (1.0 + z.norm())) {
                res.x_p2 = z;
                res.x = base + d.X_2 * z;
                res.residual = rn;
                return res;
            }
            throw Error(ErrorKind::NoConvergence, "damped Newton stalled at residual " + std::to_string(rn) +
                                                      "; the start left the contraction neighbourhood");
        }
        z = z_new, g = g_new, tol = tol_new, rn = rn_new;
    }
    throw Error(ErrorKind::NoConvergence,
                "no convergence after " + std::to_string(opts.max_iter) + " iterations, residual " + std::to_string(rn));
}

double manifold_distance(const ReducedSystem& rs, double t, const Vec& x, const ConsistencyOptions& opts) {
    const Vec z0 = rs.dec().Wx_2 * x;
    const ConsistencyResult r = consistency_project(rs, t, x, z0, opts);
    return (r.x_p2 - z0).norm();
}

} // namespace daepencil
