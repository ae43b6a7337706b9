#pragma once

#include "daepencil/dae.hpp"
#include "daepencil/decomposition.hpp"

namespace daepencil {

/// Coordinates of x in the stored bases of X_s1, X_s2, X_1, X_2.
struct Components {
    Vec s1, s2, p1, p2;
};

struct PhiOperator {
    Mat matrix;              ///< X_2 -> Y_2 in the stored bases
    double condition = 1.0;  ///< max(sigma_max(Phi), ||B||_2) / sigma_min(Phi)
};

/// Norms of the two algebraic residuals, both in basis coordinates.
struct ResidualPair {
    double ae1 = 0.0; ///< B_2^(-1) Q_2 f - x_p2, in X_2 coordinates
    double ae2 = 0.0; ///< F_2 f - B_ov x_s1, in Y_s2 coordinates
    double max() const { return std::max(ae1, ae2); }
};

/**
 * The DAE split into the differential part (x_s1, x_p1), the free part x_s2 and the
 * algebraic part x_p2. The differential right-hand side is evaluated with the stored
 * semi-inverses; in the regular case the s-blocks are empty and Upsilon reduces to Pi.
 */
class ReducedSystem {
public:
    ReducedSystem(SemilinearDAE dae, Decomposition dec);

    const SemilinearDAE& dae() const { return dae_; }
    const Decomposition& dec() const { return dec_; }
    const SubspaceDims& dims() const { return dec_.xdims; }
    int n() const { return dae_.n(); }
    bool regular() const;
    int diff_dim() const { return dec_.xdims.s1 + dec_.xdims.r1; }

    Components split(const Vec& x) const;
    Vec join(const Components& c) const;

    /// (z_s1, z_p1) coordinates of the differential part of x.
    Vec diff_coords(const Vec& x) const;
    /// x_s1 + x_p1 for coordinates z = (z_s1, z_p1).
    Vec diff_vector(const Vec& z) const;

    /// d/dt (x_s1 + x_p1) as a vector in R^n.
    Vec upsilon(double t, const Vec& x) const;
    Vec upsilon_coords(double t, const Vec& x) const;
    /// Regular-case name for the x_p1 part of upsilon.
    Vec pi(double t, const Vec& x) const;

    PhiOperator phi_operator(double t, const Vec& x) const;

    /// Algebraic residual g(x) = W_y2 (f - B x), the Newton target.
    Vec algebraic_residual(double t, const Vec& x) const;
    ResidualPair check_consistency(double t, const Vec& x) const;
    /// 1 + |f(t,x)| + |B x|, the scale for relative residual tolerances.
    double residual_scale(double t, const Vec& x) const;

    /// A*upsilon + B x - f; zero on consistent points.
    Vec dae_defect(double t, const Vec& x) const;

private:
    SemilinearDAE dae_;
    Decomposition dec_;
    double B_norm_ = 0.0;
};

struct ConsistencyOptions {
    double newton_tol = 1e-10; ///< relative to residual_scale
    int max_iter = 50;
    int max_halvings = 8;
    double max_condition = 1e10;
};

struct ConsistencyResult {
    Vec x_p2;  ///< X_2 coordinates
    Vec x;     ///< full state
    int iterations = 0;
    double residual = 0.0;
    double phi_condition = 1.0;
};

/**
 * Damped Newton on W_y2 (f - B x) = 0 over the x_p2 coordinates, with x_s1, x_s2, x_p1
 * taken from `known` (any x_p2 part of `known` is discarded).
 * Throws PhiSingular or NoConvergence.
 */
ConsistencyResult consistency_project(const ReducedSystem& rs, double t, const Vec& known, const Vec& guess,
                                      const ConsistencyOptions& opts = {});

/// |x_p2 - projected x_p2| in X_2 coordinates, starting Newton from x's own x_p2.
double manifold_distance(const ReducedSystem& rs, double t, const Vec& x, const ConsistencyOptions& opts = {});

} // namespace daepencil
