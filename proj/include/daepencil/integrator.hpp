#pragma once

#include "daepencil/reduction.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace daepencil {

/// Prescribed free component S2 x(t): either d_s2 coordinates in the X_s2 basis or n entries of S2 x.
struct FreeComponent {
    std::vector<Expr> exprs;

    bool empty() const { return exprs.empty(); }
    /// X_s2 coordinates at time t. Throws ShapeMismatch if the length fits neither form.
    Vec coords(const ReducedSystem& rs, double t) const;
};

/// Expressions in t only.
FreeComponent parse_free_component(const std::vector<std::string>& texts);

struct IntegratorOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    double consistency_tol = 1e-9; ///< relative to ReducedSystem::residual_scale
    double blowup_norm = 1e8;
    double h_min_rel = 1e-12;      ///< h_min = h_min_rel * (1 + |t|)
    double h_max = 0.0;            ///< 0 selects |horizon - t0| / 50
    double h0 = 0.0;               ///< 0 selects min(h_max, 1e-3)
    std::optional<double> fixed_step;
    int max_steps = 2000000;
    int post_trigger_steps = 200;
    ConsistencyOptions newton;
};

enum class VerdictKind { GlobalToHorizon, BlowUp, LeftDomain, ConstraintFailure, PhiSingular };

std::string to_string(VerdictKind k);

struct Verdict {
    VerdictKind kind = VerdictKind::GlobalToHorizon;
    double t = 0.0;                ///< t_end, t_last or the failure time
    std::optional<double> T_est;   ///< BlowUp only; empty when the fit failed
    double gamma = 0.0;            ///< exponent chosen by the escape-time fit
    bool weak = false;             ///< BlowUp with only one of the two triggers
    bool norm_trigger = false;
    bool step_trigger = false;
    std::string witness;           ///< violated predicate or failure message
    double residual = 0.0;         ///< ConstraintFailure
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<ResidualPair> residuals;
    std::vector<double> diff_norms;  ///< |x_s1 + x_p1|
    std::vector<int> newton_iterations;
    Verdict verdict;
    int rejected_steps = 0;
};

/**
 * Integrates the differential part (x_s1, x_p1) with Dormand-Prince 5(4) and PI control.
 * Every stage sets x_s2 from `phi_s2` and re-solves x_p2 by warm-started Newton.
 *
 * Throws InconsistentStart when (t0, x0) is off the manifold or S2 x0 disagrees with
 * phi_s2(t0), and MissingFreeComponent when X_s2 is nontrivial and phi_s2 is empty.
 */
Trajectory integrate(const ReducedSystem& rs, double t0, const Vec& x0, const FreeComponent& phi_s2,
                     double horizon, const IntegratorOptions& opts = {});

struct EscapeFit {
    double T = 0.0;
    double gamma = 0.0;
    double correlation = 0.0;
};

/// Fits |diff part|^(-gamma), gamma in {1/2, 1, 2}, against t over the last 20 steps.
/// Throws InvalidSpec unless the verdict is BlowUp, FitFailed if every |r| < 0.9.
EscapeFit estimate_escape_time(const Trajectory& traj);

enum class LagrangeVerdict { Stable, Unstable, Undetermined };
std::string to_string(LagrangeVerdict v);

struct LagrangeReport {
    LagrangeVerdict verdict = LagrangeVerdict::Undetermined;
    double sup_norm = 0.0;
    std::optional<std::size_t> first_violation; ///< step index that broke a bound
};

LagrangeReport lagrange_report(const Trajectory& traj, const std::vector<Predicate>& bounds);

/// Header t,x1..xn,res_ae1,res_ae2; shortest round-trip decimal form.
void write_csv(std::ostream& os, const Trajectory& traj);
/// Reads what write_csv wrote (times, states, residuals only).
Trajectory read_csv(std::istream& is);

} // namespace daepencil
