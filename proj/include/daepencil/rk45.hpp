#pragma once

#include "daepencil/linalg.hpp"

#include <functional>

namespace daepencil::rk {

using Rhs = std::function<Vec(double, const Vec&)>;

struct StepResult {
    Vec y;   ///< fifth-order solution
    Vec err; ///< difference to the embedded fourth-order solution
};

/// One Dormand-Prince 5(4) step. Exceptions from `f` propagate.
StepResult dopri_step(const Rhs& f, double t, const Vec& y, double h);

/// RMS of err_i / (atol + rtol * max(|y0_i|, |y1_i|)); NaN and inf map to +inf.
double error_norm(const Vec& err, const Vec& y0, const Vec& y1, double rtol, double atol);

/// PI step-size controller with exponents 0.7/5 and 0.4/5.
class Controller {
public:
    /// Factor for the next step after an accepted step with error norm `err` (<= 1).
    double accept(double err);
    /// Factor after a rejected step.
    double reject(double err) const;

private:
    double err_prev_ = 1e-4;
};

} // namespace daepencil::rk
