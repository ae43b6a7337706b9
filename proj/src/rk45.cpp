#include "daepencil/rk45.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace daepencil::rk {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - b_hat for the embedded fourth-order weights.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

} // namespace

StepResult dopri_step(const Rhs& f, double t, const Vec& y, double h) {
    const Vec k1 = f(t, y);
    const Vec k2 = f(t + c2 * h, y + h * (a21 * k1));
    const Vec k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const Vec k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vec k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    StepResult r;
    r.y = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vec k7 = f(t + h, r.y);
    r.err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    return r;
}

double error_norm(const Vec& err, const Vec& y0, const Vec& y1, double rtol, double atol) {
    if (err.size() == 0) return 0.0;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double sc = atol + rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
        const double q = err(i) / sc;
        acc += q * q;
    }
    const double v = std::sqrt(acc / static_cast<double>(err.size()));
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

double Controller::accept(double err) {
    constexpr double alpha = 0.7 / 5, beta = 0.4 / 5;
    const double e = std::max(err, 1e-10);
    const double fac = 0.9 * std::pow(e, -alpha) * std::pow(err_prev_, beta);
    err_prev_ = e;
    return std::clamp(fac, 0.2, 5.0);
}

double Controller::reject(double err) const {
    if (!std::isfinite(err)) return 0.2;
    return std::clamp(0.9 * std::pow(err, -0.2), 0.2, 0.9);
}

} // namespace daepencil::rk
