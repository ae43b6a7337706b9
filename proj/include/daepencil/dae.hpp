#pragma once

#include "daepencil/expr.hpp"
#include "daepencil/pencil.hpp"

#include <optional>
#include <string>
#include <vector>

namespace daepencil {

/// d/dt[A x] + B x = f(t, x) on [t_plus, inf) x D, with D a conjunction of predicates.
struct SemilinearDAE {
    Pencil pencil;
    std::vector<Expr> f;
    std::vector<Predicate> domain;
    double t_plus = 0.0;
    /// Use central differences for df/dx instead of the symbolic Jacobian (for sgn/abs kinks).
    bool fd_jacobian = false;

    int n() const { return static_cast<int>(pencil.cols()); }
    int m() const { return static_cast<int>(pencil.rows()); }

    Vec eval_f(double t, const Vec& x) const;
    Mat jacobian(double t, const Vec& x) const;

    /// Index of the first violated domain predicate, if any.
    std::optional<std::size_t> outside_domain(double t, const Vec& x) const;

    /// Throws ShapeMismatch or UnknownIdentifier for inconsistent definitions and builds `df`.
    void validate();

    /// Symbolic df_i/dx_j, filled by validate().
    std::vector<std::vector<Expr>> df;
};

SemilinearDAE make_dae(Pencil p, const std::vector<std::string>& f, const std::vector<std::string>& domain = {},
                       double t_plus = 0.0);

} // namespace daepencil
