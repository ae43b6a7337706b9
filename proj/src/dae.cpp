#include "daepencil/dae.hpp"

#include "daepencil/error.hpp"

#include <cmath>

namespace daepencil {

void SemilinearDAE::validate() {
    if (static_cast<int>(f.size()) != m())
        throw Error(ErrorKind::ShapeMismatch,
                    "f has " + std::to_string(f.size()) + " components, pencil has " + std::to_string(m()) + " rows");
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i].max_state_index() >= n())
            throw Error(ErrorKind::UnknownIdentifier, "f" + std::to_string(i + 1) + " uses a state beyond x" + std::to_string(n()));
    for (const auto& p : domain)
        if (std::max(p.lhs.max_state_index(), p.rhs.max_state_index()) >= n())
            throw Error(ErrorKind::UnknownIdentifier, "domain predicate '" + p.text + "' uses a state beyond x" + std::to_string(n()));
    df = daepencil::jacobian(f, n());
}

Vec SemilinearDAE::eval_f(double t, const Vec& x) const {
    Vec out(m());
    const EvalPoint pt{t, x.data(), static_cast<int>(x.size()), 0.0};
    for (int i = 0; i < m(); ++i) out(i) = f[i].eval(pt);
    return out;
}

Mat SemilinearDAE::jacobian(double t, const Vec& x) const {
    Mat J(m(), n());
    if (fd_jacobian) {
        Vec xp = x;
        for (int j = 0; j < n(); ++j) {
            const double h = 1e-6 * (1.0 + std::abs(x(j)));
            xp(j) = x(j) + h;
            const Vec fp = eval_f(t, xp);
            xp(j) = x(j) - h;
            const Vec fm = eval_f(t, xp);
            xp(j) = x(j);
            J.col(j) = (fp - fm) / (2.0 * h);
        }
        return J;
    }
    if (df.empty() && m() > 0) throw Error(ErrorKind::InvalidSpec, "SemilinearDAE used before validate()");
    const EvalPoint pt{t, x.data(), static_cast<int>(x.size()), 0.0};
    for (int i = 0; i < m(); ++i)
        for (int j = 0; j < n(); ++j) J(i, j) = df[i][j].eval(pt);
    return J;
}

std::optional<std::size_t> SemilinearDAE::outside_domain(double t, const Vec& x) const {
    for (std::size_t k = 0; k < domain.size(); ++k)
        if (!domain[k].holds(t, x)) return k;
    return std::nullopt;
}

SemilinearDAE make_dae(Pencil p, const std::vector<std::string>& f, const std::vector<std::string>& domain,
                       double t_plus) {
    SemilinearDAE dae;
    dae.pencil = std::move(p);
    dae.t_plus = t_plus;
    const Scope scope = Scope::state(dae.n());
    for (const auto& s : f) dae.f.push_back(parse_expr(s, scope));
    for (const auto& s : domain) dae.domain.push_back(parse_predicate(s, scope));
    dae.validate();
    return dae;
}

} // namespace daepencil
