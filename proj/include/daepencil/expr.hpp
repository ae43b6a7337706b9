#pragma once

#include "daepencil/linalg.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace daepencil {

/// Which identifiers an expression may use besides pi and e.
struct Scope {
    int n = 0;                      ///< x1..xn are allowed
    bool allow_t = true;
    std::optional<std::string> scalar; ///< name of the scalar variable ("v", "r"), if any

    static Scope state(int n) { return {n, true, std::nullopt}; }
    static Scope scalar_only(std::string name, bool with_t = false) { return {0, with_t, std::move(name)}; }
};

enum class Func { Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Sgn, Pow, Min, Max };

/// Variable reference used by `diff`.
struct Var {
    enum class Kind { Time, State, Scalar } kind = Kind::Time;
    int index = 0; ///< 0-based state index for Kind::State

    static Var t() { return {Kind::Time, 0}; }
    static Var x(int i) { return {Kind::State, i}; }
    static Var scalar() { return {Kind::Scalar, 0}; }
};

/// Evaluation point. `x` may be empty when the expression uses no state variables.
struct EvalPoint {
    double t = 0.0;
    const double* x = nullptr;
    int n = 0;
    double s = 0.0; ///< value of the scalar variable
};

/**
 * Immutable expression tree shared by value.
 *
 * Grammar (lowest to highest precedence): + -, * /, unary -, ^ (right-associative).
 * `eval` throws EvalDomainError for log/sqrt/pow/division outside their domain and
 * returns +-inf on overflow.
 */
class Expr {
public:
    enum class Kind { Const, Time, State, Scalar, Neg, Add, Sub, Mul, Div, Pow, Call };

    Expr();
    static Expr constant(double c);
    static Expr variable(Var v);
    static Expr neg(Expr a);
    static Expr binary(Kind k, Expr a, Expr b);
    static Expr call(Func f, std::vector<Expr> args);

    Kind kind() const;
    double value() const; ///< Const only
    int index() const;    ///< State only
    Func func() const;    ///< Call only
    const std::vector<Expr>& args() const;

    double eval(const EvalPoint& p) const;
    double eval(double t, const Vec& x) const;
    double eval_scalar(double s, double t = 0.0) const;

    Expr diff(Var v) const;
    std::string str() const;

    bool uses(Var::Kind k) const;
    int max_state_index() const; ///< -1 when no state variable appears

    /// Structural equality (constants compared exactly).
    bool same(const Expr& other) const;

private:
    struct Node;
    explicit Expr(std::shared_ptr<const Node> n);
    std::shared_ptr<const Node> node_;
};

/// Parse with identifiers t and x1..xn.
Expr parse_expr(std::string_view text, int n);
Expr parse_expr(std::string_view text, const Scope& scope);

/// d f_i / d x_j as an m x n table.
std::vector<std::vector<Expr>> jacobian(const std::vector<Expr>& fs, int n);

const char* func_name(Func f);

/// Comparison predicate `lhs op rhs` such as "x1 < 0" or "abs(x1-1) >= r".
struct Predicate {
    enum class Op { Lt, Le, Gt, Ge, Ne, Eq };

    Expr lhs;
    Op op = Op::Lt;
    Expr rhs;
    std::string text;

    bool holds(const EvalPoint& p) const;
    bool holds(double t, const Vec& x) const;
    /// lhs - rhs; its sign change marks the predicate boundary.
    double gap(const EvalPoint& p) const;
};

Predicate parse_predicate(std::string_view text, const Scope& scope);

} // namespace daepencil
