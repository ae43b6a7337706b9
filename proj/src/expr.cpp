#include "daepencil/expr.hpp"

#include "daepencil/error.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <numbers>

namespace daepencil {

struct Expr::Node {
    Kind kind = Kind::Const;
    double value = 0.0;
    int index = 0;
    Func fn = Func::Sin;
    std::vector<Expr> args;
};

Expr::Expr() : Expr(constant(0.0)) {}
Expr::Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

Expr Expr::constant(double c) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Const;
    n->value = c;
    return Expr(std::move(n));
}

Expr Expr::variable(Var v) {
    auto n = std::make_shared<Node>();
    switch (v.kind) {
        case Var::Kind::Time: n->kind = Kind::Time; break;
        case Var::Kind::State: n->kind = Kind::State; n->index = v.index; break;
        case Var::Kind::Scalar: n->kind = Kind::Scalar; break;
    }
    return Expr(std::move(n));
}

Expr Expr::neg(Expr a) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Neg;
    n->args = {std::move(a)};
    return Expr(std::move(n));
}

Expr Expr::binary(Kind k, Expr a, Expr b) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->args = {std::move(a), std::move(b)};
    return Expr(std::move(n));
}

Expr Expr::call(Func f, std::vector<Expr> args) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Call;
    n->fn = f;
    n->args = std::move(args);
    return Expr(std::move(n));
}

Expr::Kind Expr::kind() const { return node_->kind; }
double Expr::value() const { return node_->value; }
int Expr::index() const { return node_->index; }
Func Expr::func() const { return node_->fn; }
const std::vector<Expr>& Expr::args() const { return node_->args; }

const char* func_name(Func f) {
    switch (f) {
        case Func::Sin: return "sin";
        case Func::Cos: return "cos";
        case Func::Tan: return "tan";
        case Func::Exp: return "exp";
        case Func::Log: return "log";
        case Func::Sqrt: return "sqrt";
        case Func::Abs: return "abs";
        case Func::Sgn: return "sgn";
        case Func::Pow: return "pow";
        case Func::Min: return "min";
        case Func::Max: return "max";
    }
    return "?";
}

namespace {

int arity(Func f) { return (f == Func::Pow || f == Func::Min || f == Func::Max) ? 2 : 1; }

std::optional<Func> lookup_func(std::string_view name) {
    static constexpr Func all[] = {Func::Sin, Func::Cos, Func::Tan, Func::Exp, Func::Log, Func::Sqrt,
                                   Func::Abs, Func::Sgn, Func::Pow, Func::Min, Func::Max};
    for (Func f : all)
        if (name == func_name(f)) return f;
    return std::nullopt;
}

double checked_pow(double a, double b) {
    if (a < 0.0 && std::isfinite(b) && b != std::floor(b))
        throw Error(ErrorKind::EvalDomainError, "negative base with non-integer exponent");
    if (a == 0.0 && b < 0.0) throw Error(ErrorKind::EvalDomainError, "zero raised to a negative power");
    return std::pow(a, b);
}

double sgn(double a) { return static_cast<double>((a > 0.0) - (a < 0.0)); }

// Simplifying constructors used by diff.
bool is_const(const Expr& e, double c) { return e.kind() == Expr::Kind::Const && e.value() == c; }
bool is_const(const Expr& e) { return e.kind() == Expr::Kind::Const; }

Expr fold(double v, const Expr& fallback) { return std::isfinite(v) ? Expr::constant(v) : fallback; }

Expr mk_neg(const Expr& a) {
    if (is_const(a)) return Expr::constant(-a.value());
    if (a.kind() == Expr::Kind::Neg) return a.args()[0];
    return Expr::neg(a);
}

Expr mk_add(const Expr& a, const Expr& b) {
    if (is_const(a, 0.0)) return b;
    if (is_const(b, 0.0)) return a;
    if (is_const(a) && is_const(b)) return Expr::constant(a.value() + b.value());
    return Expr::binary(Expr::Kind::Add, a, b);
}

Expr mk_sub(const Expr& a, const Expr& b) {
    if (is_const(b, 0.0)) return a;
    if (is_const(a, 0.0)) return mk_neg(b);
    if (is_const(a) && is_const(b)) return Expr::constant(a.value() - b.value());
    return Expr::binary(Expr::Kind::Sub, a, b);
}

Expr mk_mul(const Expr& a, const Expr& b) {
    if (is_const(a, 0.0) || is_const(b, 0.0)) return Expr::constant(0.0);
    if (is_const(a, 1.0)) return b;
    if (is_const(b, 1.0)) return a;
    if (is_const(a, -1.0)) return mk_neg(b);
    if (is_const(b, -1.0)) return mk_neg(a);
    if (is_const(a) && is_const(b)) return Expr::constant(a.value() * b.value());
    return Expr::binary(Expr::Kind::Mul, a, b);
}

Expr mk_div(const Expr& a, const Expr& b) {
    if (is_const(b, 1.0)) return a;
    if (is_const(a, 0.0) && !is_const(b, 0.0)) return Expr::constant(0.0);
    if (is_const(a) && is_const(b) && b.value() != 0.0)
        return fold(a.value() / b.value(), Expr::binary(Expr::Kind::Div, a, b));
    return Expr::binary(Expr::Kind::Div, a, b);
}

Expr mk_pow(const Expr& a, const Expr& b) {
    if (is_const(b, 1.0)) return a;
    if (is_const(b, 0.0)) return Expr::constant(1.0);
    return Expr::binary(Expr::Kind::Pow, a, b);
}

Expr mk_call(Func f, std::vector<Expr> args) { return Expr::call(f, std::move(args)); }

Expr diff_pow(const Expr& a, const Expr& b, Var v) {
    const Expr da = a.diff(v), db = b.diff(v);
    if (is_const(b)) return mk_mul(mk_mul(b, mk_pow(a, Expr::constant(b.value() - 1.0))), da);
    const Expr self = mk_pow(a, b);
    if (is_const(a)) return mk_mul(mk_mul(self, mk_call(Func::Log, {a})), db);
    return mk_mul(self, mk_add(mk_mul(db, mk_call(Func::Log, {a})), mk_div(mk_mul(b, da), a)));
}

// Printing precedence: 1 +-, 2 */, 3 unary -, 4 ^, 5 atoms.
int prec(const Expr& e) {
    switch (e.kind()) {
        case Expr::Kind::Add:
        case Expr::Kind::Sub: return 1;
        case Expr::Kind::Mul:
        case Expr::Kind::Div: return 2;
        case Expr::Kind::Neg: return 3;
        case Expr::Kind::Pow: return 4;
        case Expr::Kind::Const: return e.value() < 0.0 || std::signbit(e.value()) ? 3 : 5;
        default: return 5;
    }
}

std::string number_str(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string wrap(const Expr& e, bool paren) { return paren ? "(" + e.str() + ")" : e.str(); }

class Parser {
public:
    Parser(std::string_view text, const Scope& scope) : s_(text), scope_(scope) {}

    Expr parse_all() {
        skip();
        if (pos_ >= s_.size()) throw Error(ErrorKind::SyntaxError, "empty expression", pos_);
        Expr e = parse_sum();
        skip();
        if (pos_ < s_.size()) throw Error(ErrorKind::SyntaxError, "unexpected '" + std::string(1, s_[pos_]) + "'", pos_);
        return e;
    }

private:
    std::string_view s_;
    const Scope& scope_;
    std::size_t pos_ = 0;

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool peek(char c) {
        skip();
        return pos_ < s_.size() && s_[pos_] == c;
    }
    void expect(char c) {
        if (!peek(c)) {
            const std::string got = pos_ < s_.size() ? std::string("'") + s_[pos_] + "'" : "end of input";
            throw Error(ErrorKind::SyntaxError, std::string("expected '") + c + "', got " + got, pos_);
        }
        ++pos_;
    }

    Expr parse_sum() {
        Expr e = parse_product();
        while (true) {
            if (peek('+')) {
                ++pos_;
                e = Expr::binary(Expr::Kind::Add, e, parse_product());
            } else if (peek('-')) {
                ++pos_;
                e = Expr::binary(Expr::Kind::Sub, e, parse_product());
            } else {
                return e;
            }
        }
    }

    Expr parse_product() {
        Expr e = parse_unary();
        while (true) {
            if (peek('*')) {
                ++pos_;
                e = Expr::binary(Expr::Kind::Mul, e, parse_unary());
            } else if (peek('/')) {
                ++pos_;
                e = Expr::binary(Expr::Kind::Div, e, parse_unary());
            } else {
                return e;
            }
        }
    }

    Expr parse_unary() {
        if (peek('-')) {
            ++pos_;
            return Expr::neg(parse_unary());
        }
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_primary();
        if (peek('^')) {
            ++pos_;
            return Expr::binary(Expr::Kind::Pow, base, parse_unary());
        }
        return base;
    }

    Expr parse_primary() {
        skip();
        if (pos_ >= s_.size()) throw Error(ErrorKind::SyntaxError, "unexpected end of input", pos_);
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = parse_sum();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        throw Error(ErrorKind::SyntaxError, std::string("unexpected '") + c + "'", pos_);
    }

    Expr parse_number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        };
        digits();
        if (pos_ < s_.size() && s_[pos_] == '.') {
            ++pos_;
            digits();
        }
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t q = pos_ + 1;
            if (q < s_.size() && (s_[q] == '+' || s_[q] == '-')) ++q;
            if (q < s_.size() && std::isdigit(static_cast<unsigned char>(s_[q]))) {
                pos_ = q;
                digits();
            }
        }
        double v = 0.0;
        const auto res = std::from_chars(s_.data() + start, s_.data() + pos_, v);
        if (res.ec != std::errc() || res.ptr != s_.data() + pos_)
            throw Error(ErrorKind::SyntaxError, "malformed or out-of-range number", start);
        return Expr::constant(v);
    }

    Expr parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        const std::string_view name = s_.substr(start, pos_ - start);

        if (auto f = lookup_func(name)) {
            if (!peek('(')) throw Error(ErrorKind::SyntaxError, "expected '(' after " + std::string(name), pos_);
            ++pos_;
            std::vector<Expr> args;
            if (!peek(')')) {
                args.push_back(parse_sum());
                while (peek(',')) {
                    ++pos_;
                    args.push_back(parse_sum());
                }
            }
            expect(')');
            if (static_cast<int>(args.size()) != arity(*f))
                throw Error(ErrorKind::ArityError,
                            std::string(name) + " takes " + std::to_string(arity(*f)) + " argument(s), got " +
                                std::to_string(args.size()),
                            start);
            return Expr::call(*f, std::move(args));
        }
        if (name == "pi") return Expr::constant(std::numbers::pi);
        if (name == "e") return Expr::constant(std::numbers::e);
        if (name == "t" && scope_.allow_t) return Expr::variable(Var::t());
        if (scope_.scalar && name == *scope_.scalar) return Expr::variable(Var::scalar());
        if (name.size() >= 2 && name[0] == 'x' && name[1] != '0') {
            int k = 0;
            const auto res = std::from_chars(name.data() + 1, name.data() + name.size(), k);
            if (res.ec == std::errc() && res.ptr == name.data() + name.size() && k >= 1 && k <= scope_.n)
                return Expr::variable(Var::x(k - 1));
        }
        throw Error(ErrorKind::UnknownIdentifier, "unknown identifier '" + std::string(name) + "'", start);
    }
};

} // namespace

double Expr::eval(const EvalPoint& p) const {
    const Node& n = *node_;
    switch (n.kind) {
        case Kind::Const: return n.value;
        case Kind::Time: return p.t;
        case Kind::State:
            if (n.index >= p.n) throw Error(ErrorKind::ShapeMismatch, "state variable x" + std::to_string(n.index + 1) + " not supplied");
            return p.x[n.index];
        case Kind::Scalar: return p.s;
        case Kind::Neg: return -n.args[0].eval(p);
        case Kind::Add: return n.args[0].eval(p) + n.args[1].eval(p);
        case Kind::Sub: return n.args[0].eval(p) - n.args[1].eval(p);
        case Kind::Mul: return n.args[0].eval(p) * n.args[1].eval(p);
        case Kind::Div: {
            const double a = n.args[0].eval(p), b = n.args[1].eval(p);
            if (b == 0.0) throw Error(ErrorKind::EvalDomainError, "division by zero");
            return a / b;
        }
        case Kind::Pow: return checked_pow(n.args[0].eval(p), n.args[1].eval(p));
        case Kind::Call: {
            const double a = n.args[0].eval(p);
            switch (n.fn) {
                case Func::Sin: return std::sin(a);
                case Func::Cos: return std::cos(a);
                case Func::Tan: return std::tan(a);
                case Func::Exp: return std::exp(a);
                case Func::Log:
                    if (!(a > 0.0)) throw Error(ErrorKind::EvalDomainError, "log of a non-positive value");
                    return std::log(a);
                case Func::Sqrt:
                    if (a < 0.0) throw Error(ErrorKind::EvalDomainError, "sqrt of a negative value");
                    return std::sqrt(a);
                case Func::Abs: return std::abs(a);
                case Func::Sgn: return sgn(a);
                case Func::Pow: return checked_pow(a, n.args[1].eval(p));
                case Func::Min: return std::min(a, n.args[1].eval(p));
                case Func::Max: return std::max(a, n.args[1].eval(p));
            }
        }
    }
    return 0.0;
}

double Expr::eval(double t, const Vec& x) const {
    return eval(EvalPoint{t, x.data(), static_cast<int>(x.size()), 0.0});
}

double Expr::eval_scalar(double s, double t) const { return eval(EvalPoint{t, nullptr, 0, s}); }

Expr Expr::diff(Var v) const {
    const Node& n = *node_;
    switch (n.kind) {
        case Kind::Const: return constant(0.0);
        case Kind::Time: return constant(v.kind == Var::Kind::Time ? 1.0 : 0.0);
        case Kind::State: return constant(v.kind == Var::Kind::State && v.index == n.index ? 1.0 : 0.0);
        case Kind::Scalar: return constant(v.kind == Var::Kind::Scalar ? 1.0 : 0.0);
        case Kind::Neg: return mk_neg(n.args[0].diff(v));
        case Kind::Add: return mk_add(n.args[0].diff(v), n.args[1].diff(v));
        case Kind::Sub: return mk_sub(n.args[0].diff(v), n.args[1].diff(v));
        case Kind::Mul: {
            const Expr &a = n.args[0], &b = n.args[1];
            return mk_add(mk_mul(a.diff(v), b), mk_mul(a, b.diff(v)));
        }
        case Kind::Div: {
            const Expr &a = n.args[0], &b = n.args[1];
            const Expr num = mk_sub(mk_mul(a.diff(v), b), mk_mul(a, b.diff(v)));
            return mk_div(num, mk_pow(b, constant(2.0)));
        }
        case Kind::Pow: return diff_pow(n.args[0], n.args[1], v);
        case Kind::Call: {
            const Expr& a = n.args[0];
            const Expr da = a.diff(v);
            switch (n.fn) {
                case Func::Sin: return mk_mul(mk_call(Func::Cos, {a}), da);
                case Func::Cos: return mk_mul(mk_neg(mk_call(Func::Sin, {a})), da);
                case Func::Tan: return mk_div(da, mk_pow(mk_call(Func::Cos, {a}), constant(2.0)));
                case Func::Exp: return mk_mul(mk_call(Func::Exp, {a}), da);
                case Func::Log: return mk_div(da, a);
                case Func::Sqrt: return mk_div(da, mk_mul(constant(2.0), mk_call(Func::Sqrt, {a})));
                case Func::Abs: return mk_mul(mk_call(Func::Sgn, {a}), da);
                case Func::Sgn: return constant(0.0);
                case Func::Pow: return diff_pow(a, n.args[1], v);
                case Func::Min:
                case Func::Max: {
                    const Expr& b = n.args[1];
                    const Expr db = b.diff(v);
                    const Expr jump = mk_mul(mk_call(Func::Sgn, {mk_sub(a, b)}), mk_sub(da, db));
                    const Expr sum = mk_add(da, db);
                    return mk_div(n.fn == Func::Max ? mk_add(sum, jump) : mk_sub(sum, jump), constant(2.0));
                }
            }
        }
    }
    return constant(0.0);
}

std::string Expr::str() const {
    const Node& n = *node_;
    switch (n.kind) {
        case Kind::Const:
            if (std::signbit(n.value)) return "-" + number_str(-n.value);
            return number_str(n.value);
        case Kind::Time: return "t";
        case Kind::State: return "x" + std::to_string(n.index + 1);
        case Kind::Scalar: return "v";
        case Kind::Neg: return "-" + wrap(n.args[0], prec(n.args[0]) < 3);
        case Kind::Add:
        case Kind::Sub: {
            const char* op = n.kind == Kind::Add ? " + " : " - ";
            return wrap(n.args[0], prec(n.args[0]) < 1) + op + wrap(n.args[1], prec(n.args[1]) <= 1);
        }
        case Kind::Mul:
        case Kind::Div: {
            const char* op = n.kind == Kind::Mul ? "*" : "/";
            return wrap(n.args[0], prec(n.args[0]) < 2) + op + wrap(n.args[1], prec(n.args[1]) <= 2);
        }
        case Kind::Pow: return wrap(n.args[0], prec(n.args[0]) < 5) + "^" + wrap(n.args[1], prec(n.args[1]) < 3);
        case Kind::Call: {
            std::string s = std::string(func_name(n.fn)) + "(";
            for (std::size_t i = 0; i < n.args.size(); ++i) s += (i ? ", " : "") + n.args[i].str();
            return s + ")";
        }
    }
    return "";
}

bool Expr::uses(Var::Kind k) const {
    const Node& n = *node_;
    if (n.kind == Kind::Time) return k == Var::Kind::Time;
    if (n.kind == Kind::State) return k == Var::Kind::State;
    if (n.kind == Kind::Scalar) return k == Var::Kind::Scalar;
    for (const auto& a : n.args)
        if (a.uses(k)) return true;
    return false;
}

int Expr::max_state_index() const {
    const Node& n = *node_;
    int best = n.kind == Kind::State ? n.index : -1;
    for (const auto& a : n.args) best = std::max(best, a.max_state_index());
    return best;
}

bool Expr::same(const Expr& o) const {
    const Node &a = *node_, &b = *o.node_;
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Kind::Const: return a.value == b.value;
        case Kind::State: return a.index == b.index;
        case Kind::Call:
            if (a.fn != b.fn) return false;
            break;
        default: break;
    }
    if (a.args.size() != b.args.size()) return false;
    for (std::size_t i = 0; i < a.args.size(); ++i)
        if (!a.args[i].same(b.args[i])) return false;
    return true;
}

Expr parse_expr(std::string_view text, int n) { return parse_expr(text, Scope::state(n)); }

Expr parse_expr(std::string_view text, const Scope& scope) { return Parser(text, scope).parse_all(); }

std::vector<std::vector<Expr>> jacobian(const std::vector<Expr>& fs, int n) {
    std::vector<std::vector<Expr>> J(fs.size());
    for (std::size_t i = 0; i < fs.size(); ++i)
        for (int j = 0; j < n; ++j) J[i].push_back(fs[i].diff(Var::x(j)));
    return J;
}

double Predicate::gap(const EvalPoint& p) const { return lhs.eval(p) - rhs.eval(p); }

bool Predicate::holds(const EvalPoint& p) const {
    double l = 0.0, r = 0.0;
    try {
        l = lhs.eval(p);
        r = rhs.eval(p);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::EvalDomainError) return false;
        throw;
    }
    switch (op) {
        case Op::Lt: return l < r;
        case Op::Le: return l <= r;
        case Op::Gt: return l > r;
        case Op::Ge: return l >= r;
        case Op::Ne: return l != r;
        case Op::Eq: return l == r;
    }
    return false;
}

bool Predicate::holds(double t, const Vec& x) const {
    return holds(EvalPoint{t, x.data(), static_cast<int>(x.size()), 0.0});
}

Predicate parse_predicate(std::string_view text, const Scope& scope) {
    int depth = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (depth != 0) continue;
        Predicate::Op op;
        std::size_t len = 1;
        const char nx = i + 1 < text.size() ? text[i + 1] : '\0';
        if (c == '<') op = nx == '=' ? (len = 2, Predicate::Op::Le) : Predicate::Op::Lt;
        else if (c == '>') op = nx == '=' ? (len = 2, Predicate::Op::Ge) : Predicate::Op::Gt;
        else if (c == '!' && nx == '=') op = Predicate::Op::Ne, len = 2;
        else if (c == '=' && nx == '=') op = Predicate::Op::Eq, len = 2;
        else continue;
        Predicate p;
        p.op = op;
        p.text = std::string(text);
        try {
            p.lhs = parse_expr(text.substr(0, i), scope);
        } catch (const Error& e) {
            throw Error(e.kind(), std::string(e.what()) + " in predicate '" + p.text + "'", e.offset());
        }
        try {
            p.rhs = parse_expr(text.substr(i + len), scope);
        } catch (const Error& e) {
            const std::size_t off = e.offset() == Error::npos ? Error::npos : e.offset() + i + len;
            throw Error(e.kind(), std::string(e.what()) + " in predicate '" + p.text + "'", off);
        }
        return p;
    }
    throw Error(ErrorKind::SyntaxError, "predicate needs one of < <= > >= != ==: '" + std::string(text) + "'", 0);
}

} // namespace daepencil
