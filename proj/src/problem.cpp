#include "daepencil/problem.hpp"

#include "daepencil/error.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace daepencil {

namespace {

using nlohmann::json;

std::string line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') ++line, col = 1;
        else ++col;
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

[[noreturn]] void bad(const std::string& path, const std::string& what) {
    throw Error(ErrorKind::InvalidSpec, path + ": " + what);
}

const json& need(const json& j, const char* key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) bad(path, std::string("missing key \"") + key + "\"");
    return j.at(key);
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) bad(path, "expected a number");
    return j.get<double>();
}

std::vector<double> numbers(const json& j, const std::string& path) {
    if (!j.is_array()) bad(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<std::string> strings(const json& j, const std::string& path) {
    if (!j.is_array()) bad(path, "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_string()) bad(path + "[" + std::to_string(i) + "]", "expected a string");
        out.push_back(j[i].get<std::string>());
    }
    return out;
}

// {"rows": r, "cols": c, "data": [row-major]} or a nested array of rows.
Mat matrix(const json& j, const std::string& path) {
    if (j.is_array()) {
        const auto rows = static_cast<Eigen::Index>(j.size());
        Eigen::Index cols = rows == 0 ? 0 : static_cast<Eigen::Index>(j[0].size());
        Mat M(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
            const auto row = numbers(j[r], path + "[" + std::to_string(r) + "]");
            if (static_cast<Eigen::Index>(row.size()) != cols)
                throw Error(ErrorKind::ShapeMismatch, path + ": ragged rows");
            for (Eigen::Index c = 0; c < cols; ++c) M(r, c) = row[c];
        }
        return M;
    }
    const double rows = number(need(j, "rows", path), path + ".rows");
    const double cols = number(need(j, "cols", path), path + ".cols");
    if (rows < 0 || cols < 0 || rows != std::floor(rows) || cols != std::floor(cols))
        bad(path, "rows and cols must be non-negative integers");
    const auto data = numbers(need(j, "data", path), path + ".data");
    if (data.size() != static_cast<std::size_t>(rows * cols))
        throw Error(ErrorKind::ShapeMismatch, path + ": data has " + std::to_string(data.size()) + " entries, expected " +
                                                  std::to_string(static_cast<long>(rows * cols)));
    Mat M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < M.rows(); ++r)
        for (Eigen::Index c = 0; c < M.cols(); ++c) M(r, c) = data[static_cast<std::size_t>(r * M.cols() + c)];
    return M;
}

// Re-throws parser errors with the key path in front of the byte offset.
template <class Fn>
auto located(const std::string& path, const std::string& text, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        if (e.offset() == Error::npos) throw;
        throw Error(e.kind(), path + " (\"" + text + "\"), offset " + std::to_string(e.offset()) + ": " + e.what(),
                    e.offset());
    }
}

Expr expr_at(const json& j, const std::string& path, const Scope& scope) {
    if (!j.is_string()) bad(path, "expected an expression string");
    const std::string s = j.get<std::string>();
    return located(path, s, [&] { return parse_expr(s, scope); });
}

std::vector<Predicate> predicates(const json& j, const std::string& path, const Scope& scope) {
    std::vector<Predicate> out;
    const auto texts = strings(j, path);
    for (std::size_t i = 0; i < texts.size(); ++i)
        out.push_back(located(path + "[" + std::to_string(i) + "]", texts[i], [&] { return parse_predicate(texts[i], scope); }));
    return out;
}

Region region(const json& j, const std::string& path, int n) {
    Region r;
    if (j.is_null()) return r;
    if (!j.is_object()) bad(path, "expected an object");
    const Scope sc = Scope::state(n);
    if (j.contains("diff")) r.diff = predicates(j["diff"], path + ".diff", sc);
    if (j.contains("free")) r.free = predicates(j["free"], path + ".free", sc);
    if (j.contains("alg")) r.alg = predicates(j["alg"], path + ".alg", sc);
    if (j.contains("scale")) r.scale = number(j["scale"], path + ".scale");
    if (j.contains("R")) r.R = number(j["R"], path + ".R");
    if (j.contains("guess")) r.guess = numbers(j["guess"], path + ".guess");
    if (!(r.scale > 0)) bad(path + ".scale", "must be positive");
    return r;
}

LyapunovCert lyapunov(const json& j, const std::string& path, int n) {
    LyapunovCert c;
    c.name = j.value("name", path);
    c.region = region(j.value("region", json()), path + ".region", n);
    c.V = expr_at(need(j, "V", path), path + ".V", Scope::state(n));
    const Scope vs = Scope::scalar_only("v", true);
    if (j.contains("chi")) c.chi = expr_at(j["chi"], path + ".chi", vs);
    if (j.contains("k")) c.k = expr_at(j["k"], path + ".k", Scope{0, true, std::nullopt});
    if (j.contains("U")) c.U = expr_at(j["U"], path + ".U", Scope::scalar_only("v", false));
    const bool product = c.k.has_value() && c.U.has_value();
    if (c.chi.has_value() == product || (c.k.has_value() != c.U.has_value()))
        bad(path, "give either \"chi\" or both \"k\" and \"U\"");
    return c;
}

CertificateSpec certificate_spec(const json& j, int n) {
    const std::string path = "certificates";
    if (!j.is_object()) bad(path, "expected an object");
    CertificateSpec spec;
    if (j.contains("global")) spec.global = lyapunov(j["global"], path + ".global", n);
    if (j.contains("blowup")) spec.blowup = lyapunov(j["blowup"], path + ".blowup", n);
    if (j.contains("invariance")) {
        const json& ji = j["invariance"];
        const std::string p = path + ".invariance";
        InvarianceCert ic;
        ic.region = region(ji.value("region", json()), p + ".region", n);
        ic.W = expr_at(need(ji, "W", p), p + ".W", Scope::state(n));
        ic.Kr = predicates(need(ji, "Kr", p), p + ".Kr", Scope{n, true, std::string("r")});
        if (ji.contains("r_grid")) ic.r_grid = numbers(ji["r_grid"], p + ".r_grid");
        if (ic.r_grid.empty()) bad(p + ".r_grid", "needs at least one margin");
        spec.invariance = std::move(ic);
    }
    if (j.contains("bounded")) {
        const json& jb = j["bounded"];
        const std::string p = path + ".bounded";
        BoundedManifoldCert bc;
        bc.M_bound = number(need(jb, "M_bound", p), p + ".M_bound");
        bc.region = region(jb.value("region", json()), p + ".region", n);
        spec.bounded = std::move(bc);
    }
    if (j.contains("sampler")) {
        const json& js = j["sampler"];
        if (js.contains("count")) spec.sampler.count = static_cast<int>(number(js["count"], path + ".sampler.count"));
        if (js.contains("seed")) spec.sampler.seed = static_cast<std::uint64_t>(number(js["seed"], path + ".sampler.seed"));
        if (js.contains("jobs")) spec.sampler.jobs = static_cast<int>(number(js["jobs"], path + ".sampler.jobs"));
        if (js.contains("t_span")) spec.sampler.t_span = number(js["t_span"], path + ".sampler.t_span");
    }
    if (!spec.global && !spec.blowup && !spec.invariance && !spec.bounded) bad(path, "declares no checks");
    if (spec.sampler.count <= 0) bad(path + ".sampler.count", "must be positive");
    return spec;
}

void integrator_overrides(const json& j, IntegratorOptions& o) {
    const std::string p = "integrator";
    if (!j.is_object()) bad(p, "expected an object");
    auto num = [&](const char* key, double& dst) {
        if (j.contains(key)) dst = number(j[key], p + "." + key);
    };
    num("rtol", o.rtol);
    num("atol", o.atol);
    num("consistency_tol", o.consistency_tol);
    num("blowup_norm", o.blowup_norm);
    num("h_min_rel", o.h_min_rel);
    num("h_max", o.h_max);
    num("h0", o.h0);
    num("newton_tol", o.newton.newton_tol);
    num("max_condition", o.newton.max_condition);
    if (j.contains("fixed_step")) o.fixed_step = number(j["fixed_step"], p + ".fixed_step");
    if (j.contains("max_steps")) o.max_steps = static_cast<int>(number(j["max_steps"], p + ".max_steps"));
    if (j.contains("post_trigger_steps"))
        o.post_trigger_steps = static_cast<int>(number(j["post_trigger_steps"], p + ".post_trigger_steps"));
    if (!(o.rtol > 0 && o.atol > 0 && o.consistency_tol > 0)) bad(p, "tolerances must be positive");
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vec_json(const Vec& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_or_null(v(i)));
    return a;
}

} // namespace

ProblemFile parse_problem(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::SyntaxError, "malformed JSON at " + line_col(text, e.byte == 0 ? 0 : e.byte - 1) + ": " +
                                                e.what(), e.byte);
    }
    if (!j.is_object()) bad("<root>", "expected an object");

    ProblemFile pf;
    pf.name = j.value("name", std::string());
    const Mat A = matrix(need(j, "A", "<root>"), "A");
    const Mat B = matrix(need(j, "B", "<root>"), "B");
    Pencil pencil(A, B);
    const int n = static_cast<int>(pencil.cols());

    SemilinearDAE dae;
    dae.pencil = std::move(pencil);
    const auto f = strings(need(j, "f", "<root>"), "f");
    if (static_cast<Eigen::Index>(f.size()) != dae.pencil.rows())
        throw Error(ErrorKind::ShapeMismatch, "f: " + std::to_string(f.size()) + " components for " +
                                                  std::to_string(dae.pencil.rows()) + " rows of A");
    for (std::size_t i = 0; i < f.size(); ++i)
        dae.f.push_back(located("f[" + std::to_string(i) + "]", f[i], [&] { return parse_expr(f[i], n); }));
    if (j.contains("domain")) dae.domain = predicates(j["domain"], "domain", Scope::state(n));
    if (j.contains("t_plus")) dae.t_plus = number(j["t_plus"], "t_plus");
    dae.fd_jacobian = j.value("fd_jacobian", false);
    dae.validate();
    pf.dae = std::move(dae);

    if (j.contains("phi_s2")) {
        const auto texts = strings(j["phi_s2"], "phi_s2");
        for (std::size_t i = 0; i < texts.size(); ++i)
            pf.phi_s2.exprs.push_back(located("phi_s2[" + std::to_string(i) + "]", texts[i],
                                              [&] { return parse_expr(texts[i], Scope{0, true, std::nullopt}); }));
    }
    if (j.contains("initial")) {
        const json& ji = j["initial"];
        pf.t0 = ji.contains("t0") ? number(ji["t0"], "initial.t0") : pf.dae.t_plus;
        const auto x0 = numbers(need(ji, "x0", "initial"), "initial.x0");
        if (static_cast<int>(x0.size()) != n)
            throw Error(ErrorKind::ShapeMismatch, "initial.x0 has " + std::to_string(x0.size()) + " entries, expected " +
                                                      std::to_string(n));
        pf.x0 = Eigen::Map<const Vec>(x0.data(), n);
        if (*pf.t0 < pf.dae.t_plus) bad("initial.t0", "lies before t_plus");
    }
    if (j.contains("horizon")) pf.horizon = number(j["horizon"], "horizon");
    if (j.contains("bounds")) pf.bounds = predicates(j["bounds"], "bounds", Scope::state(n));
    if (j.contains("certificates")) pf.certificates = certificate_spec(j["certificates"], n);
    if (j.contains("integrator")) integrator_overrides(j["integrator"], pf.integrator);
    if (j.contains("rank_rel_tol")) pf.rank_tol.rel = number(j["rank_rel_tol"], "rank_rel_tol");
    return pf;
}

ProblemFile load_problem(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::ResourceError, "cannot open problem file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_problem(ss.str());
    } catch (const Error& e) {
        throw Error(e.kind(), path + ": " + e.what(), e.offset());
    }
}

std::uint64_t seed_from_env(std::uint64_t fallback) {
    const char* s = std::getenv("DAE_PENCIL_SEED");
    if (!s || !*s) return fallback;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s, &end, 10);
    return (end && *end == '\0') ? static_cast<std::uint64_t>(v) : fallback;
}

Json to_json(const Classification& c) {
    Json j;
    j["kind"] = to_string(c.kind);
    j["rank"] = c.rank;
    j["defect"] = c.defect;
    j["dual_defect"] = c.dual_defect;
    j["total_defect"] = c.total_defect;
    j["index"] = c.index ? Json(to_string(*c.index)) : Json(nullptr);
    return j;
}

Json to_json(const MinimalIndices& mi) { return Json{{"primal", mi.primal}, {"dual", mi.dual}}; }

Json to_json(const IdentityReport& r) {
    return Json{{"idempotence", r.idempotence},     {"complementarity", r.complementarity},
                {"intertwining", r.intertwining},   {"annihilation", r.annihilation},
                {"semi_inverse", r.semi_inverse},   {"block_zero", r.block_zero},
                {"max", r.max()}};
}

Json to_json(const SubspaceDims& d) { return Json{{"s1", d.s1}, {"s2", d.s2}, {"r1", d.r1}, {"r2", d.r2}}; }

Json to_json(const Verdict& v) {
    Json j;
    j["kind"] = to_string(v.kind);
    j["t"] = v.t;
    j["T_est"] = v.T_est ? Json(*v.T_est) : Json(nullptr);
    if (v.kind == VerdictKind::BlowUp) {
        j["gamma"] = v.gamma;
        j["weak"] = v.weak;
        j["norm_trigger"] = v.norm_trigger;
        j["step_trigger"] = v.step_trigger;
    }
    if (v.kind == VerdictKind::ConstraintFailure) j["residual"] = v.residual;
    if (!v.witness.empty()) j["witness"] = v.witness;
    return j;
}

Json to_json(const CertificateReport& r) {
    Json j;
    j["check"] = r.check;
    j["name"] = r.name;
    j["outcome"] = to_string(r.outcome);
    if (r.witness) {
        j["witness"] = Json{{"t", r.witness->t},
                            {"x", vec_json(r.witness->x)},
                            {"lhs", number_or_null(r.witness->lhs)},
                            {"rhs", number_or_null(r.witness->rhs)},
                            {"inequality", r.witness->inequality}};
    }
    if (!r.reason.empty()) j["reason"] = r.reason;
    j["margin"] = number_or_null(r.margin);
    j["samples_drawn"] = r.samples_drawn;
    j["samples_used"] = r.samples_used;
    Json extras = Json::object();
    for (const auto& [k, v] : r.extras) extras[k] = number_or_null(v);
    j["extras"] = extras;
    j["notes"] = r.notes;
    return j;
}

Json to_json(const CertifyResult& r) {
    Json j;
    j["verdict"] = to_string(r.verdict);
    Json reps = Json::array();
    for (const auto& rep : r.reports) reps.push_back(to_json(rep));
    j["reports"] = reps;
    return j;
}

Json analyze_report(const Pencil& p, const RankTolerance& tol) {
    Json j;
    const Classification c = classify(p, tol);
    j["classification"] = to_json(c);
    j["minimal_indices"] = to_json(minimal_indices(p, tol));
    DecomposeOptions opts;
    opts.tol = tol;
    const Decomposition d = decompose(p, opts);
    j["dims"] = Json{{"x", to_json(d.xdims)}, {"y", to_json(d.ydims)}};
    j["identity_residuals"] = to_json(verify_decomposition(d, p));
    j["index_verdict"] = c.kind == PencilKind::Regular ? to_string(*c.index) : std::string("regular block index <= 1");
    return j;
}

Json solve_report(const Trajectory& traj, const std::vector<Predicate>& bounds) {
    Json j;
    j["verdict"] = to_json(traj.verdict);
    double sup_x = 0.0, sup_diff = 0.0, max_ae1 = 0.0, max_ae2 = 0.0;
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        sup_x = std::max(sup_x, traj.states[i].norm());
        if (i < traj.diff_norms.size()) sup_diff = std::max(sup_diff, traj.diff_norms[i]);
        max_ae1 = std::max(max_ae1, traj.residuals[i].ae1);
        max_ae2 = std::max(max_ae2, traj.residuals[i].ae2);
    }
    j["sup_norm"] = number_or_null(sup_x);
    j["sup_diff_norm"] = number_or_null(sup_diff);
    j["residual_max"] = Json{{"ae1", max_ae1}, {"ae2", max_ae2}};
    j["steps"] = traj.times.size();
    j["rejected_steps"] = traj.rejected_steps;
    const LagrangeReport lr = lagrange_report(traj, bounds);
    j["lagrange"] = to_string(lr.verdict);
    if (lr.first_violation) j["first_bound_violation_t"] = traj.times[*lr.first_violation];
    return j;
}

} // namespace daepencil
