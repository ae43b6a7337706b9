// Command-line front end: analyze, solve, certify, selftest.
// Exit codes: 0 ok, 1 selftest failure, 2 input errors, 3 IndexTooHigh, 4 BlowUp,
// 5 domain/constraint failure, 6 refused start (inconsistent point or missing free component).

#include "acceptance/acceptance.hpp"

#include "daepencil/certificates.hpp"
#include "daepencil/error.hpp"
#include "daepencil/integrator.hpp"
#include "daepencil/problem.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>

using namespace daepencil;

namespace {

int exit_code_for(ErrorKind k) {
    switch (k) {
        case ErrorKind::IndexTooHigh: return 3;
        case ErrorKind::InconsistentStart:
        case ErrorKind::MissingFreeComponent: return 6;
        case ErrorKind::PhiSingular:
        case ErrorKind::NoConvergence: return 5;
        default: return 2;
    }
}

int exit_code_for(VerdictKind k) {
    switch (k) {
        case VerdictKind::GlobalToHorizon: return 0;
        case VerdictKind::BlowUp: return 4;
        default: return 5;
    }
}

Json meta(std::uint64_t seed, Json tolerances) {
    return Json{{"version", DAEPENCIL_VERSION}, {"seed", seed}, {"tolerances", std::move(tolerances)}};
}

Json integrator_json(const IntegratorOptions& o) {
    Json j{{"rtol", o.rtol},
           {"atol", o.atol},
           {"consistency_tol", o.consistency_tol},
           {"blowup_norm", o.blowup_norm},
           {"h_min_rel", o.h_min_rel},
           {"newton_tol", o.newton.newton_tol}};
    if (o.fixed_step) j["fixed_step"] = *o.fixed_step;
    return j;
}

ReducedSystem reduce(const ProblemFile& pf) {
    DecomposeOptions opts;
    opts.tol = pf.rank_tol;
    return ReducedSystem(pf.dae, decompose(pf.dae.pencil, opts));
}

void write_json(const Json& j, const std::string& path) {
    if (path.empty()) {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::ResourceError, "cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

int cmd_analyze(const std::string& file) {
    ProblemFile pf = load_problem(file);
    pf.rank_tol.seed = seed_from_env(pf.rank_tol.seed);
    Json report = analyze_report(pf.dae.pencil, pf.rank_tol);
    report["meta"] = meta(pf.rank_tol.seed, Json{{"rank_rel", pf.rank_tol.rel_for(pf.dae.m(), pf.dae.n())}});
    std::cout << report.dump(2) << "\n";
    return 0;
}

struct SolveArgs {
    std::string file, out, report;
    std::optional<double> horizon;
    bool project = false;
};

int cmd_solve(const SolveArgs& a) {
    ProblemFile pf = load_problem(a.file);
    pf.rank_tol.seed = seed_from_env(pf.rank_tol.seed);
    if (!pf.x0) throw Error(ErrorKind::InvalidSpec, "problem has no initial point");
    const ReducedSystem rs = reduce(pf);
    const double t0 = pf.t0.value_or(pf.dae.t_plus);
    Vec x0 = *pf.x0;
    if (a.project) {
        Components c = rs.split(x0);
        if (rs.dims().s2 > 0) {
            if (pf.phi_s2.empty())
                throw Error(ErrorKind::MissingFreeComponent, "--project needs phi_s2 for the free component S2 x");
            c.s2 = pf.phi_s2.coords(rs, t0);
        }
        x0 = consistency_project(rs, t0, rs.join(c), c.p2, pf.integrator.newton).x;
    }
    const double horizon = a.horizon.value_or(pf.horizon);
    const Trajectory traj = integrate(rs, t0, x0, pf.phi_s2, horizon, pf.integrator);

    if (!a.out.empty()) {
        std::ofstream out(a.out);
        if (!out) throw Error(ErrorKind::ResourceError, "cannot write '" + a.out + "'");
        write_csv(out, traj);
    }
    Json report = solve_report(traj, pf.bounds);
    report["t0"] = t0;
    report["horizon"] = horizon;
    report["projected_start"] = a.project;
    report["meta"] = meta(pf.rank_tol.seed, integrator_json(pf.integrator));
    write_json(report, a.report);
    return exit_code_for(traj.verdict.kind);
}

struct CertifyArgs {
    std::string file, report;
    std::optional<std::uint64_t> seed;
    std::optional<int> count;
    int jobs = 1;
};

int cmd_certify(const CertifyArgs& a) {
    const ProblemFile pf = load_problem(a.file);
    if (!pf.certificates) throw Error(ErrorKind::InvalidSpec, "problem has no certificates block");
    CertificateSpec spec = *pf.certificates;
    spec.sampler.seed = a.seed.value_or(seed_from_env(spec.sampler.seed));
    if (a.count) spec.sampler.count = *a.count;
    spec.sampler.jobs = a.jobs;
    const ReducedSystem rs = reduce(pf);
    Json report = to_json(certify(rs, spec));
    report["meta"] = meta(spec.sampler.seed, Json{{"count", spec.sampler.count}, {"t_span", spec.sampler.t_span}});
    write_json(report, a.report);
    return 0;
}

int cmd_selftest(const acceptance::Options& o) {
    return acceptance::print(acceptance::run(o)) == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semilinear DAE analysis: pencil structure, integration, certificates"};
    app.set_version_flag("--version", std::string(DAEPENCIL_VERSION));
    app.require_subcommand(1);

    std::string analyze_file;
    auto* analyze = app.add_subcommand("analyze", "Classify the pencil and report its decomposition");
    analyze->add_option("file", analyze_file, "Problem file (JSON)")->required();

    SolveArgs solve_args;
    auto* solve = app.add_subcommand("solve", "Integrate from the problem's initial point");
    solve->add_option("file", solve_args.file, "Problem file (JSON)")->required();
    solve->add_option("--horizon", solve_args.horizon, "Override the horizon length");
    solve->add_option("--out", solve_args.out, "Trajectory CSV");
    solve->add_option("--report", solve_args.report, "JSON report path (stdout if omitted)");
    solve->add_flag("--project", solve_args.project, "Project x0 onto the consistency manifold first");

    CertifyArgs certify_args;
    auto* certify_cmd = app.add_subcommand("certify", "Check the problem's certificates on samples");
    certify_cmd->add_option("file", certify_args.file, "Problem file (JSON)")->required();
    certify_cmd->add_option("--seed", certify_args.seed, "Sampler seed (default: DAE_PENCIL_SEED or the file's)");
    certify_cmd->add_option("--count", certify_args.count, "Samples per region");
    certify_cmd->add_option("--jobs", certify_args.jobs, "Sampling threads")->check(CLI::PositiveNumber);
    certify_cmd->add_option("--report", certify_args.report, "JSON report path (stdout if omitted)");

    acceptance::Options self_opts;
    self_opts.problem_dir = acceptance::default_problem_dir();
    auto* selftest = app.add_subcommand("selftest", "Run the acceptance suite");
    selftest->add_option("--jobs", self_opts.jobs, "Sampling threads")->check(CLI::PositiveNumber);
    selftest->add_option("--rtol", self_opts.rtol, "Integrator rtol for every trajectory criterion");
    selftest->add_option("--problem-dir", self_opts.problem_dir, "Directory with the example problem files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*analyze) return cmd_analyze(analyze_file);
        if (*solve) return cmd_solve(solve_args);
        if (*certify_cmd) return cmd_certify(certify_args);
        if (*selftest) return cmd_selftest(self_opts);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    }
    return 2;
}
