#pragma once

#include "daepencil/certificates.hpp"
#include "daepencil/integrator.hpp"
#include "daepencil/kronecker.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace daepencil {

/// A parsed problem file. Errors carry a "line L, column C" or a key path in the message.
struct ProblemFile {
    std::string name;
    SemilinearDAE dae;
    FreeComponent phi_s2;
    std::optional<double> t0;
    std::optional<Vec> x0;
    double horizon = 10.0;
    std::vector<Predicate> bounds; ///< Lagrange-stability bounds on x
    std::optional<CertificateSpec> certificates;
    IntegratorOptions integrator;
    RankTolerance rank_tol;
};

ProblemFile parse_problem(const std::string& text);
/// Throws ResourceError when the file cannot be read.
ProblemFile load_problem(const std::string& path);

/// Seed from DAE_PENCIL_SEED if set and valid, otherwise `fallback`.
std::uint64_t seed_from_env(std::uint64_t fallback);

using Json = nlohmann::ordered_json;

Json to_json(const Classification& c);
Json to_json(const MinimalIndices& mi);
Json to_json(const IdentityReport& r);
Json to_json(const SubspaceDims& d);
Json to_json(const Verdict& v);
Json to_json(const CertificateReport& r);
Json to_json(const CertifyResult& r);

/// Classification, dims, minimal indices, identity residuals and the index verdict.
/// Throws IndexTooHigh from the decomposition unchanged.
Json analyze_report(const Pencil& p, const RankTolerance& tol = {});

/// Verdict, escape estimate, sup norms, residual maxima and the Lagrange flag.
Json solve_report(const Trajectory& traj, const std::vector<Predicate>& bounds);

} // namespace daepencil
