#pragma once

#include "daepencil/kronecker.hpp"
#include "daepencil/pencil.hpp"

#include <optional>
#include <string>

namespace daepencil {

enum class SplitMode { KernelRange, Residue };

/// Matrix of a restricted operator in the stored basis coordinates of its domain and codomain.
struct RestrictedMap {
    Mat matrix;
    std::string domain;
    std::string codomain;
};

/// Dimensions of the four pieces of R^n (s1, s2, 1, 2); the same layout is used for R^m.
struct SubspaceDims {
    int s1 = 0, s2 = 0, r1 = 0, r2 = 0;
    int total() const { return s1 + s2 + r1 + r2; }
    bool operator==(const SubspaceDims&) const = default;
};

/// Projector pair for a regular index <= 1 pencil (A_r, B_r), in the coordinates of A_r.
struct RegularSplit {
    Mat P1, P2, Q1, Q2;
    Mat X1, X2, Y1, Y2; ///< bases
    double lambda0 = 0.0;
};

struct SemiInverses {
    Mat gen; ///< inverse of F1*A from Y_s1 to X_s1
    Mat a1;  ///< inverse of Q1*A from Y_1 to X_1
    Mat b2;  ///< inverse of Q2*B from Y_2 to X_2
};

/**
 * Projector system and the derived operators of a pencil.
 *
 * R^n = X_s1 + X_s2 + X_1 + X_2 with projectors S1, S2, P1, P2, and
 * R^m = Y_s1 + Y_s2 + Y_1 + Y_2 with projectors F1, F2, Q1, Q2.
 * Bases are pivoted projector columns; W* are the matching coordinate maps
 * (W * basis = I, basis * W = projector).
 */
struct Decomposition {
    Pencil pencil;
    Mat X_s1, X_s2, X_1, X_2;
    Mat Y_s1, Y_s2, Y_1, Y_2;
    Mat Wx_s1, Wx_s2, Wx_1, Wx_2;
    Mat Wy_s1, Wy_s2, Wy_1, Wy_2;
    Mat S1, S2, P1, P2;
    Mat F1, F2, Q1, Q2;
    SemiInverses inv;
    RestrictedMap A_gen, B_gen, B_und, B_ov, A_1, B_1, B_2;
    SubspaceDims xdims, ydims;
    MinimalBasis primal, dual;

    Mat S() const { return S1 + S2; }
    Mat P() const { return P1 + P2; }
    Mat F() const { return F1 + F2; }
    Mat Q() const { return Q1 + Q2; }
};

struct IdentityReport {
    double idempotence = 0.0;
    double complementarity = 0.0;
    double intertwining = 0.0;
    double annihilation = 0.0;
    double semi_inverse = 0.0;
    double block_zero = 0.0;
    double max() const;
};

struct DecomposeOptions {
    SplitMode mode = SplitMode::KernelRange;
    RankTolerance tol;
    /// Identity residuals must satisfy |residual| <= identity_tol * (||A|| + ||B|| + 1).
    double identity_tol = 1e-10;
};

RegularSplit regular_split(const Mat& Ar, const Mat& Br, SplitMode mode, const RankTolerance& tol = {});

Decomposition decompose(const Pencil& p, const DecomposeOptions& opts = {});

/// Builds a decomposition from given projectors; semi-inverses are computed unless supplied.
Decomposition decomposition_from_projectors(const Pencil& p, const Mat& S1, const Mat& S2, const Mat& P1,
                                            const Mat& P2, const Mat& F1, const Mat& F2, const Mat& Q1,
                                            const Mat& Q2, const std::optional<SemiInverses>& given = {});

enum class SemiInverseKind { Gen, A1, B2 };

/// Semi-inverse recomputed from the stored bases of d. Throws SingularBlock when the block is not invertible.
Mat semi_inverse(SemiInverseKind which, const Decomposition& d, const Pencil& p);

IdentityReport verify_decomposition(const Decomposition& d, const Pencil& p);
inline IdentityReport verify_decomposition(const Decomposition& d) { return verify_decomposition(d, d.pencil); }

} // namespace daepencil
