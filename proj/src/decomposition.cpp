#include "daepencil/decomposition.hpp"

#include "daepencil/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

namespace daepencil {

double IdentityReport::max() const {
    return std::max({idempotence, complementarity, intertwining, annihilation, semi_inverse, block_zero});
}

namespace {

Mat unit_columns(Eigen::Index n, const std::vector<int>& idx) {
    Mat E = Mat::Zero(n, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) E(idx[k], static_cast<Eigen::Index>(k)) = 1.0;
    return E;
}

// Orthonormal basis of Ker M with a known dimension k (the k smallest right singular vectors).
Mat kernel_of_dim(const Mat& M, Eigen::Index k) {
    const Eigen::Index n = M.cols();
    if (k == 0) return Mat(n, 0);
    if (M.rows() == 0) return Mat::Identity(n, n).leftCols(k);
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
    return svd.matrixV().rightCols(k);
}

Mat range_of_dim(const Mat& M, Eigen::Index k) {
    if (k == 0) return Mat(M.rows(), 0);
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU);
    return svd.matrixU().leftCols(k);
}

Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Minimum-norm (X, Y) with P1 X - Y Q1 = R1 and P2 X - Y Q2 = R2.
std::pair<Mat, Mat> solve_sylvester_pair(const Mat& P1, const Mat& Q1, const Mat& R1, const Mat& P2, const Mat& Q2,
                                         const Mat& R2, double scale) {
    const Eigen::Index r = P1.rows(), p = P1.cols(), q = Q1.cols(), s = Q1.rows();
    if (r * q == 0) return {Mat::Zero(p, q), Mat::Zero(r, s)};
    const Mat Iq = Mat::Identity(q, q), Ir = Mat::Identity(r, r);
    Mat L(2 * r * q, p * q + r * s);
    L << kron(Iq, P1), -kron(Q1.transpose(), Ir), kron(Iq, P2), -kron(Q2.transpose(), Ir);
    Vec rhs(2 * r * q);
    rhs << R1.reshaped(), R2.reshaped();
    const Vec sol = la::min_norm_solve(L, rhs);
    if ((L * sol - rhs).norm() > 1e-8 * scale * (1.0 + rhs.norm()))
        throw Error(ErrorKind::DecompositionInconsistent, "block separation system has no solution");
    return {sol.head(p * q).reshaped(p, q), sol.tail(r * s).reshaped(r, s)};
}

Mat coords_of(const Mat& basis, const Mat& vectors) {
    if (basis.cols() == 0) return Mat(0, vectors.cols());
    return basis.colPivHouseholderQr().solve(vectors);
}

Mat block_projector(const Mat& V, const Mat& Vinv, Eigen::Index start, Eigen::Index len) {
    if (len == 0) return Mat::Zero(V.rows(), V.rows());
    return V.middleCols(start, len) * Vinv.middleRows(start, len);
}

void finalize(Decomposition& d, const std::optional<SemiInverses>& given) {
    const Pencil& p = d.pencil;
    const auto dim_of = [](const Mat& P) { return static_cast<int>(std::lround(P.trace())); };
    d.xdims = {dim_of(d.S1), dim_of(d.S2), dim_of(d.P1), dim_of(d.P2)};
    d.ydims = {dim_of(d.F1), dim_of(d.F2), dim_of(d.Q1), dim_of(d.Q2)};
    if (d.xdims.total() != p.cols() || d.ydims.total() != p.rows())
        throw Error(ErrorKind::DecompositionInconsistent, "projector ranks do not add up to the space dimensions");

    d.X_s1 = la::projector_basis(d.S1, d.xdims.s1);
    d.X_s2 = la::projector_basis(d.S2, d.xdims.s2);
    d.X_1 = la::projector_basis(d.P1, d.xdims.r1);
    d.X_2 = la::projector_basis(d.P2, d.xdims.r2);
    d.Y_s1 = la::projector_basis(d.F1, d.ydims.s1);
    d.Y_s2 = la::projector_basis(d.F2, d.ydims.s2);
    d.Y_1 = la::projector_basis(d.Q1, d.ydims.r1);
    d.Y_2 = la::projector_basis(d.Q2, d.ydims.r2);
    d.Wx_s1 = coords_of(d.X_s1, d.S1);
    d.Wx_s2 = coords_of(d.X_s2, d.S2);
    d.Wx_1 = coords_of(d.X_1, d.P1);
    d.Wx_2 = coords_of(d.X_2, d.P2);
    d.Wy_s1 = coords_of(d.Y_s1, d.F1);
    d.Wy_s2 = coords_of(d.Y_s2, d.F2);
    d.Wy_1 = coords_of(d.Y_1, d.Q1);
    d.Wy_2 = coords_of(d.Y_2, d.Q2);

    const Mat& A = p.A();
    const Mat& B = p.B();
    d.A_gen = {d.Wy_s1 * A * d.X_s1, "X_s1", "Y_s1"};
    d.B_gen = {d.Wy_s1 * B * d.X_s1, "X_s1", "Y_s1"};
    d.B_und = {d.Wy_s1 * B * d.X_s2, "X_s2", "Y_s1"};
    d.B_ov = {d.Wy_s2 * B * d.X_s1, "X_s1", "Y_s2"};
    d.A_1 = {d.Wy_1 * A * d.X_1, "X_1", "Y_1"};
    d.B_1 = {d.Wy_1 * B * d.X_1, "X_1", "Y_1"};
    d.B_2 = {d.Wy_2 * B * d.X_2, "X_2", "Y_2"};

    if (given) {
        d.inv = *given;
    } else {
        d.inv.gen = semi_inverse(SemiInverseKind::Gen, d, p);
        d.inv.a1 = semi_inverse(SemiInverseKind::A1, d, p);
        d.inv.b2 = semi_inverse(SemiInverseKind::B2, d, p);
    }
}

double fro(const Mat& M) { return M.size() == 0 ? 0.0 : M.norm(); }

} // namespace

RegularSplit regular_split(const Mat& Ar, const Mat& Br, SplitMode mode, const RankTolerance& tol) {
    const Eigen::Index n = Ar.rows();
    RegularSplit rs;
    if (regular_index(Ar, Br, tol) == RegularIndex::Higher)
        throw Error(ErrorKind::IndexTooHigh, "regular part has index greater than 1");
    const Mat I = Mat::Identity(n, n);
    if (n == 0) {
        rs.P1 = rs.P2 = rs.Q1 = rs.Q2 = I;
        return rs;
    }
    const double rel = tol.rel_for(n, n);
    const double ref = std::max(la::norm2(Ar), la::norm2(Br));

    if (mode == SplitMode::KernelRange) {
        rs.X2 = la::null_space(Ar, rel, ref);
        rs.Y1 = la::range_basis(Ar, rel, ref);
        rs.Y2 = Br * rs.X2;
        std::mt19937_64 rng(tol.seed ^ 0x9e3779b97f4a7c15ULL);
        std::uniform_real_distribution<double> dist(-10.0, 10.0);
        bool solved = false;
        for (int attempt = 0; attempt < 6 && !solved; ++attempt) {
            rs.lambda0 = dist(rng);
            const Mat T = rs.lambda0 * Ar + Br;
            if (la::cond2(T) < 1.0 / (100.0 * rel)) {
                rs.X1 = T.fullPivLu().solve(rs.Y1);
                solved = true;
            }
        }
        if (!solved) throw Error(ErrorKind::SingularBlock, "lambda0*A_r + B_r singular for 6 sampled lambda0");
        const Mat V = la::hcat({&rs.X1, &rs.X2}, n);
        const Mat U = la::hcat({&rs.Y1, &rs.Y2}, n);
        if (la::numerical_rank(U, 1e-10) != n) throw Error(ErrorKind::IndexTooHigh, "Range A_r and B_r Ker A_r intersect");
        const Mat Vinv = V.fullPivLu().inverse();
        const Mat Uinv = U.fullPivLu().inverse();
        const auto k = rs.X1.cols();
        rs.P1 = block_projector(V, Vinv, 0, k);
        rs.P2 = block_projector(V, Vinv, k, n - k);
        rs.Q1 = block_projector(U, Uinv, 0, k);
        rs.Q2 = block_projector(U, Uinv, k, n - k);
        return rs;
    }

    // Residue mode: P1 = Res_{mu=0} (A+mu B)^{-1} A / mu, Q1 = Res_{mu=0} A (A+mu B)^{-1} / mu,
    // by the trapezoidal rule on a circle inside the nearest other singularity mu = 1/lambda.
    Eigen::GeneralizedEigenSolver<Mat> ges(-Br, Ar, false);
    double lam_max = 0.0;
    const auto& al = ges.alphas();
    const auto& be = ges.betas();
    for (Eigen::Index i = 0; i < al.size(); ++i) {
        if (std::abs(be(i)) > 1e-12 * std::abs(al(i)) && be(i) != 0.0)
            lam_max = std::max(lam_max, std::abs(al(i) / be(i)));
    }
    const double rho = 0.1 / std::max(1.0, lam_max);
    constexpr int nodes = 64;
    using CMat = Eigen::MatrixXcd;
    CMat p1 = CMat::Zero(n, n), q1 = CMat::Zero(n, n);
    const CMat Ac = Ar.cast<std::complex<double>>(), Bc = Br.cast<std::complex<double>>();
    for (int k = 0; k < nodes; ++k) {
        const std::complex<double> mu = std::polar(rho, 2.0 * std::numbers::pi * (k + 0.5) / nodes);
        const Eigen::PartialPivLU<CMat> lu(Ac + mu * Bc);
        p1 += lu.solve(Ac);
        q1 += Ac * lu.inverse();
    }
    rs.P1 = p1.real() / nodes;
    rs.Q1 = q1.real() / nodes;
    rs.P2 = I - rs.P1;
    rs.Q2 = I - rs.Q1;
    rs.X1 = la::range_basis(rs.P1, 1e-8);
    rs.X2 = la::range_basis(rs.P2, 1e-8);
    rs.Y1 = la::range_basis(rs.Q1, 1e-8);
    rs.Y2 = la::range_basis(rs.Q2, 1e-8);
    return rs;
}

Mat semi_inverse(SemiInverseKind which, const Decomposition& d, const Pencil& p) {
    const Mat* dom = nullptr;
    const Mat* cod = nullptr;
    const Mat* op = nullptr;
    switch (which) {
        case SemiInverseKind::Gen: dom = &d.X_s1; cod = &d.Wy_s1; op = &p.A(); break;
        case SemiInverseKind::A1: dom = &d.X_1; cod = &d.Wy_1; op = &p.A(); break;
        case SemiInverseKind::B2: dom = &d.X_2; cod = &d.Wy_2; op = &p.B(); break;
    }
    const Eigen::Index n = p.cols(), m = p.rows();
    if (dom->cols() == 0 && cod->rows() == 0) return Mat::Zero(n, m);
    const Mat block = (*cod) * (*op) * (*dom);
    if (block.rows() != block.cols() ||
        la::cond2(block) > 1.0 / (100.0 * la::default_rel_tol(std::max(n, m), std::max(n, m))))
        throw Error(ErrorKind::SingularBlock, "restricted operator is not invertible on its subspace");
    return (*dom) * block.fullPivLu().solve(*cod);
}

Decomposition decomposition_from_projectors(const Pencil& p, const Mat& S1, const Mat& S2, const Mat& P1,
                                            const Mat& P2, const Mat& F1, const Mat& F2, const Mat& Q1,
                                            const Mat& Q2, const std::optional<SemiInverses>& given) {
    Decomposition d;
    d.pencil = p;
    d.S1 = S1, d.S2 = S2, d.P1 = P1, d.P2 = P2;
    d.F1 = F1, d.F2 = F2, d.Q1 = Q1, d.Q2 = Q2;
    for (const Mat* M : {&S1, &S2, &P1, &P2})
        if (M->rows() != p.cols() || M->cols() != p.cols())
            throw Error(ErrorKind::ShapeMismatch, "X-side projectors must be n x n");
    for (const Mat* M : {&F1, &F2, &Q1, &Q2})
        if (M->rows() != p.rows() || M->cols() != p.rows())
            throw Error(ErrorKind::ShapeMismatch, "Y-side projectors must be m x m");
    finalize(d, given);
    return d;
}

Decomposition decompose(const Pencil& p, const DecomposeOptions& opts) {
    const Mat& A = p.A();
    const Mat& B = p.B();
    const Eigen::Index n = p.cols(), m = p.rows();
    const double scale = p.scale();

    Decomposition d;
    d.pencil = p;
    d.primal = polynomial_kernel_basis(p, Side::Primal, opts.tol);
    d.dual = polynomial_kernel_basis(p, Side::Dual, opts.tol);

    // Right-singular (L) part straight from the primal chains.
    std::vector<Vec> xl1, xl2, yh_all, yh_low;
    for (const auto& v : d.primal.vectors) {
        for (int i = 0; i < v.degree; ++i) xl1.push_back(v.coeffs[i]);
        xl2.push_back(v.leading());
    }
    for (const auto& v : d.dual.vectors) {
        for (int i = 0; i <= v.degree; ++i) yh_all.push_back(v.coeffs[i]);
        for (int i = 0; i < v.degree; ++i) yh_low.push_back(v.coeffs[i]);
    }
    const auto to_mat = [](const std::vector<Vec>& cols, Eigen::Index rows) {
        Mat M(rows, static_cast<Eigen::Index>(cols.size()));
        for (std::size_t k = 0; k < cols.size(); ++k) M.col(static_cast<Eigen::Index>(k)) = cols[k];
        return M;
    };
    const Mat XL1 = to_mat(xl1, n), XL2 = to_mat(xl2, n);
    const Mat XL = la::hcat({&XL1, &XL2}, n);
    const Mat YL = A * XL1;
    const Mat Yhat = to_mat(yh_all, m);
    const Mat Xhat = A.transpose() * to_mat(yh_low, m);
    const Eigen::Index nL = XL.cols(), mL = YL.cols(), nLT = Xhat.cols(), mLT = Yhat.cols();

    // K_X / K_Y: everything except the left-singular (L^T) part.
    const Mat KX = nLT ? kernel_of_dim(Xhat.transpose(), n - nLT) : Mat(Mat::Identity(n, n));
    const Mat KY = mLT ? kernel_of_dim(Yhat.transpose(), m - mLT) : Mat(Mat::Identity(m, m));
    const Eigen::Index kx = KX.cols(), ky = KY.cols();

    // L^T part: coordinate complements, corrected so that A and B map X_LT into Y_LT.
    Mat XLT(n, 0), YLT(m, 0);
    if (nLT + mLT > 0) {
        const Mat E = unit_columns(n, la::pivot_columns(Xhat.transpose(), static_cast<int>(nLT)));
        const Mat G = unit_columns(m, la::pivot_columns(Yhat.transpose(), static_cast<int>(mLT)));
        const Mat TX = la::hcat({&KX, &E}, n), TY = la::hcat({&KY, &G}, m);
        const auto luY = TY.fullPivLu();
        if (!luY.isInvertible() || !TX.fullPivLu().isInvertible())
            throw Error(ErrorKind::DecompositionInconsistent, "singular-part complements are degenerate");
        const Mat Ah = luY.solve(A * TX), Bh = luY.solve(B * TX);
        auto [M, N] = solve_sylvester_pair(Ah.topLeftCorner(ky, kx), Ah.bottomRightCorner(mLT, nLT),
                                           -Ah.topRightCorner(ky, nLT), Bh.topLeftCorner(ky, kx),
                                           Bh.bottomRightCorner(mLT, nLT), -Bh.topRightCorner(ky, nLT), scale);
        XLT = E + KX * M;
        YLT = G + KY * N;
    }

    // Inside K: split the L part from the regular part.
    const Mat C = KX * kernel_of_dim((KX.transpose() * XL).transpose(), kx - nL);
    const Mat D = KY * kernel_of_dim((KY.transpose() * YL).transpose(), ky - mL);
    const Eigen::Index nr = C.cols();
    if (D.cols() != nr) throw Error(ErrorKind::DecompositionInconsistent, "regular part is not square");
    Mat Xr = C, Yr = D;
    if (nL + mL > 0 && nr > 0) {
        const Mat TX = la::hcat({&C, &XL}, n), TY = la::hcat({&D, &YL}, m);
        const auto qr = TY.colPivHouseholderQr();
        const Mat At = qr.solve(A * TX), Bt = qr.solve(B * TX);
        auto [L, H] = solve_sylvester_pair(At.bottomRightCorner(mL, nL), At.topLeftCorner(nr, nr),
                                           -At.bottomLeftCorner(mL, nr), Bt.bottomRightCorner(mL, nL),
                                           Bt.topLeftCorner(nr, nr), -Bt.bottomLeftCorner(mL, nr), scale);
        Xr = C + XL * L;
        Yr = D + YL * H;
    }

    Mat X1(n, 0), X2(n, 0), Y1(m, 0), Y2(m, 0);
    if (nr > 0) {
        const bool plain = nL + nLT + mLT == 0;
        const Mat Ar = plain ? A : coords_of(Yr, A * Xr);
        const Mat Br = plain ? B : coords_of(Yr, B * Xr);
        // A_r, B_r carry the roundoff of the separation solves, so rank them more loosely.
        RankTolerance block_tol = opts.tol;
        if (!plain) block_tol.rel = std::max(opts.tol.rel_for(m, n), 1e-11);
        const RegularSplit rs = regular_split(Ar, Br, opts.mode, block_tol);
        X1 = Xr * rs.X1;
        X2 = Xr * rs.X2;
        Y1 = Yr * rs.Y1;
        Y2 = Yr * rs.Y2;
    }

    // Y_s1 gets A X_LT, Y_s2 is its orthogonal complement inside Y_LT.
    const Mat AXLT = A * XLT;
    Mat Ys2(m, 0);
    if (mLT > 0) {
        const Mat O = range_of_dim(YLT, mLT);
        Ys2 = O * kernel_of_dim((O.transpose() * AXLT).transpose(), mLT - nLT);
    }

    const Mat Xs1 = la::hcat({&XL1, &XLT}, n);
    const Mat Ys1 = la::hcat({&YL, &AXLT}, m);
    const Mat V = la::hcat({&Xs1, &XL2, &X1, &X2}, n);
    const Mat U = la::hcat({&Ys1, &Ys2, &Y1, &Y2}, m);
    if (V.cols() != n || U.cols() != m)
        throw Error(ErrorKind::DecompositionInconsistent, "subspace dimensions do not add up");
    const auto luV = V.fullPivLu();
    const auto luU = U.fullPivLu();
    if (!luV.isInvertible() || !luU.isInvertible())
        throw Error(ErrorKind::DecompositionInconsistent, "subspaces are not complementary");
    const Mat Vinv = luV.inverse(), Uinv = luU.inverse();

    Eigen::Index at = 0;
    d.S1 = block_projector(V, Vinv, at, Xs1.cols()), at += Xs1.cols();
    d.S2 = block_projector(V, Vinv, at, XL2.cols()), at += XL2.cols();
    d.P1 = block_projector(V, Vinv, at, X1.cols()), at += X1.cols();
    d.P2 = block_projector(V, Vinv, at, X2.cols());
    at = 0;
    d.F1 = block_projector(U, Uinv, at, Ys1.cols()), at += Ys1.cols();
    d.F2 = block_projector(U, Uinv, at, Ys2.cols()), at += Ys2.cols();
    d.Q1 = block_projector(U, Uinv, at, Y1.cols()), at += Y1.cols();
    d.Q2 = block_projector(U, Uinv, at, Y2.cols());

    finalize(d, std::nullopt);

    const IdentityReport rep = verify_decomposition(d, p);
    if (rep.max() > opts.identity_tol * (scale + 1.0))
        throw Error(ErrorKind::DecompositionInconsistent,
                    "identity residual " + std::to_string(rep.max()) + " exceeds tolerance");
    return d;
}

IdentityReport verify_decomposition(const Decomposition& d, const Pencil& p) {
    const Mat& A = p.A();
    const Mat& B = p.B();
    const Eigen::Index n = p.cols(), m = p.rows();
    const double s = p.scale();
    const Mat In = Mat::Identity(n, n), Im = Mat::Identity(m, m);
    IdentityReport r;

    const std::array<const Mat*, 4> X{&d.S1, &d.S2, &d.P1, &d.P2};
    const std::array<const Mat*, 4> Y{&d.F1, &d.F2, &d.Q1, &d.Q2};
    for (int i = 0; i < 4; ++i) {
        r.idempotence = std::max({r.idempotence, fro(*X[i] * *X[i] - *X[i]), fro(*Y[i] * *Y[i] - *Y[i])});
        for (int j = 0; j < 4; ++j) {
            if (i == j) continue;
            r.complementarity = std::max({r.complementarity, fro(*X[i] * *X[j]), fro(*Y[i] * *Y[j])});
        }
    }
    r.complementarity = std::max({r.complementarity, fro(d.S1 + d.S2 + d.P1 + d.P2 - In),
                                  fro(d.F1 + d.F2 + d.Q1 + d.Q2 - Im)});

    const Mat S = d.S(), P = d.P(), F = d.F(), Q = d.Q();
    double it = 0.0;
    for (const Mat& M : {Mat(F * A - A * S), Mat(F * B - B * S), Mat(Q * A - A * P), Mat(Q * B - B * P),
                         Mat(d.Q1 * A - A * d.P1), Mat(d.Q1 * B - B * d.P1), Mat(d.Q2 * A - A * d.P2),
                         Mat(d.Q2 * B - B * d.P2)})
        it = std::max(it, fro(M));
    r.intertwining = it / s;

    double an = 0.0;
    for (const Mat& M : {Mat(A * d.S2), Mat(d.F2 * A), Mat(d.F2 * B * d.S2), Mat(A * d.P2)}) an = std::max(an, fro(M));
    r.annihilation = an / s;

    double bz = 0.0;
    for (const Mat& M : {Mat(F * A * P), Mat(Q * A * S), Mat(F * B * P), Mat(Q * B * S), Mat(d.F2 * A * d.S1),
                         Mat(d.F1 * A * d.S2), Mat(d.Q1 * A * d.P2), Mat(d.Q2 * A * d.P1), Mat(d.Q1 * B * d.P2),
                         Mat(d.Q2 * B * d.P1)})
        bz = std::max(bz, fro(M));
    r.block_zero = bz / s;

    const auto triple = [](const Mat& inv, const Mat& op, const Mat& dom, const Mat& cod) {
        const double sc = std::max(1.0, fro(inv));
        return std::max({fro(inv * op - dom), fro(op * inv - cod), fro(inv - dom * inv) / sc});
    };
    r.semi_inverse = std::max({triple(d.inv.gen, d.F1 * A, d.S1, d.F1), triple(d.inv.a1, d.Q1 * A, d.P1, d.Q1),
                               triple(d.inv.b2, d.Q2 * B, d.P2, d.Q2)});
    return r;
}

} // namespace daepencil
