#include "daepencil/kronecker.hpp"

#include "daepencil/error.hpp"

#include <algorithm>

namespace daepencil {

std::vector<int> MinimalBasis::degrees() const {
    std::vector<int> d;
    for (const auto& v : vectors) d.push_back(v.degree);
    return d;
}

Mat band_matrix(const Mat& A, const Mat& B, int d) {
    const auto m = A.rows(), n = A.cols();
    Mat M = Mat::Zero((d + 2) * m, (d + 1) * n);
    for (int i = 0; i <= d; ++i) {
        M.block(i * m, i * n, m, n) = B;
        M.block((i + 1) * m, i * n, m, n) = (i == d) ? A : Mat(-A);
    }
    return M;
}

namespace {

Vec stack_shifted(const ChainVector& v, int shift, int d, Eigen::Index n) {
    Vec s = Vec::Zero((d + 1) * n);
    for (int i = 0; i <= v.degree; ++i) s.segment((i + shift) * n, n) = v.coeffs[i];
    return s;
}

ChainVector unstack(const Vec& s, int d, Eigen::Index n) {
    ChainVector v;
    v.degree = d;
    for (int i = 0; i <= d; ++i) v.coeffs.push_back(s.segment(i * n, n));
    const double lead = v.leading().norm();
    const double tiny = 1e-12 * v.leading().cwiseAbs().maxCoeff();
    double sign = 1.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        if (std::abs(v.leading()(k)) > tiny) {
            sign = v.leading()(k) > 0 ? 1.0 : -1.0;
            break;
        }
    }
    for (auto& c : v.coeffs) c *= sign / lead;
    return v;
}

} // namespace

MinimalBasis polynomial_kernel_basis(const Pencil& p, Side side, const RankTolerance& tol) {
    const Mat A = side == Side::Primal ? p.A() : Mat(p.A().transpose());
    const Mat B = side == Side::Primal ? p.B() : Mat(p.B().transpose());
    const auto m = A.rows(), n = A.cols();
    MinimalBasis basis;
    basis.side = side;
    const int target = static_cast<int>(n) - pencil_rank(p, tol);
    if (target <= 0) return basis;

    const int max_degree = static_cast<int>(std::min(m, n));
    for (int d = 0; static_cast<int>(basis.vectors.size()) < target; ++d) {
        if (d > max_degree)
            throw Error(ErrorKind::DegreeOverflow, "minimal basis incomplete after degree " + std::to_string(max_degree));
        const Mat M = band_matrix(A, B, d);
        const Mat Z = la::null_space(M, tol.rel_for(M.rows(), M.cols()));

        std::vector<Vec> shifts;
        for (const auto& v : basis.vectors)
            for (int s = 0; s + v.degree <= d; ++s) shifts.push_back(stack_shifted(v, s, d, n));
        const int fresh = static_cast<int>(Z.cols()) - static_cast<int>(shifts.size());
        if (fresh < 0) throw Error(ErrorKind::DecompositionInconsistent, "band nullity below shift-module dimension");
        if (fresh == 0) continue;

        Mat W = Z;
        if (!shifts.empty()) {
            Mat S(Z.rows(), static_cast<Eigen::Index>(shifts.size()));
            for (std::size_t k = 0; k < shifts.size(); ++k) S.col(static_cast<Eigen::Index>(k)) = shifts[k];
            const Mat So = la::range_basis(S);
            W = Z - So * (So.transpose() * Z);
        }
        // Within span(Z) the residual map is an orthogonal projector, so the new
        // directions have singular value 1 and the shift directions 0.
        Eigen::JacobiSVD<Mat> svd(W, Eigen::ComputeThinU);
        for (int k = 0; k < fresh && static_cast<int>(basis.vectors.size()) < target; ++k)
            basis.vectors.push_back(unstack(svd.matrixU().col(k), d, n));
    }
    return basis;
}

MinimalIndices minimal_indices(const Pencil& p, const RankTolerance& tol) {
    MinimalIndices mi;
    mi.primal = polynomial_kernel_basis(p, Side::Primal, tol).degrees();
    mi.dual = polynomial_kernel_basis(p, Side::Dual, tol).degrees();
    return mi;
}

double validate_chain(const Pencil& p, Side side, const ChainVector& v) {
    const Mat A = side == Side::Primal ? p.A() : Mat(p.A().transpose());
    const Mat B = side == Side::Primal ? p.B() : Mat(p.B().transpose());
    double cmax = 0.0;
    for (const auto& c : v.coeffs) cmax = std::max(cmax, c.norm());
    const double scale = (A.norm() + B.norm()) * cmax;
    if (scale == 0.0) return 0.0;
    double worst = (B * v.coeffs.front()).norm();
    for (int i = 1; i <= v.degree; ++i) worst = std::max(worst, (B * v.coeffs[i] - A * v.coeffs[i - 1]).norm());
    worst = std::max(worst, (A * v.leading()).norm());
    return worst / scale;
}

} // namespace daepencil
