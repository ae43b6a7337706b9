#include "daepencil/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace daepencil::la {

double default_rel_tol(Eigen::Index rows, Eigen::Index cols) {
    return std::numeric_limits<double>::epsilon() * static_cast<double>(std::max<Eigen::Index>({rows, cols, 1}));
}

namespace {

double pick_rel(const Mat& M, double rel) { return rel < 0 ? default_rel_tol(M.rows(), M.cols()) : rel; }

int rank_from(const Vec& sv, double rel, double ref) {
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    const double thr = rel * std::max(sv(0), ref);
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > thr) ++r;
    return r;
}

} // namespace

int numerical_rank(const Mat& M, double rel, double ref) {
    if (M.size() == 0) return 0;
    Eigen::JacobiSVD<Mat> svd(M);
    return rank_from(svd.singularValues(), pick_rel(M, rel), ref);
}

Mat null_space(const Mat& M, double rel, double ref) {
    const Eigen::Index n = M.cols();
    if (n == 0) return Mat(0, 0);
    if (M.rows() == 0) return Mat::Identity(n, n);
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
    const int r = rank_from(svd.singularValues(), pick_rel(M, rel), ref);
    return svd.matrixV().rightCols(n - r);
}

Mat range_basis(const Mat& M, double rel, double ref) {
    if (M.cols() == 0 || M.rows() == 0) return Mat(M.rows(), 0);
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU);
    const int r = rank_from(svd.singularValues(), pick_rel(M, rel), ref);
    return svd.matrixU().leftCols(r);
}

Mat orth_complement(const Mat& Q, double rel) {
    if (Q.cols() == 0) return Mat::Identity(Q.rows(), Q.rows());
    return null_space(Q.transpose(), rel);
}

double max_principal_angle(const Mat& U, const Mat& V, double rel) {
    const Mat Uo = range_basis(U, rel);
    const Mat Vo = range_basis(V, rel);
    if (Uo.cols() != Vo.cols()) return std::numbers::pi / 2;
    if (Uo.cols() == 0) return 0.0;
    const Mat resid = Vo - Uo * (Uo.transpose() * Vo);
    const double s = std::min(1.0, norm2(resid));
    return std::asin(s);
}

double norm2(const Mat& M) {
    if (M.size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(M);
    return svd.singularValues()(0);
}

double cond2(const Mat& M) {
    if (M.size() == 0) return 1.0;
    Eigen::JacobiSVD<Mat> svd(M);
    const auto& s = svd.singularValues();
    const double lo = s(s.size() - 1);
    if (lo == 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / lo;
}

std::vector<int> pivot_columns(const Mat& M, int count) {
    std::vector<int> picked;
    Mat R = M;
    for (int k = 0; k < count; ++k) {
        double best = -1.0;
        int idx = -1;
        for (Eigen::Index j = 0; j < R.cols(); ++j) {
            if (std::find(picked.begin(), picked.end(), static_cast<int>(j)) != picked.end()) continue;
            const double nj = R.col(j).norm();
            if (nj > best * (1.0 + 1e-9) + 1e-300) {
                best = nj;
                idx = static_cast<int>(j);
            }
        }
        if (idx < 0 || best <= 0.0) break;
        picked.push_back(idx);
        const Vec q = R.col(idx) / best;
        R -= q * (q.transpose() * R);
    }
    return picked;
}

Mat projector_basis(const Mat& P, int dim) {
    Mat out(P.rows(), dim);
    const auto cols = pivot_columns(P, dim);
    for (int k = 0; k < static_cast<int>(cols.size()); ++k) out.col(k) = P.col(cols[k]);
    return out.leftCols(static_cast<Eigen::Index>(cols.size()));
}

Mat hcat(std::initializer_list<const Mat*> blocks, Eigen::Index rows) {
    Eigen::Index cols = 0;
    for (const Mat* b : blocks) cols += b->cols();
    Mat out(rows, cols);
    Eigen::Index c = 0;
    for (const Mat* b : blocks) {
        if (b->cols() == 0) continue;
        out.middleCols(c, b->cols()) = *b;
        c += b->cols();
    }
    return out;
}

Mat min_norm_solve(const Mat& L, const Mat& rhs) {
    if (L.cols() == 0) return Mat(0, rhs.cols());
    if (L.rows() == 0) return Mat::Zero(L.cols(), rhs.cols());
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(L);
    cod.setThreshold(default_rel_tol(L.rows(), L.cols()) * 10);
    return cod.solve(rhs);
}

} // namespace daepencil::la
