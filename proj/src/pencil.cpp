#include "daepencil/pencil.hpp"

#include "daepencil/error.hpp"

#include <algorithm>
#include <random>

namespace daepencil {

Pencil::Pencil(Mat A, Mat B) : A_(std::move(A)), B_(std::move(B)) {
    if (A_.rows() != B_.rows() || A_.cols() != B_.cols())
        throw Error(ErrorKind::ShapeMismatch, "A is " + std::to_string(A_.rows()) + "x" + std::to_string(A_.cols()) +
                                                  " but B is " + std::to_string(B_.rows()) + "x" +
                                                  std::to_string(B_.cols()));
    if (!A_.allFinite() || !B_.allFinite()) throw Error(ErrorKind::NonFinite, "pencil has non-finite entries");
}

double Pencil::scale() const {
    const double s = A_.norm() + B_.norm();
    return s > 0 ? s : 1.0;
}

std::string to_string(PencilKind k) { return k == PencilKind::Regular ? "regular" : "singular"; }

std::string to_string(RegularIndex i) {
    switch (i) {
        case RegularIndex::Zero: return "0";
        case RegularIndex::One: return "1";
        case RegularIndex::Higher: return ">1";
    }
    return "?";
}

int pencil_rank(const Pencil& p, const RankTolerance& tol) {
    const auto m = p.rows(), n = p.cols();
    if (m == 0 || n == 0) return 0;
    std::mt19937_64 rng(tol.seed);
    std::uniform_real_distribution<double> dist(-10.0, 10.0);
    const int samples = static_cast<int>(std::min(m, n)) + 2;
    const double rel = tol.rel_for(m, n);
    int best = 0;
    for (int i = 0; i < samples; ++i) best = std::max(best, la::numerical_rank(p.at(dist(rng)), rel));
    return best;
}

Classification classify(const Pencil& p, const RankTolerance& tol) {
    Classification c;
    const int n = static_cast<int>(p.cols()), m = static_cast<int>(p.rows());
    c.rank = pencil_rank(p, tol);
    c.defect = n - c.rank;
    c.dual_defect = m - c.rank;
    c.total_defect = n + m - 2 * c.rank;
    c.kind = (n == m && c.rank == n) ? PencilKind::Regular : PencilKind::Singular;
    if (c.kind == PencilKind::Regular) c.index = regular_index(p.A(), p.B(), tol);
    return c;
}

RegularIndex regular_index(const Mat& A, const Mat& B, const RankTolerance& tol) {
    if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows())
        throw Error(ErrorKind::NotRegular, "regular index needs a square pencil");
    const auto n = A.rows();
    if (n == 0) return RegularIndex::Zero;
    const Pencil p(A, B);
    if (pencil_rank(p, tol) != n) throw Error(ErrorKind::NotRegular, "det(lambda A + B) vanishes identically");
    const double rel = tol.rel_for(n, n);
    const double ref = std::max(la::norm2(A), la::norm2(B));
    if (la::numerical_rank(A, rel, ref) == n) return RegularIndex::Zero;
    const Mat K = la::null_space(A, rel, ref);
    const Mat G = A + B * (K * K.transpose());
    return la::cond2(G) < 1.0 / (100.0 * rel) ? RegularIndex::One : RegularIndex::Higher;
}

} // namespace daepencil
