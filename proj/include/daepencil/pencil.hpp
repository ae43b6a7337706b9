#pragma once

#include "daepencil/linalg.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace daepencil {

inline constexpr std::uint64_t kDefaultSeed = 20240917ULL;

/// The pencil lambda*A + B with A, B of size m x n.
class Pencil {
public:
    Pencil() = default;
    /// Throws ShapeMismatch when A and B differ in shape, NonFinite on NaN/inf entries.
    Pencil(Mat A, Mat B);

    const Mat& A() const { return A_; }
    const Mat& B() const { return B_; }
    Eigen::Index rows() const { return A_.rows(); }
    Eigen::Index cols() const { return A_.cols(); }

    Mat at(double lambda) const { return lambda * A_ + B_; }
    Pencil transposed() const { return Pencil(A_.transpose(), B_.transpose()); }

    /// ||A||_F + ||B||_F, or 1 when both vanish.
    double scale() const;

private:
    Mat A_;
    Mat B_;
};

/// Relative rank tolerance and the seed for sampled lambda values.
struct RankTolerance {
    double rel = -1.0; ///< < 0 means eps * max(m, n)
    std::uint64_t seed = kDefaultSeed;

    double rel_for(Eigen::Index m, Eigen::Index n) const { return rel < 0 ? la::default_rel_tol(m, n) : rel; }
};

enum class PencilKind { Regular, Singular };
enum class RegularIndex { Zero, One, Higher };

std::string to_string(PencilKind k);
std::string to_string(RegularIndex i);

struct Classification {
    PencilKind kind = PencilKind::Singular;
    int rank = 0;
    int defect = 0;       ///< n - rank
    int dual_defect = 0;  ///< m - rank
    int total_defect = 0; ///< n + m - 2 rank
    std::optional<RegularIndex> index;
};

/// Maximum numerical rank of lambda_i A + B over min(m,n)+2 seeded lambda_i in [-10, 10].
int pencil_rank(const Pencil& p, const RankTolerance& tol = {});

Classification classify(const Pencil& p, const RankTolerance& tol = {});

/**
 * @brief Index of a regular pencil: 0 if A is invertible, 1 if A + B*P2 is
 * invertible for the orthogonal projector P2 onto Ker A, otherwise Higher.
 *
 * Invertibility of A + B*P2 means cond < 1/(100*rel).
 * Throws NotRegular when the pencil is not square or is singular.
 */
RegularIndex regular_index(const Mat& A, const Mat& B, const RankTolerance& tol = {});

} // namespace daepencil
