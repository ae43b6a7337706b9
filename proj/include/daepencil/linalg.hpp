#pragma once

#include <Eigen/Dense>

#include <vector>

namespace daepencil {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

namespace la {

/// Default relative rank tolerance eps * max(rows, cols).
double default_rel_tol(Eigen::Index rows, Eigen::Index cols);

/// Number of singular values above rel * max(sigma_max, ref). rel < 0 selects the default.
/// A nonzero `ref` measures M against an outside scale, so a block of pure roundoff has rank 0.
int numerical_rank(const Mat& M, double rel = -1.0, double ref = 0.0);

/// Orthonormal basis of Ker M (n x k). An M with zero rows yields the identity.
Mat null_space(const Mat& M, double rel = -1.0, double ref = 0.0);

/// Orthonormal basis of the column span of M.
Mat range_basis(const Mat& M, double rel = -1.0, double ref = 0.0);

/// Orthonormal basis of the orthogonal complement of span(Q) in R^rows.
Mat orth_complement(const Mat& Q, double rel = -1.0);

/// Largest principal angle between span(U) and span(V), in radians.
/// Returns pi/2 when the dimensions differ.
double max_principal_angle(const Mat& U, const Mat& V, double rel = -1.0);

double cond2(const Mat& M);
double norm2(const Mat& M);

/**
 * @brief Greedy column selection: repeatedly take the column of largest residual
 * norm after projecting out the chosen ones. Ties within a relative 1e-9 go to the
 * lowest index, so exact integer projectors give reproducible picks.
 */
std::vector<int> pivot_columns(const Mat& M, int count);

/// Basis of range(P) made of `dim` columns of the projector P.
Mat projector_basis(const Mat& P, int dim);

/// Concatenate column blocks; empty blocks are allowed.
Mat hcat(std::initializer_list<const Mat*> blocks, Eigen::Index rows);

/// Minimum-norm least-squares solve.
Mat min_norm_solve(const Mat& L, const Mat& rhs);

} // namespace la
} // namespace daepencil
