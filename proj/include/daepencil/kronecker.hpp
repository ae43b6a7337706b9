#pragma once

#include "daepencil/pencil.hpp"

#include <vector>

namespace daepencil {

enum class Side { Primal, Dual };

/// A polynomial solution x(lambda) = sum_i (-1)^i lambda^i coeffs[i] of (lambda A + B) x = 0.
/// On the Dual side the pencil is (A^T, B^T).
struct ChainVector {
    int degree = 0;
    std::vector<Vec> coeffs; ///< degree + 1 entries, coeffs.back() is the leading coefficient
    const Vec& leading() const { return coeffs.back(); }
};

struct MinimalBasis {
    Side side = Side::Primal;
    std::vector<ChainVector> vectors; ///< sorted by nondecreasing degree
    std::vector<int> degrees() const;
};

struct MinimalIndices {
    std::vector<int> primal;
    std::vector<int> dual;
};

/**
 * Block band matrix M_d of size (d+2)m x (d+1)n whose kernel is the space of
 * coefficient stacks of polynomial kernel vectors of degree <= d.
 * Rows: B c_0 = 0; -A c_{i-1} + B c_i = 0; A c_d = 0.
 */
Mat band_matrix(const Mat& A, const Mat& B, int d);

/// Minimal polynomial basis by a degree sweep over M_d with shift-module filtering.
/// Throws DegreeOverflow when the sweep passes min(m, n) before the basis is complete.
MinimalBasis polynomial_kernel_basis(const Pencil& p, Side side, const RankTolerance& tol = {});

MinimalIndices minimal_indices(const Pencil& p, const RankTolerance& tol = {});

/// Worst chain-equation residual divided by (||A||_F + ||B||_F) * max_i ||c_i||.
double validate_chain(const Pencil& p, Side side, const ChainVector& v);

} // namespace daepencil
