#pragma once

#include "ddspc/types.hpp"

namespace ddspc::linalg {

/// Relative factor of the rank tolerance: tau = sigma_max * max(rows, cols) * 2^-45.
inline constexpr double kRankToleranceFactor = 0x1p-45;

/// Singular value decomposition m = U diag(s) V^T, values largest first.
/// U and V are empty unless requested.
struct Svd {
  Vec s;
  Mat U;
  Mat V;
};

enum class SvdVectors { None, Thin, Full };

/// Divide-and-conquer SVD, recomputed by one-sided Jacobi when the result
/// fails validation: non-finite or unsorted values, or sum of s^2 differing
/// from ||m||_F^2 (observed on some rank-deficient inputs).
Svd svd(const Mat& m, SvdVectors u = SvdVectors::None,
        SvdVectors v = SvdVectors::None);

/// Singular values of `m`, largest first.
Vec singular_values(const Mat& m);

/// Rank threshold for a matrix with the given largest singular value.
/// `scale` multiplies the default factor (used to probe tolerance sensitivity).
double rank_tolerance(double sigma_max, Index rows, Index cols,
                      double scale = 1.0);

/// Numerical rank: number of singular values above rank_tolerance().
Index numerical_rank(const Mat& m, double scale = 1.0);

/// Moore-Penrose pseudoinverse, truncated at the rank tolerance.
Mat pseudo_inverse(const Mat& m);

/// Orthonormal basis (columns) of the null space of `m`.
Mat nullspace_basis(const Mat& m);

/// Orthonormal basis of the row space of `m` (columns span rowspace).
Mat rowspace_basis(const Mat& m);

}  // namespace ddspc::linalg
