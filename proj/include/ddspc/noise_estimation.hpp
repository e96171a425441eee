#pragma once

#include "ddspc/types.hpp"

#include <functional>
#include <string>

namespace ddspc {

enum class EstimationMethod { LeastSquares, MaxLikelihood };

/// Reconstructed noise realizations, rows = time.
struct EstimationResult {
  Mat w_hat;  ///< T x nx
  /// ||(x+ - w_hat^T)(I - S^+ S)||_F / max(1, ||x+||_F), zero when the
  /// de-noised transitions lie in the row space of S = [x_{0..T-1}; u_{0..T-1}].
  double projector_residual = 0.0;
  EstimationMethod method = EstimationMethod::LeastSquares;
  /// Set when a likelihood without a unique maximizer fell back to least squares.
  bool least_squares_fallback = false;
  std::string note;
};

/// Closed-form estimate w_hat = x+ (I - S^+ S).
/// `x` is (T+1) x nx and `u` is T x nu (rows = time). Throws PersistencyError
/// when S lacks full row rank nx + nu.
EstimationResult estimate_noise_ls(const Mat& x, const Mat& u);

/// Per-component noise density for the likelihood estimator.
struct NoiseDensity {
  enum class Kind { Gaussian, Uniform, Laplace, StudentT, Custom };
  Kind kind = Kind::Gaussian;
  /// For Custom: negative log-density rho(w) of component `c` and its first
  /// two derivatives. rho must be convex (log-concave density).
  std::function<double(double, Index)> neg_log;
  std::function<double(double, Index)> neg_log_d1;
  std::function<double(double, Index)> neg_log_d2;

  static NoiseDensity gaussian() { return {Kind::Gaussian, {}, {}, {}}; }
  static NoiseDensity uniform() { return {Kind::Uniform, {}, {}, {}}; }
  static NoiseDensity laplace() { return {Kind::Laplace, {}, {}, {}}; }
  static NoiseDensity student_t() { return {Kind::StudentT, {}, {}, {}}; }
};

/// Maximum-likelihood estimate: minimizes sum_k rho(w_k) over the affine set
/// {w : (x+ - w)(I - S^+ S) = 0}, parameterized as w = x+ - C S.
///
/// Gaussian: the minimizer is the least-squares projection. Uniform: the
/// likelihood is flat on its support, so the least-squares estimate is
/// returned and flagged. Laplace: least absolute deviations, solved as a
/// linear program. Custom: damped Newton on a convex rho. Student-t and any
/// density whose rho is found nonconvex are rejected with std::invalid_argument.
EstimationResult estimate_noise_ml(const Mat& x, const Mat& u,
                                   const NoiseDensity& density);

}  // namespace ddspc
