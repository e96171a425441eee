#pragma once

#include "ddspc/pce_basis.hpp"
#include "ddspc/random.hpp"
#include "ddspc/types.hpp"

#include <optional>

namespace ddspc {

/// x_{k+1} = A x_k + B u_k + w_k. No controllability requirement on (A, B).
struct LtiSystem {
  Mat A;
  Mat B;

  LtiSystem(Mat a, Mat b);

  Index nx() const { return A.rows(); }
  Index nu() const { return B.cols(); }
};

/// i.i.d. process noise with independent components.
class NoiseSpec {
 public:
  enum class Kind { GaussianDiag, UniformBox };

  static NoiseSpec gaussian_diag(Vec variances);
  static NoiseSpec uniform_box(Vec half_widths);

  Kind kind() const { return kind_; }
  Index dim() const { return params_.size(); }
  /// Variances (GaussianDiag) or half-widths (UniformBox).
  const Vec& params() const { return params_; }
  Vec variance() const;
  /// Zero-mean germ family producing this noise.
  GermFamily germ() const;
  Vec sample(Rng& rng) const;

 private:
  NoiseSpec(Kind kind, Vec params);
  Kind kind_;
  Vec params_;
};

/// Axis-aligned box, used for input excitation.
struct InputBox {
  Vec lower;
  Vec upper;

  Index dim() const { return lower.size(); }
};

/// Recorded input-state data with noise realizations.
///
/// `w_hat` holds the noise the data-driven programs use (estimated, or the
/// true noise for exact-noise baselines). `w_true` is kept by the simulator so
/// experiments can compare against exact noise measurements.
struct DataRecord {
  Mat x;      ///< (T+1) x nx
  Mat u;      ///< T x nu
  Mat w_hat;  ///< T x nx
  std::optional<Mat> w_true;

  Index length() const { return u.rows(); }
  Index nx() const { return x.cols(); }
  Index nu() const { return u.cols(); }
  /// Copy of this record whose w_hat is the retained true noise.
  DataRecord with_exact_noise() const;
};

Vec step_realization(const LtiSystem& sys, const Vec& x, const Vec& u, const Vec& w);

/// Rows of `u_traj` / `w_traj` are time steps; returns (T+1) x nx.
Mat simulate_realization(const LtiSystem& sys, const Vec& x0, const Mat& u_traj,
                         const Mat& w_traj);

/// Galerkin-projected coefficient dynamics, one independent recursion per
/// basis index j. `u` and `w` need at least `steps` entries; the result has
/// steps + 1 entries starting with `x0`.
PceTrajectory propagate_pce(const LtiSystem& sys, const PceVector& x0,
                            const PceTrajectory& u, const PceTrajectory& w,
                            Index steps);

Mat sample_noise(const NoiseSpec& spec, Index T, Rng& rng);
Mat random_input(const InputBox& box, Index T, Rng& rng);

struct CollectionOptions {
  /// Initial state of the experiment (zero when empty).
  Vec x0;
  /// Optional static prior feedback u = -K x + e added to the uniform
  /// excitation e. Empty means pure open-loop excitation.
  Mat prior_gain;
};

/// Runs one excitation experiment of length T. Returns x, u and the true
/// noise in `w_true`; `w_hat` is left empty (filled by an estimator).
DataRecord collect_data(const LtiSystem& sys, const NoiseSpec& noise,
                        const InputBox& box, Index T, Rng& rng,
                        const CollectionOptions& options = {});

}  // namespace ddspc
