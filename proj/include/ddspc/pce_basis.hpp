#pragma once

#include "ddspc/random.hpp"
#include "ddspc/types.hpp"

#include <memory>
#include <optional>
#include <utility>
#include <vector>

namespace ddspc {

/// Orthogonal polynomial family attached to a germ distribution.
enum class GermKind {
  HermiteGaussian,  ///< probabilists' Hermite, standard normal germ
  LegendreUniform,  ///< Legendre, uniform germ on [-1, 1]
};

/// Distribution family of a vector random variable with independent
/// components, each an affine image of a standard germ.
///
/// Gaussian components are (mean, stddev); a zero stddev marks a
/// deterministic component. Uniform components are (lower, upper); lower ==
/// upper marks a deterministic component. Only stochastic components carry a
/// germ, so `dimension()` may be smaller than `components()`.
class GermFamily {
 public:
  static GermFamily gaussian(Vec mean, Vec stddev);
  static GermFamily uniform(Vec lower, Vec upper);

  GermKind kind() const { return kind_; }
  Index components() const { return first_.size(); }
  Index dimension() const;
  bool is_stochastic(Index component) const;

  Vec mean() const;
  Vec variance() const;
  /// Coefficient multiplying the degree-1 germ polynomial of `component`.
  double spread(Index component) const;

  const Vec& first() const { return first_; }
  const Vec& second() const { return second_; }

 private:
  GermFamily(GermKind kind, Vec first, Vec second);

  GermKind kind_;
  Vec first_;
  Vec second_;
};

enum class BlockLabel { Constant, InitialState, Noise };

/// One basis polynomial of the horizon basis.
struct BasisFunction {
  BlockLabel block = BlockLabel::Constant;
  Index block_index = 0;  ///< noise block i (0 for other blocks)
  Index component = 0;    ///< component of the underlying random vector
  GermKind kind = GermKind::HermiteGaussian;
};

/// Horizon-wide orthogonal basis
///   [1, initial-state germs (L_x), noise block 0 (L_w), ..., noise block N-1].
///
/// Every stochastic germ component contributes one degree-1 polynomial.
/// Immutable after construction.
class JointBasis {
 public:
  static JointBasis build_horizon_basis(
      const std::optional<GermFamily>& initial_state_germ,
      const GermFamily& noise_germ, Index horizon);

  Index total_terms() const { return static_cast<Index>(functions_.size()); }
  /// L, the index of the last basis function.
  Index last_index() const { return total_terms() - 1; }
  Index initial_terms() const { return initial_terms_; }
  Index noise_terms() const { return noise_terms_; }
  Index horizon() const { return horizon_; }

  /// First basis index of noise block `i`.
  Index noise_block_offset(Index i) const;

  const BasisFunction& function(Index j) const;
  BlockLabel block_of(Index j) const { return function(j).block; }

  double norm_squared(Index j) const;
  const Vec& norms() const { return norms_; }

  const std::optional<GermFamily>& initial_state_germ() const {
    return initial_germ_;
  }
  const GermFamily& noise_germ() const { return noise_germ_; }

  /// Draws one germ value per basis function j = 1..L.
  Vec sample_germ(Rng& rng) const;
  /// phi^j(omega) for j = 0..L.
  Vec evaluate(const Vec& germ) const;

  bool operator==(const JointBasis& other) const;

 private:
  JointBasis(std::optional<GermFamily> initial, GermFamily noise, Index horizon);

  std::optional<GermFamily> initial_germ_;
  GermFamily noise_germ_;
  Index horizon_ = 0;
  Index initial_terms_ = 0;
  Index noise_terms_ = 0;
  std::vector<BasisFunction> functions_;
  Vec norms_;
};

using BasisPtr = std::shared_ptr<const JointBasis>;

/// Coefficients of a vector random variable: row j multiplies phi^j.
struct PceVector {
  Mat coefficients;  ///< (L+1) x n
  BasisPtr basis;

  PceVector() = default;
  PceVector(Mat c, BasisPtr b);

  Index dim() const { return coefficients.cols(); }
  Vec mean() const { return coefficients.row(0).transpose(); }
  /// Realization coefficients^T * phi(omega).
  Vec realize(const Vec& phi) const;
};

/// PCE coefficients over a time window; steps[i] is (L+1) x n.
struct PceTrajectory {
  std::vector<Mat> steps;
  BasisPtr basis;

  Index length() const { return static_cast<Index>(steps.size()); }
  Index dim() const { return steps.empty() ? 0 : steps.front().cols(); }
  PceVector at(Index i) const { return {steps.at(static_cast<size_t>(i)), basis}; }
};

/// (mean, variance) of a PCE vector, componentwise.
std::pair<Vec, Vec> moments(const PceVector& v);

/// Exact two-term-per-component expansion of the noise placed in block `i`.
PceVector canonical_noise_pce(const GermFamily& germ, const BasisPtr& basis,
                              Index noise_block);

/// Exact expansion of the initial state on the initial-state block.
PceVector canonical_initial_pce(const BasisPtr& basis);

/// Canonical noise expansions for blocks 0..N-1 (one per horizon step).
PceTrajectory canonical_noise_trajectory(const BasisPtr& basis);

}  // namespace ddspc
