#include "ddspc/pce_basis.hpp"

#include <cmath>
#include <string>

namespace ddspc {

GermFamily::GermFamily(GermKind kind, Vec first, Vec second)
    : kind_(kind), first_(std::move(first)), second_(std::move(second)) {
  require_dims(first_.size() == second_.size(),
               "germ family parameter vectors differ in length");
  for (Index c = 0; c < first_.size(); ++c) {
    require(std::isfinite(first_(c)) && std::isfinite(second_(c)),
            "germ family parameters must be finite");
    if (kind_ == GermKind::HermiteGaussian) {
      require(second_(c) >= 0.0, "Gaussian stddev must be nonnegative");
    } else {
      require(first_(c) <= second_(c),
              "uniform lower bound exceeds upper bound at component " +
                  std::to_string(c));
    }
  }
}

GermFamily GermFamily::gaussian(Vec mean, Vec stddev) {
  return GermFamily(GermKind::HermiteGaussian, std::move(mean), std::move(stddev));
}

GermFamily GermFamily::uniform(Vec lower, Vec upper) {
  return GermFamily(GermKind::LegendreUniform, std::move(lower), std::move(upper));
}

bool GermFamily::is_stochastic(Index c) const {
  return kind_ == GermKind::HermiteGaussian ? second_(c) > 0.0
                                            : first_(c) < second_(c);
}

Index GermFamily::dimension() const {
  Index d = 0;
  for (Index c = 0; c < components(); ++c) d += is_stochastic(c) ? 1 : 0;
  return d;
}

Vec GermFamily::mean() const {
  return kind_ == GermKind::HermiteGaussian ? first_ : Vec(0.5 * (first_ + second_));
}

double GermFamily::spread(Index c) const {
  return kind_ == GermKind::HermiteGaussian ? second_(c)
                                            : 0.5 * (second_(c) - first_(c));
}

Vec GermFamily::variance() const {
  Vec v(components());
  for (Index c = 0; c < components(); ++c) {
    const double s = spread(c);
    v(c) = kind_ == GermKind::HermiteGaussian ? s * s : s * s / 3.0;
  }
  return v;
}

namespace {

double degree_one_norm(GermKind kind) {
  // E[He_1(xi)^2] = 1 for xi ~ N(0,1); E[P_1(xi)^2] = 1/3 for xi ~ U(-1,1).
  return kind == GermKind::HermiteGaussian ? 1.0 : 1.0 / 3.0;
}

void append_block(std::vector<BasisFunction>& out, const GermFamily& germ,
                  BlockLabel label, Index block_index) {
  for (Index c = 0; c < germ.components(); ++c) {
    if (!germ.is_stochastic(c)) continue;
    out.push_back({label, block_index, c, germ.kind()});
  }
}

}  // namespace

JointBasis::JointBasis(std::optional<GermFamily> initial, GermFamily noise,
                       Index horizon)
    : initial_germ_(std::move(initial)), noise_germ_(std::move(noise)),
      horizon_(horizon) {}

JointBasis JointBasis::build_horizon_basis(
    const std::optional<GermFamily>& initial_state_germ,
    const GermFamily& noise_germ, Index horizon) {
  require(horizon >= 1, "horizon must be at least 1");
  JointBasis basis(initial_state_germ, noise_germ, horizon);
  basis.functions_.push_back({BlockLabel::Constant, 0, 0, GermKind::HermiteGaussian});
  if (initial_state_germ) {
    append_block(basis.functions_, *initial_state_germ, BlockLabel::InitialState, 0);
    basis.initial_terms_ = initial_state_germ->dimension();
  }
  basis.noise_terms_ = noise_germ.dimension();
  for (Index i = 0; i < horizon; ++i) {
    append_block(basis.functions_, noise_germ, BlockLabel::Noise, i);
  }
  basis.norms_.resize(basis.total_terms());
  basis.norms_(0) = 1.0;
  for (Index j = 1; j < basis.total_terms(); ++j) {
    basis.norms_(j) = degree_one_norm(basis.functions_[static_cast<size_t>(j)].kind);
  }
  return basis;
}

Index JointBasis::noise_block_offset(Index i) const {
  require(i >= 0 && i < horizon_, "noise block index out of range");
  return 1 + initial_terms_ + i * noise_terms_;
}

const BasisFunction& JointBasis::function(Index j) const {
  require(j >= 0 && j < total_terms(), "basis index out of range");
  return functions_[static_cast<size_t>(j)];
}

double JointBasis::norm_squared(Index j) const {
  require(j >= 0 && j < total_terms(), "basis index out of range");
  return norms_(j);
}

Vec JointBasis::sample_germ(Rng& rng) const {
  Vec germ(last_index());
  for (Index j = 1; j < total_terms(); ++j) {
    germ(j - 1) = functions_[static_cast<size_t>(j)].kind == GermKind::HermiteGaussian
                      ? rng.standard_normal()
                      : rng.uniform(-1.0, 1.0);
  }
  return germ;
}

Vec JointBasis::evaluate(const Vec& germ) const {
  require_dims(germ.size() == last_index(), "germ sample has wrong length");
  Vec phi(total_terms());
  phi(0) = 1.0;
  // He_1(xi) = xi and P_1(xi) = xi.
  phi.tail(last_index()) = germ;
  return phi;
}

bool JointBasis::operator==(const JointBasis& other) const {
  if (horizon_ != other.horizon_ || initial_terms_ != other.initial_terms_ ||
      noise_terms_ != other.noise_terms_ || total_terms() != other.total_terms()) {
    return false;
  }
  for (Index j = 0; j < total_terms(); ++j) {
    const auto& a = functions_[static_cast<size_t>(j)];
    const auto& b = other.functions_[static_cast<size_t>(j)];
    if (a.block != b.block || a.block_index != b.block_index ||
        a.component != b.component || a.kind != b.kind) {
      return false;
    }
  }
  return true;
}

PceVector::PceVector(Mat c, BasisPtr b) : coefficients(std::move(c)), basis(std::move(b)) {
  require(basis != nullptr, "PCE vector needs a basis");
  require_dims(coefficients.rows() == basis->total_terms(),
               "PCE coefficient rows must equal the number of basis terms");
}

Vec PceVector::realize(const Vec& phi) const {
  require_dims(phi.size() == coefficients.rows(), "basis evaluation has wrong length");
  return coefficients.transpose() * phi;
}

std::pair<Vec, Vec> moments(const PceVector& v) {
  const Vec& norms = v.basis->norms();
  Vec mean = v.coefficients.row(0).transpose();
  Vec var = Vec::Zero(v.dim());
  for (Index j = 1; j < v.coefficients.rows(); ++j) {
    var += norms(j) * v.coefficients.row(j).transpose().cwiseAbs2();
  }
  return {mean, var};
}

PceVector canonical_noise_pce(const GermFamily& germ, const BasisPtr& basis,
                              Index noise_block) {
  const GermFamily& ref = basis->noise_germ();
  require(germ.kind() == ref.kind() && germ.components() == ref.components() &&
              germ.dimension() == ref.dimension(),
          "noise germ does not match the basis noise blocks");
  const Index offset = basis->noise_block_offset(noise_block);
  Mat c = Mat::Zero(basis->total_terms(), germ.components());
  c.row(0) = germ.mean().transpose();
  Index k = 0;
  for (Index comp = 0; comp < germ.components(); ++comp) {
    if (!germ.is_stochastic(comp)) continue;
    c(offset + k, comp) = germ.spread(comp);
    ++k;
  }
  return {std::move(c), basis};
}

PceVector canonical_initial_pce(const BasisPtr& basis) {
  require(basis->initial_state_germ().has_value(),
          "basis has no initial-state block");
  const GermFamily& germ = *basis->initial_state_germ();
  Mat c = Mat::Zero(basis->total_terms(), germ.components());
  c.row(0) = germ.mean().transpose();
  Index k = 0;
  for (Index comp = 0; comp < germ.components(); ++comp) {
    if (!germ.is_stochastic(comp)) continue;
    c(1 + k, comp) = germ.spread(comp);
    ++k;
  }
  return {std::move(c), basis};
}

PceTrajectory canonical_noise_trajectory(const BasisPtr& basis) {
  PceTrajectory w;
  w.basis = basis;
  for (Index i = 0; i < basis->horizon(); ++i) {
    w.steps.push_back(canonical_noise_pce(basis->noise_germ(), basis, i).coefficients);
  }
  return w;
}

}  // namespace ddspc
