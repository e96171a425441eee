#include "ddspc/lti_sim.hpp"

#include <cmath>

namespace ddspc {

LtiSystem::LtiSystem(Mat a, Mat b) : A(std::move(a)), B(std::move(b)) {
  require_dims(A.rows() == A.cols(), "A must be square");
  require_dims(B.rows() == A.rows(), "B must have as many rows as A");
}

NoiseSpec::NoiseSpec(Kind kind, Vec params) : kind_(kind), params_(std::move(params)) {
  for (Index c = 0; c < params_.size(); ++c) {
    require(params_(c) >= 0.0 && std::isfinite(params_(c)),
            "noise parameters must be finite and nonnegative");
  }
}

NoiseSpec NoiseSpec::gaussian_diag(Vec variances) {
  return NoiseSpec(Kind::GaussianDiag, std::move(variances));
}

NoiseSpec NoiseSpec::uniform_box(Vec half_widths) {
  return NoiseSpec(Kind::UniformBox, std::move(half_widths));
}

Vec NoiseSpec::variance() const {
  return kind_ == Kind::GaussianDiag ? params_ : Vec(params_.cwiseAbs2() / 3.0);
}

GermFamily NoiseSpec::germ() const {
  if (kind_ == Kind::GaussianDiag) {
    return GermFamily::gaussian(Vec::Zero(dim()), params_.cwiseSqrt());
  }
  return GermFamily::uniform(-params_, params_);
}

Vec NoiseSpec::sample(Rng& rng) const {
  Vec w(dim());
  for (Index c = 0; c < dim(); ++c) {
    w(c) = kind_ == Kind::GaussianDiag
               ? std::sqrt(params_(c)) * rng.standard_normal()
               : (params_(c) > 0.0 ? rng.uniform(-params_(c), params_(c)) : 0.0);
  }
  return w;
}

DataRecord DataRecord::with_exact_noise() const {
  require(w_true.has_value(), "record carries no true noise");
  DataRecord out = *this;
  out.w_hat = *w_true;
  return out;
}

Vec step_realization(const LtiSystem& sys, const Vec& x, const Vec& u, const Vec& w) {
  require_dims(x.size() == sys.nx() && w.size() == sys.nx() && u.size() == sys.nu(),
               "state, input or noise dimension mismatch");
  return sys.A * x + sys.B * u + w;
}

Mat simulate_realization(const LtiSystem& sys, const Vec& x0, const Mat& u_traj,
                         const Mat& w_traj) {
  require_dims(u_traj.rows() == w_traj.rows(), "input and noise lengths differ");
  require_dims(u_traj.cols() == sys.nu() && w_traj.cols() == sys.nx() &&
                   x0.size() == sys.nx(),
               "trajectory dimension mismatch");
  const Index T = u_traj.rows();
  Mat x(T + 1, sys.nx());
  x.row(0) = x0.transpose();
  for (Index k = 0; k < T; ++k) {
    x.row(k + 1) = (sys.A * x.row(k).transpose() + sys.B * u_traj.row(k).transpose() +
                    w_traj.row(k).transpose())
                       .transpose();
  }
  return x;
}

PceTrajectory propagate_pce(const LtiSystem& sys, const PceVector& x0,
                            const PceTrajectory& u, const PceTrajectory& w,
                            Index steps) {
  require(x0.basis && u.basis && w.basis, "PCE trajectories need a basis");
  require(*x0.basis == *u.basis && *x0.basis == *w.basis,
          "PCE trajectories use different bases");
  require_dims(u.length() >= steps && w.length() >= steps,
               "input or noise trajectory shorter than the requested steps");
  require_dims(x0.dim() == sys.nx() && (steps == 0 || (u.dim() == sys.nu() &&
                                                       w.dim() == sys.nx())),
               "PCE dimension mismatch");
  PceTrajectory x;
  x.basis = x0.basis;
  x.steps.reserve(static_cast<size_t>(steps + 1));
  x.steps.push_back(x0.coefficients);
  // Rows are basis indices, so x^j_{k+1} = A x^j_k + B u^j_k + w^j_k for all j
  // is one product per step on the transposed layout.
  for (Index k = 0; k < steps; ++k) {
    const auto ku = static_cast<size_t>(k);
    x.steps.push_back(x.steps.back() * sys.A.transpose() +
                      u.steps[ku] * sys.B.transpose() + w.steps[ku]);
  }
  return x;
}

Mat sample_noise(const NoiseSpec& spec, Index T, Rng& rng) {
  require(T >= 1, "trajectory length must be positive");
  Mat w(T, spec.dim());
  for (Index k = 0; k < T; ++k) w.row(k) = spec.sample(rng).transpose();
  return w;
}

Mat random_input(const InputBox& box, Index T, Rng& rng) {
  require(T >= 1, "trajectory length must be positive");
  require_dims(box.lower.size() == box.upper.size(), "input box bounds differ in size");
  for (Index c = 0; c < box.dim(); ++c) {
    require(box.lower(c) < box.upper(c), "input box is empty");
  }
  Mat u(T, box.dim());
  for (Index k = 0; k < T; ++k) {
    for (Index c = 0; c < box.dim(); ++c) u(k, c) = rng.uniform(box.lower(c), box.upper(c));
  }
  return u;
}

DataRecord collect_data(const LtiSystem& sys, const NoiseSpec& noise,
                        const InputBox& box, Index T, Rng& rng,
                        const CollectionOptions& options) {
  require_dims(box.dim() == sys.nu() && noise.dim() == sys.nx(),
               "input box or noise dimension mismatch");
  const bool feedback = options.prior_gain.size() > 0;
  if (feedback) {
    require_dims(options.prior_gain.rows() == sys.nu() &&
                     options.prior_gain.cols() == sys.nx(),
                 "prior gain must be nu x nx");
  }
  const Mat excitation = random_input(box, T, rng);
  const Mat w = sample_noise(noise, T, rng);

  DataRecord rec;
  rec.x.resize(T + 1, sys.nx());
  rec.u.resize(T, sys.nu());
  if (options.x0.size() == 0) {
    rec.x.row(0).setZero();
  } else {
    require_dims(options.x0.size() == sys.nx(), "initial state dimension mismatch");
    rec.x.row(0) = options.x0.transpose();
  }
  for (Index k = 0; k < T; ++k) {
    Vec uk = excitation.row(k).transpose();
    if (feedback) uk -= options.prior_gain * rec.x.row(k).transpose();
    rec.u.row(k) = uk.transpose();
    rec.x.row(k + 1) =
        step_realization(sys, rec.x.row(k).transpose(), uk, w.row(k).transpose())
            .transpose();
  }
  rec.w_hat.resize(0, sys.nx());
  rec.w_true = w;
  return rec;
}

}  // namespace ddspc
