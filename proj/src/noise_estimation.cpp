#include "ddspc/noise_estimation.hpp"

#include "ddspc/conic_solver.hpp"
#include "ddspc/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace ddspc {

namespace {

struct DataMatrices {
  Mat S;      // (nx + nu) x T
  Mat xplus;  // nx x T
  Mat V;      // T x r, orthonormal basis of the row space of S
};

DataMatrices data_matrices(const Mat& x, const Mat& u) {
  require_dims(x.rows() == u.rows() + 1, "state record must have one more row than the input");
  require_dims(u.rows() >= 1, "empty data record");
  const Index T = u.rows();
  const Index nx = x.cols();
  const Index nu = u.cols();
  DataMatrices d;
  d.S.resize(nx + nu, T);
  d.S.topRows(nx) = x.topRows(T).transpose();
  d.S.bottomRows(nu) = u.transpose();
  d.xplus = x.bottomRows(T).transpose();
  if (T < nx + nu || linalg::numerical_rank(d.S) < nx + nu) {
    throw PersistencyError("stacked state/input data [x; u] has rank below n_x + n_u = " +
                               std::to_string(nx + nu) +
                               "; the input is not persistently exciting of order 1",
                           1);
  }
  d.V = linalg::rowspace_basis(d.S);
  return d;
}

double projector_residual(const DataMatrices& d, const Mat& w_hat) {
  const Mat Y = d.xplus - w_hat.transpose();
  return (Y - (Y * d.V) * d.V.transpose()).norm() / std::max(1.0, d.xplus.norm());
}

EstimationResult least_squares(const DataMatrices& d) {
  EstimationResult r;
  const Mat wt = d.xplus - (d.xplus * d.V) * d.V.transpose();
  r.w_hat = wt.transpose();
  r.projector_residual = projector_residual(d, r.w_hat);
  r.method = EstimationMethod::LeastSquares;
  return r;
}

// min_beta sum_k |y_k - S_k^T beta| as a linear program in (beta, t).
Vec least_absolute_deviations(const Mat& S, const Vec& y) {
  const Index p = S.rows();
  const Index T = S.cols();
  StandardProblem lp;
  lp.P = Mat::Zero(p + T, p + T);
  lp.q = Vec::Zero(p + T);
  lp.q.tail(T).setOnes();
  std::vector<Triplet> trip;
  lp.h.resize(2 * T);
  for (Index k = 0; k < T; ++k) {
    // y_k - S_k^T beta <= t_k and S_k^T beta - y_k <= t_k.
    for (Index i = 0; i < p; ++i) {
      trip.emplace_back(k, i, -S(i, k));
      trip.emplace_back(T + k, i, S(i, k));
    }
    trip.emplace_back(k, p + k, -1.0);
    trip.emplace_back(T + k, p + k, -1.0);
    lp.h(k) = -y(k);
    lp.h(T + k) = y(k);
  }
  lp.G.resize(2 * T, p + T);
  lp.G.setFromTriplets(trip.begin(), trip.end());
  lp.cones.nonneg = 2 * T;
  SolveSettings settings;
  settings.abs_tol = settings.rel_tol = 1e-10;
  const SolveResult res = solve_standard(lp, settings);
  if (res.report.status != SolveStatus::Optimal) {
    throw std::runtime_error(std::string("least-absolute-deviation program ended with status ") +
                             status_name(res.report.status));
  }
  return res.z.head(p);
}

// Damped Newton on f(beta) = sum_k rho(y_k - S_k^T beta) for convex rho.
Vec newton_fit(const Mat& S, const Vec& y, const Vec& beta0, const NoiseDensity& density,
               Index component) {
  auto objective = [&](const Vec& beta) {
    const Vec r = y - S.transpose() * beta;
    double f = 0.0;
    for (Index k = 0; k < r.size(); ++k) f += density.neg_log(r(k), component);
    return f;
  };
  Vec beta = beta0;
  double f = objective(beta);
  for (int it = 0; it < 100; ++it) {
    const Vec r = y - S.transpose() * beta;
    Vec d1(r.size()), d2(r.size());
    for (Index k = 0; k < r.size(); ++k) {
      d1(k) = density.neg_log_d1(r(k), component);
      d2(k) = density.neg_log_d2(r(k), component);
      if (d2(k) < 0.0) {
        throw std::invalid_argument(
            "noise density is not log-concave: negative curvature of -log p at w = " +
            std::to_string(r(k)));
      }
    }
    const Vec grad = -S * d1;
    Mat H = S * d2.asDiagonal() * S.transpose();
    H.diagonal().array() += 1e-12 * (1.0 + H.diagonal().cwiseAbs().maxCoeff());
    const Vec step = -H.ldlt().solve(grad);
    const double decrement = -grad.dot(step);
    if (!(decrement > 1e-20 * (1.0 + std::abs(f)))) break;
    double t = 1.0;
    double f_new = objective(beta + t * step);
    while (!(f_new <= f - 0.25 * t * decrement) && t > 1e-12) {
      t *= 0.5;
      f_new = objective(beta + t * step);
    }
    if (t <= 1e-12) break;
    beta += t * step;
    f = f_new;
  }
  return beta;
}

}  // namespace

EstimationResult estimate_noise_ls(const Mat& x, const Mat& u) {
  return least_squares(data_matrices(x, u));
}

EstimationResult estimate_noise_ml(const Mat& x, const Mat& u, const NoiseDensity& density) {
  using Kind = NoiseDensity::Kind;
  if (density.kind == Kind::StudentT) {
    throw std::invalid_argument(
        "Student-t noise density is not log-concave; the likelihood estimator needs a convex "
        "negative log-density");
  }
  if (density.kind == Kind::Custom) {
    require(static_cast<bool>(density.neg_log) && static_cast<bool>(density.neg_log_d1) &&
                static_cast<bool>(density.neg_log_d2),
            "custom noise density needs -log p and its first two derivatives");
  }
  const DataMatrices d = data_matrices(x, u);
  EstimationResult r = least_squares(d);
  r.method = EstimationMethod::MaxLikelihood;
  switch (density.kind) {
    case Kind::Gaussian:
      return r;
    case Kind::Uniform:
      r.least_squares_fallback = true;
      r.note = "uniform likelihood is constant on its support; least-squares estimate returned";
      return r;
    case Kind::Laplace:
    case Kind::Custom: {
      // w_c = x+_c - beta_c^T S, fitted per state component.
      const Mat beta_ls = d.S.transpose().completeOrthogonalDecomposition().solve(
          d.xplus.transpose());
      Mat wt(d.xplus.rows(), d.xplus.cols());
      for (Index c = 0; c < d.xplus.rows(); ++c) {
        const Vec y = d.xplus.row(c).transpose();
        const Vec beta = density.kind == Kind::Laplace
                             ? least_absolute_deviations(d.S, y)
                             : newton_fit(d.S, y, beta_ls.col(c), density, c);
        wt.row(c) = (y - d.S.transpose() * beta).transpose();
      }
      r.w_hat = wt.transpose();
      r.projector_residual = projector_residual(d, r.w_hat);
      return r;
    }
    case Kind::StudentT:
      break;
  }
  return r;
}

}  // namespace ddspc
