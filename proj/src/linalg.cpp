#include "ddspc/linalg.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace ddspc::linalg {

namespace {

unsigned svd_options(SvdVectors u, SvdVectors v) {
  unsigned o = 0;
  if (u == SvdVectors::Thin) o |= Eigen::ComputeThinU;
  if (u == SvdVectors::Full) o |= Eigen::ComputeFullU;
  if (v == SvdVectors::Thin) o |= Eigen::ComputeThinV;
  if (v == SvdVectors::Full) o |= Eigen::ComputeFullV;
  return o;
}

bool plausible(const Vec& s, double frob2) {
  if (!s.allFinite()) return false;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) < 0.0 || (i > 0 && s(i) > s(i - 1) * (1.0 + 1e-12))) return false;
  }
  return std::abs(s.squaredNorm() - frob2) <= 1e-8 * std::max(frob2, 1e-300);
}

template <class Solver>
Svd unpack(const Solver& d, SvdVectors u, SvdVectors v) {
  Svd out;
  out.s = d.singularValues();
  if (u != SvdVectors::None) out.U = d.matrixU();
  if (v != SvdVectors::None) out.V = d.matrixV();
  return out;
}

Index rank_from(const Vec& sv, Index rows, Index cols, double scale) {
  if (sv.size() == 0) return 0;
  const double tol = rank_tolerance(sv(0), rows, cols, scale);
  Index r = 0;
  while (r < sv.size() && sv(r) > tol) ++r;
  return r;
}

}  // namespace

Svd svd(const Mat& m, SvdVectors u, SvdVectors v) {
  if (m.size() == 0) {
    const auto basis = [](SvdVectors k, Index n) {
      if (k == SvdVectors::None) return Mat();
      return k == SvdVectors::Full ? Mat(Mat::Identity(n, n)) : Mat(n, 0);
    };
    return {Vec(), basis(u, m.rows()), basis(v, m.cols())};
  }
  const unsigned o = svd_options(u, v);
  if (m.allFinite()) {
    Eigen::BDCSVD<Mat> d(m, o);
    if (d.info() == Eigen::Success && plausible(d.singularValues(), m.squaredNorm())) {
      return unpack(d, u, v);
    }
  }
  return unpack(Eigen::JacobiSVD<Mat>(m, o), u, v);
}

Vec singular_values(const Mat& m) {
  if (m.size() == 0) return Vec();
  return svd(m).s;
}

double rank_tolerance(double sigma_max, Index rows, Index cols, double scale) {
  return sigma_max * static_cast<double>(std::max(rows, cols)) *
         kRankToleranceFactor * scale;
}

Index numerical_rank(const Mat& m, double scale) {
  return rank_from(singular_values(m), m.rows(), m.cols(), scale);
}

Mat pseudo_inverse(const Mat& m) {
  if (m.size() == 0) return Mat::Zero(m.cols(), m.rows());
  const Svd d = svd(m, SvdVectors::Thin, SvdVectors::Thin);
  const Index r = rank_from(d.s, m.rows(), m.cols(), 1.0);
  return d.V.leftCols(r) * d.s.head(r).cwiseInverse().asDiagonal() *
         d.U.leftCols(r).transpose();
}

Mat nullspace_basis(const Mat& m) {
  if (m.rows() == 0) return Mat::Identity(m.cols(), m.cols());
  if (m.cols() == 0) return Mat(0, 0);
  const Svd d = svd(m, SvdVectors::None, SvdVectors::Full);
  const Index r = rank_from(d.s, m.rows(), m.cols(), 1.0);
  return d.V.rightCols(m.cols() - r);
}

Mat rowspace_basis(const Mat& m) {
  if (m.rows() == 0 || m.cols() == 0) return Mat(m.cols(), 0);
  const Svd d = svd(m, SvdVectors::None, SvdVectors::Thin);
  const Index r = rank_from(d.s, m.rows(), m.cols(), 1.0);
  return d.V.leftCols(r);
}

}  // namespace ddspc::linalg
