#include "ddspc/conic_solver.hpp"
#include "ddspc/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ddspc {

void SolveSettings::validate() const {
  require(abs_tol > 0.0 && rel_tol > 0.0, "solver tolerances must be positive");
  require(infeasibility_tol > 0.0, "infeasibility tolerance must be positive");
  require(max_iters > 0, "max_iters must be positive");
}

const char* status_name(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::PrimalInfeasible: return "PrimalInfeasible";
    case SolveStatus::DualInfeasible: return "DualInfeasible";
    case SolveStatus::IterLimit: return "IterLimit";
  }
  return "?";
}

Index ConeDims::total() const {
  return nonneg + std::accumulate(soc.begin(), soc.end(), Index{0});
}

double FeasibilityReport::worst() const {
  return std::max({equality_residual, inequality_violation, cone_violation, fixed_violation});
}

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

// Cone arithmetic on the product R^l_+ x SOC x ... (rows in order).
class ConeOps {
 public:
  explicit ConeOps(const ConeDims& dims) : dims_(dims) {
    Index off = dims.nonneg;
    for (Index d : dims.soc) {
      require(d >= 1, "second-order cones need at least one row");
      offsets_.push_back(off);
      off += d;
    }
    eta_.assign(dims.soc.size(), 1.0);
    wbar_.resize(dims.soc.size());
    for (size_t c = 0; c < dims.soc.size(); ++c) wbar_[c] = unit(dims.soc[c]);
    w_lin_ = Vec::Ones(dims.nonneg);
  }

  Index socs() const { return static_cast<Index>(dims_.soc.size()); }
  Index offset(Index c) const { return offsets_[static_cast<size_t>(c)]; }
  Index dim(Index c) const { return dims_.soc[static_cast<size_t>(c)]; }
  double degree() const { return static_cast<double>(dims_.degree()); }

  static Vec unit(Index d) {
    Vec e = Vec::Zero(d);
    e(0) = 1.0;
    return e;
  }

  void add_identity(Vec& v, double a) const {
    v.head(dims_.nonneg).array() += a;
    for (Index c = 0; c < socs(); ++c) v(offset(c)) += a;
  }

  double min_eig(const Vec& v) const {
    double m = std::numeric_limits<double>::infinity();
    if (dims_.nonneg > 0) m = v.head(dims_.nonneg).minCoeff();
    for (Index c = 0; c < socs(); ++c) {
      const auto seg = v.segment(offset(c), dim(c));
      m = std::min(m, seg(0) - seg.tail(dim(c) - 1).norm());
    }
    return m;
  }

  void shift_into_cone(Vec& v) const {
    const double a = min_eig(v);
    if (!(a < std::sqrt(kEps))) return;
    add_identity(v, 1.0 + std::max(0.0, -a));
  }

  // Largest alpha with v + alpha dv in the cone (capped at `cap`).
  double max_step(const Vec& v, const Vec& dv, double cap) const {
    double alpha = cap;
    for (Index i = 0; i < dims_.nonneg; ++i) {
      if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
    }
    for (Index c = 0; c < socs(); ++c) {
      const Index o = offset(c), d = dim(c);
      alpha = std::min(alpha, soc_step(v.segment(o, d), dv.segment(o, d), cap));
    }
    return std::max(alpha, 0.0);
  }

  // Nesterov-Todd scaling at (s, z); returns lambda = W z.
  void update_scaling(const Vec& s, const Vec& z, Vec& lambda) {
    lambda.resize(s.size());
    for (Index i = 0; i < dims_.nonneg; ++i) {
      w_lin_(i) = std::sqrt(s(i) / z(i));
      lambda(i) = std::sqrt(s(i) * z(i));
    }
    for (Index c = 0; c < socs(); ++c) {
      const Index o = offset(c), d = dim(c);
      const auto sc = s.segment(o, d);
      const auto zc = z.segment(o, d);
      const double sres = soc_residual(sc);
      const double zres = soc_residual(zc);
      const Vec sbar = sc / std::sqrt(sres);
      const Vec zbar = zc / std::sqrt(zres);
      const double gamma = std::sqrt(std::max(0.5 * (1.0 + sbar.dot(zbar)), kEps));
      Vec& w = wbar_[static_cast<size_t>(c)];
      w(0) = (sbar(0) + zbar(0)) / (2.0 * gamma);
      w.tail(d - 1) = (sbar.tail(d - 1) - zbar.tail(d - 1)) / (2.0 * gamma);
      // Renormalize onto the hyperboloid w0^2 - |w1|^2 = 1.
      w(0) = std::sqrt(1.0 + w.tail(d - 1).squaredNorm());
      eta_[static_cast<size_t>(c)] = std::pow(sres / zres, 0.25);
    }
    apply_w(z, lambda, false);
  }

  // out = W v (inverse = false) or W^{-1} v (inverse = true); W symmetric.
  void apply_w(const Vec& v, Vec& out, bool inverse) const {
    out.resize(v.size());
    if (inverse) {
      out.head(dims_.nonneg) = v.head(dims_.nonneg).cwiseQuotient(w_lin_);
    } else {
      out.head(dims_.nonneg) = v.head(dims_.nonneg).cwiseProduct(w_lin_);
    }
    for (Index c = 0; c < socs(); ++c) {
      const Index o = offset(c), d = dim(c);
      const Vec& w = wbar_[static_cast<size_t>(c)];
      const double sign = inverse ? -1.0 : 1.0;
      const double scale = inverse ? 1.0 / eta_[static_cast<size_t>(c)]
                                   : eta_[static_cast<size_t>(c)];
      const auto vc = v.segment(o, d);
      const double w1v1 = w.tail(d - 1).dot(vc.tail(d - 1));
      const double v0 = vc(0);
      out(o) = scale * (w(0) * v0 + sign * w1v1);
      out.segment(o + 1, d - 1) =
          scale * (vc.tail(d - 1) + (sign * v0 + w1v1 / (1.0 + w(0))) * w.tail(d - 1));
    }
  }

  // out = W^{-2} v.
  void apply_w_inv_sq(const Vec& v, Vec& out) const {
    Vec tmp;
    apply_w(v, tmp, true);
    apply_w(tmp, out, true);
  }

  // Jordan product a o b.
  void jordan(const Vec& a, const Vec& b, Vec& out) const {
    out.resize(a.size());
    out.head(dims_.nonneg) = a.head(dims_.nonneg).cwiseProduct(b.head(dims_.nonneg));
    for (Index c = 0; c < socs(); ++c) {
      const Index o = offset(c), d = dim(c);
      const auto ac = a.segment(o, d);
      const auto bc = b.segment(o, d);
      out(o) = ac.dot(bc);
      out.segment(o + 1, d - 1) = ac(0) * bc.tail(d - 1) + bc(0) * ac.tail(d - 1);
    }
  }

  // Solves lambda o u = d for u.
  void jordan_div(const Vec& lambda, const Vec& d, Vec& out) const {
    out.resize(d.size());
    out.head(dims_.nonneg) = d.head(dims_.nonneg).cwiseQuotient(lambda.head(dims_.nonneg));
    for (Index c = 0; c < socs(); ++c) {
      const Index o = offset(c), k = dim(c);
      const auto l = lambda.segment(o, k);
      const auto dc = d.segment(o, k);
      const double det = soc_residual(l);
      const double u0 = (l(0) * dc(0) - l.tail(k - 1).dot(dc.tail(k - 1))) / det;
      out(o) = u0;
      out.segment(o + 1, k - 1) = (dc.tail(k - 1) - u0 * l.tail(k - 1)) / l(0);
    }
  }

  // Row weights and rank-one terms of G^T W^{-2} G:
  //   nonneg row i: z_i / s_i;
  //   cone c: eta^-2 (2 (J w) (J w)^T - J).
  void normal_weights(Vec& row_weight) const {
    row_weight.resize(dims_.total());
    row_weight.head(dims_.nonneg) = w_lin_.cwiseAbs2().cwiseInverse();
    for (Index c = 0; c < socs(); ++c) {
      const double e2 = 1.0 / (eta_[static_cast<size_t>(c)] * eta_[static_cast<size_t>(c)]);
      row_weight(offset(c)) = -e2;
      row_weight.segment(offset(c) + 1, dim(c) - 1).setConstant(e2);
    }
  }
  double rank_one_scale(Index c) const {
    const double e = eta_[static_cast<size_t>(c)];
    return 2.0 / (e * e);
  }
  // J wbar for cone c.
  Vec jw(Index c) const {
    Vec v = wbar_[static_cast<size_t>(c)];
    v.tail(v.size() - 1) *= -1.0;
    return v;
  }

  static double soc_residual(const Eigen::Ref<const Vec>& v) {
    const double n = v.tail(v.size() - 1).norm();
    return std::max((v(0) - n) * (v(0) + n), std::numeric_limits<double>::min());
  }

 private:
  static double soc_step(const Eigen::Ref<const Vec>& v, const Eigen::Ref<const Vec>& dv,
                         double cap) {
    const Index d = v.size();
    double alpha = cap;
    if (dv(0) < 0.0) alpha = std::min(alpha, -v(0) / dv(0));
    if (d == 1) return alpha;
    const double a = dv(0) * dv(0) - dv.tail(d - 1).squaredNorm();
    const double b = v(0) * dv(0) - v.tail(d - 1).dot(dv.tail(d - 1));
    const double c = std::max(soc_residual(v), 0.0);
    // f(t) = a t^2 + 2 b t + c, f(0) = c > 0; first positive root.
    const double disc = b * b - a * c;
    if (std::abs(a) < 1e-300) {
      if (b < 0.0) alpha = std::min(alpha, -c / (2.0 * b));
      return alpha;
    }
    if (disc < 0.0) return alpha;
    const double sq = std::sqrt(disc);
    const double qv = -(b + std::copysign(sq, b));
    double roots[2] = {qv / a, qv != 0.0 ? c / qv : std::numeric_limits<double>::infinity()};
    for (double r : roots) {
      if (r > 0.0) alpha = std::min(alpha, r);
    }
    return alpha;
  }

  ConeDims dims_;
  std::vector<Index> offsets_;
  Vec w_lin_;
  std::vector<double> eta_;
  std::vector<Vec> wbar_;
};

// Dense lower-triangular accumulation of P + sum_r w_r g_r g_r^T + rank-one terms.
void assemble_normal_matrix(const Mat& P, const SpMatRow& G, const Vec& row_weight,
                            const ConeOps& cones, bool rank_one, Mat& K) {
  K = P;
  for (Index r = 0; r < G.outerSize(); ++r) {
    const double w = row_weight(r);
    if (w == 0.0) continue;
    for (SpMatRow::InnerIterator a(G, r); a; ++a) {
      const double wa = w * a.value();
      for (SpMatRow::InnerIterator b(G, r); b; ++b) {
        if (b.col() > a.col()) break;
        K(a.col(), b.col()) += wa * b.value();
      }
    }
  }
  if (!rank_one) return;
  const Index n = P.rows();
  Vec v(n);
  for (Index c = 0; c < cones.socs(); ++c) {
    const Vec jw = cones.jw(c);
    v.setZero();
    for (Index k = 0; k < cones.dim(c); ++k) {
      for (SpMatRow::InnerIterator it(G, cones.offset(c) + k); it; ++it) {
        v(it.col()) += jw(k) * it.value();
      }
    }
    K.selfadjointView<Eigen::Lower>().rankUpdate(v, cones.rank_one_scale(c));
  }
}

struct Equilibration {
  Vec D;  // variable scaling
  Vec E;  // row scaling
  double c = 1.0;
};

Equilibration equilibrate(Mat& P, SpMatRow& G, Vec& q, Vec& h, const ConeDims& dims,
                          bool enabled) {
  const Index n = P.rows();
  const Index m = G.rows();
  Equilibration eq{Vec::Ones(n), Vec::Ones(m), 1.0};
  if (!enabled || n == 0) return eq;
  auto clamp = [](double v) { return std::clamp(v, 1e-4, 1e4); };
  for (int it = 0; it < 15; ++it) {
    Vec col = Vec::Zero(n);
    Vec row = Vec::Zero(m);
    for (Index j = 0; j < n; ++j) col(j) = P.col(j).cwiseAbs().maxCoeff();
    for (Index r = 0; r < m; ++r) {
      for (SpMatRow::InnerIterator a(G, r); a; ++a) {
        const double v = std::abs(a.value());
        row(r) = std::max(row(r), v);
        col(a.col()) = std::max(col(a.col()), v);
      }
    }
    Vec dD(n), dE(m);
    for (Index j = 0; j < n; ++j) dD(j) = col(j) > 1e-12 ? 1.0 / std::sqrt(col(j)) : 1.0;
    for (Index r = 0; r < m; ++r) dE(r) = row(r) > 1e-12 ? 1.0 / std::sqrt(row(r)) : 1.0;
    Index off = dims.nonneg;
    for (Index d : dims.soc) {
      const double mean = row.segment(off, d).mean();
      dE.segment(off, d).setConstant(mean > 1e-12 ? 1.0 / std::sqrt(mean) : 1.0);
      off += d;
    }
    for (Index j = 0; j < n; ++j) dD(j) = clamp(eq.D(j) * dD(j)) / eq.D(j);
    for (Index r = 0; r < m; ++r) dE(r) = clamp(eq.E(r) * dE(r)) / eq.E(r);
    P = dD.asDiagonal() * P * dD.asDiagonal();
    for (Index r = 0; r < m; ++r) {
      for (SpMatRow::InnerIterator a(G, r); a; ++a) a.valueRef() *= dE(r) * dD(a.col());
    }
    eq.D.array() *= dD.array();
    eq.E.array() *= dE.array();
    if ((dD.array() - 1.0).abs().maxCoeff() < 1e-3 &&
        (m == 0 || (dE.array() - 1.0).abs().maxCoeff() < 1e-3)) {
      break;
    }
  }
  q = eq.D.cwiseProduct(q);
  h = eq.E.cwiseProduct(h);
  double pmean = 0.0;
  for (Index j = 0; j < n; ++j) pmean += P.col(j).cwiseAbs().maxCoeff();
  pmean = n > 0 ? pmean / static_cast<double>(n) : 0.0;
  const double scale = std::max(pmean, inf_norm(q));
  eq.c = scale > 1e-12 ? std::clamp(1.0 / scale, 1e-4, 1e4) : 1.0;
  P *= eq.c;
  q *= eq.c;
  return eq;
}

class NormalSolver {
 public:
  NormalSolver(const Mat& P, const SpMatRow& G, const ConeOps& cones)
      : P_(P), G_(G), cones_(cones) {}

  bool factor(const Vec& row_weight, bool rank_one) {
    assemble_normal_matrix(P_, G_, row_weight, cones_, rank_one, K_);
    // Regularization relative to each diagonal entry, grown until the
    // factorization succeeds; refinement in solve() removes its effect.
    const Vec diag = K_.diagonal().cwiseAbs();
    const double floor = 1e-14 * (1.0 + inf_norm(diag));
    double rel = 1e-13;
    for (int attempt = 0; attempt < 10; ++attempt) {
      Mat Kr = K_;
      Kr.diagonal().array() += rel * diag.array() + floor;
      llt_.compute(Kr);
      if (llt_.info() == Eigen::Success) return true;
      rel *= 100.0;
    }
    return false;
  }

  // Solves [P G^T; G -H][x; z] = [r1; r2] with H = W^2 (scaled) or I, through
  // the normal equations, refining on the full system.
  void solve(const Vec& r1, const Vec& r2, bool scaled, Vec& x, Vec& z) const {
    base(r1, r2, scaled, x, z);
    const double bnorm = 1.0 + std::max(inf_norm(r1), inf_norm(r2));
    Vec dx, dz, hz;
    for (int it = 0; it < 20; ++it) {
      apply_h(z, scaled, hz);
      const Vec e1 = r1 - P_.selfadjointView<Eigen::Lower>() * x - G_.transpose() * z;
      const Vec e2 = r2 - G_ * x + hz;
      if (std::max(inf_norm(e1), inf_norm(e2)) <= 1e-15 * bnorm) break;
      base(e1, e2, scaled, dx, dz);
      x += dx;
      z += dz;
    }
  }

  void base(const Vec& r1, const Vec& r2, bool scaled, Vec& x, Vec& z) const {
    Vec hr2;
    apply_h_inv(r2, scaled, hr2);
    x = llt_.solve(r1 + G_.transpose() * hr2);
    apply_h_inv(G_ * x - r2, scaled, z);
  }
  void apply_h(const Vec& v, bool scaled, Vec& out) const {
    if (!scaled) {
      out = v;
      return;
    }
    Vec t;
    cones_.apply_w(v, t, false);
    cones_.apply_w(t, out, false);
  }
  void apply_h_inv(const Vec& v, bool scaled, Vec& out) const {
    if (!scaled) {
      out = v;
      return;
    }
    cones_.apply_w_inv_sq(v, out);
  }

 private:
  const Mat& P_;
  const SpMatRow& G_;
  const ConeOps& cones_;
  Mat K_;
  Eigen::LLT<Mat> llt_;
};

// Residual measure max(primal, dual, |s^T z|) in the original space.
double kkt_error(const StandardProblem& pr, const Vec& x, const Vec& s, const Vec& z) {
  const Vec Px = pr.P.selfadjointView<Eigen::Lower>() * x;
  const double pres = inf_norm(pr.G * x + s - pr.h);
  const double dres = inf_norm(Px + pr.G.transpose() * z + pr.q);
  return std::max({pres, dres, std::abs(s.dot(z))});
}

double soc_min_eig(const Eigen::Ref<const Vec>& v) {
  return v(0) - v.tail(v.size() - 1).norm();
}
double soc_max_eig(const Eigen::Ref<const Vec>& v) {
  return v(0) + v.tail(v.size() - 1).norm();
}

// Newton refinement of a converged interior-point solution on the exact
// optimality conditions. Each cone is classified from (s, z) as inactive
// (z = 0), vertex (s = 0) or boundary pair (s o z = 0 with both nonzero);
// the resulting square system is solved a few times with a dense LU. The
// polished point replaces the input only if it stays in the cones and
// lowers the KKT error.
void polish(const StandardProblem& pr, Vec& x, Vec& s, Vec& z, SolveReport& rep) {
  const Index n = x.size();
  const ConeDims& dims = pr.cones;
  enum class Kind { Inactive, Vertex, Pair };
  struct Block {
    Index offset, dim;
    bool linear;
    Kind kind;
  };
  std::vector<Block> blocks;
  for (Index i = 0; i < dims.nonneg; ++i) {
    blocks.push_back({i, 1, true, s(i) >= z(i) ? Kind::Inactive : Kind::Vertex});
  }
  Index off = dims.nonneg;
  for (Index d : dims.soc) {
    const auto sc = s.segment(off, d);
    const auto zc = z.segment(off, d);
    Kind kind = Kind::Pair;
    if (d == 1 || soc_min_eig(sc) >= soc_max_eig(zc)) kind = Kind::Inactive;
    if (d == 1 ? sc(0) < zc(0) : soc_min_eig(zc) >= soc_max_eig(sc)) kind = Kind::Vertex;
    blocks.push_back({off, d, d == 1, kind});
    off += d;
  }
  // Unknowns: x, then z of every non-inactive block.
  std::vector<Index> zpos(blocks.size(), -1);
  Index nz = 0;
  for (size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].kind == Kind::Inactive) continue;
    zpos[b] = n + nz;
    nz += blocks[b].dim;
  }
  const Index dim = n + nz;
  const Mat Gd = Mat(pr.G);
  const Mat Pf = Mat(pr.P.selfadjointView<Eigen::Lower>());

  Vec xb = x, zb = z;
  for (const auto& b : blocks) {
    if (b.kind == Kind::Inactive) zb.segment(b.offset, b.dim).setZero();
  }
  Vec sb = pr.h - pr.G * xb;
  for (const auto& b : blocks) {
    if (b.kind == Kind::Vertex) sb.segment(b.offset, b.dim).setZero();
  }
  const double before = kkt_error(pr, x, s, z);
  double best = before;
  double last = std::numeric_limits<double>::infinity();
  Vec bx = x, bs = s, bz = z;
  for (int it = 0; it < 6; ++it) {
    Mat J = Mat::Zero(dim, dim);
    Vec F = Vec::Zero(dim);
    J.topLeftCorner(n, n) = Pf;
    F.head(n) = Pf * xb + pr.q + pr.G.transpose() * zb;
    const Vec sfree = pr.h - pr.G * xb;
    for (size_t bi = 0; bi < blocks.size(); ++bi) {
      const Block& b = blocks[bi];
      if (b.kind == Kind::Inactive) continue;
      const Index p = zpos[bi];
      const auto Gb = Gd.middleRows(b.offset, b.dim);
      J.block(0, p, n, b.dim) = Gb.transpose();
      if (b.kind == Kind::Vertex) {
        J.block(p, 0, b.dim, n) = Gb;
        F.segment(p, b.dim) = -sfree.segment(b.offset, b.dim);
        continue;
      }
      // Arrow matrices of s and z; d(s o z) = Arw(z) ds + Arw(s) dz, ds = -G dx.
      const Vec sc = sfree.segment(b.offset, b.dim);
      const Vec zc = zb.segment(b.offset, b.dim);
      auto arrow = [&](const Vec& v) {
        Mat A = v(0) * Mat::Identity(b.dim, b.dim);
        A.row(0).tail(b.dim - 1) = v.tail(b.dim - 1).transpose();
        A.col(0).tail(b.dim - 1) = v.tail(b.dim - 1);
        return A;
      };
      const Mat Az = arrow(zc);
      J.block(p, 0, b.dim, n) = -Az * Gb;
      J.block(p, p, b.dim, b.dim) = arrow(sc);
      F(p) = sc.dot(zc);
      F.segment(p + 1, b.dim - 1) = sc(0) * zc.tail(b.dim - 1) + zc(0) * sc.tail(b.dim - 1);
    }
    // Degenerate vertices (more active rows than variables) make J singular;
    // the minimum-norm step still converges for the consistent system.
    const Eigen::PartialPivLU<Mat> lu(J);
    Vec step;
    if (lu.rcond() > 1e-12) step = lu.solve(-F);
    if (!(lu.rcond() > 1e-12) || !step.allFinite()) {
      step = Eigen::CompleteOrthogonalDecomposition<Mat>(J).solve(-F);
    }
    if (!step.allFinite()) break;
    xb += step.head(n);
    for (size_t bi = 0; bi < blocks.size(); ++bi) {
      if (zpos[bi] < 0) continue;
      zb.segment(blocks[bi].offset, blocks[bi].dim) += step.segment(zpos[bi], blocks[bi].dim);
    }
    sb = pr.h - pr.G * xb;
    for (const auto& b : blocks) {
      if (b.kind == Kind::Vertex) sb.segment(b.offset, b.dim).setZero();
    }
    // Cone membership up to rounding.
    bool inside = true;
    const double tol = 1e3 * kEps * (1.0 + std::max(inf_norm(sb), inf_norm(zb)));
    for (const auto& b : blocks) {
      const auto sc = sb.segment(b.offset, b.dim);
      const auto zc = zb.segment(b.offset, b.dim);
      const double ms = b.linear ? sc(0) : soc_min_eig(sc);
      const double mz = b.linear ? zc(0) : soc_min_eig(zc);
      if (ms < -tol || mz < -tol) inside = false;
    }
    // Early iterates may leave the cones by O(err^2); keep iterating while the
    // error contracts and accept only members.
    const double err = kkt_error(pr, xb, sb, zb);
    if (!(err < last)) break;
    last = err;
    if (inside && err < best) {
      best = err;
      bx = xb;
      bs = sb;
      bz = zb;
    }
  }
  if (best < before) {
    x = bx;
    s = bs;
    z = bz;
    rep.polished = true;
    const Vec Px = pr.P.selfadjointView<Eigen::Lower>() * x;
    rep.primal_residual = inf_norm(pr.G * x + s - pr.h);
    rep.dual_residual = inf_norm(Px + pr.G.transpose() * z + pr.q);
    rep.objective = 0.5 * x.dot(Px) + pr.q.dot(x);
    rep.gap = std::abs(x.dot(Px) + pr.q.dot(x) + pr.h.dot(z));
  }
}

}  // namespace

static SolveResult solve_standard_once(const StandardProblem& pr, const SolveSettings& st) {
  const Index n = pr.q.size();
  const Index m = pr.h.size();
  require_dims(pr.P.rows() == n && pr.P.cols() == n, "P must be n x n");
  require_dims(pr.G.rows() == m && pr.G.cols() == n, "G must be m x n");
  require_dims(pr.cones.total() == m, "cone dimensions do not cover the rows");

  SolveResult result;
  SolveReport& rep = result.report;
  if (n == 0) {
    result.z = Vec();
    const ConeOps cones(pr.cones);
    rep.status = m == 0 || cones.min_eig(pr.h) >= -st.abs_tol ? SolveStatus::Optimal
                                                              : SolveStatus::PrimalInfeasible;
    return result;
  }

  Mat P = pr.P;
  SpMatRow G = pr.G;
  G.makeCompressed();
  Vec q = pr.q;
  Vec h = pr.h;
  const Equilibration eq = equilibrate(P, G, q, h, pr.cones, st.equilibrate);

  ConeOps cones(pr.cones);
  NormalSolver kkt(P, G, cones);

  // Unscaled quantities for the termination tests.
  const double q_norm = inf_norm(pr.q);
  const double h_norm = inf_norm(pr.h);
  auto unscale = [&](const Vec& x, const Vec& s, const Vec& z, double tau, Vec& xu,
                     Vec& su, Vec& zu) {
    xu = eq.D.cwiseProduct(x) / tau;
    su = s.cwiseQuotient(eq.E) / tau;
    zu = eq.E.cwiseProduct(z) / (eq.c * tau);
  };

  // Initial point: solve with W = I, then shift into the cone.
  Vec x, s, z;
  {
    Vec ones = Vec::Ones(m);
    if (!kkt.factor(ones, false)) {
      rep.status = SolveStatus::IterLimit;
      result.z = Vec::Zero(n);
      return result;
    }
    kkt.solve(-q, h, false, x, z);
    s = -z;
    cones.shift_into_cone(s);
    cones.shift_into_cone(z);
  }
  double tau = 1.0, kappa = 1.0;

  Vec lambda, row_weight, xu, su, zu;
  const double nu = cones.degree();
  int stalls = 0;
  rep.status = SolveStatus::IterLimit;
  // Iterate closest to the stopping test, polished if the loop stalls.
  double best_merit = std::numeric_limits<double>::infinity();
  Vec best_x, best_s, best_z;

  for (int iter = 0; iter <= st.max_iters; ++iter) {
    rep.iterations = iter;
    const Vec Px = P.selfadjointView<Eigen::Lower>() * x;
    const double xPx = x.dot(Px);
    const Vec rx = Px + G.transpose() * z + q * tau;
    const Vec rz = G * x + s - h * tau;
    const double rtau = q.dot(x) + h.dot(z) + kappa + xPx / tau;

    // Termination in the original (unscaled) space.
    unscale(x, s, z, tau, xu, su, zu);
    const Vec Pxu = pr.P.selfadjointView<Eigen::Lower>() * xu;
    const Vec Gxu = pr.G * xu;
    const Vec GTzu = pr.G.transpose() * zu;
    const double pres = inf_norm(Gxu + su - pr.h);
    const double dres = inf_norm(Pxu + GTzu + pr.q);
    const double quad = xu.dot(Pxu);
    const double pobj = 0.5 * quad + pr.q.dot(xu);
    const double dobj = -0.5 * quad - pr.h.dot(zu);
    const double gap = std::abs(pobj - dobj);
    rep.primal_residual = pres;
    rep.dual_residual = dres;
    rep.gap = gap;
    rep.objective = pobj;
    result.z = xu;

    const bool primal_ok =
        pres <= st.abs_tol + st.rel_tol * std::max({h_norm, inf_norm(Gxu), inf_norm(su)});
    const bool dual_ok =
        dres <= st.abs_tol + st.rel_tol * std::max({q_norm, inf_norm(Pxu), inf_norm(GTzu)});
    const bool gap_ok =
        gap <= st.abs_tol + st.rel_tol * std::min(std::abs(pobj), std::abs(dobj));
    if (primal_ok && dual_ok && gap_ok) {
      rep.status = SolveStatus::Optimal;
      if (st.polish) polish(pr, result.z, su, zu, rep);
      return result;
    }
    {
      const double merit = std::max(
          {pres / (st.abs_tol + st.rel_tol * std::max({h_norm, inf_norm(Gxu), inf_norm(su)})),
           dres / (st.abs_tol + st.rel_tol * std::max({q_norm, inf_norm(Pxu), inf_norm(GTzu)})),
           gap / (st.abs_tol + st.rel_tol * std::min(std::abs(pobj), std::abs(dobj)))});
      if (merit < best_merit && std::isfinite(merit)) {
        best_merit = merit;
        best_x = xu;
        best_s = su;
        best_z = zu;
      }
    }

    // Infeasibility certificates on the homogeneous iterate.
    {
      const Vec xr = eq.D.cwiseProduct(x);
      const Vec zr = eq.E.cwiseProduct(z) / eq.c;
      const Vec sr = s.cwiseQuotient(eq.E);
      const double hz = pr.h.dot(zr);
      if (hz < 0.0 && inf_norm(pr.G.transpose() * zr) <= st.infeasibility_tol * -hz &&
          kappa > tau) {
        rep.status = SolveStatus::PrimalInfeasible;
        return result;
      }
      const double qx = pr.q.dot(xr);
      if (qx < 0.0 &&
          inf_norm(pr.P.selfadjointView<Eigen::Lower>() * xr) <= st.infeasibility_tol * -qx &&
          inf_norm(pr.G * xr + sr) <= st.infeasibility_tol * -qx && kappa > tau) {
        rep.status = SolveStatus::DualInfeasible;
        return result;
      }
    }
    if (iter == st.max_iters) break;

    const double mu = (s.dot(z) + tau * kappa) / (nu + 1.0);
    cones.update_scaling(s, z, lambda);
    cones.normal_weights(row_weight);
    if (!kkt.factor(row_weight, true)) break;

    // Direction for rhs [-q; h] (coefficient of d_tau).
    Vec x1, z1;
    kkt.solve(-q, h, true, x1, z1);
    const Vec q2Pxi = q + 2.0 * (Px / tau);
    const double xiPxi = xPx / (tau * tau);
    const double denom = q2Pxi.dot(x1) + h.dot(z1) - xiPxi - kappa / tau;

    struct Step {
      Vec dx, ds, dz;
      double dtau = 0.0, dkappa = 0.0;
    };
    auto direction = [&](double dscale, const Vec& d_s, double d_kappa) {
      const Vec dx = dscale * rx;
      const Vec dz = dscale * rz;
      const double dt = dscale * rtau;
      Vec u, wu, x2, z2;
      cones.jordan_div(lambda, d_s, u);
      cones.apply_w(u, wu, false);
      kkt.solve(-dx, -dz + wu, true, x2, z2);
      Step st2;
      st2.dtau = (-dt + d_kappa / tau - q2Pxi.dot(x2) - h.dot(z2)) / denom;
      st2.dx = x2 + st2.dtau * x1;
      st2.dz = z2 + st2.dtau * z1;
      Vec wdz;
      cones.apply_w(st2.dz, wdz, false);
      cones.apply_w(-(u + wdz), st2.ds, false);
      st2.dkappa = -(d_kappa + kappa * st2.dtau) / tau;
      return st2;
    };
    auto step_length = [&](const Step& d, double cap) {
      double a = cap;
      a = std::min(a, cones.max_step(s, d.ds, a));
      a = std::min(a, cones.max_step(z, d.dz, a));
      if (d.dtau < 0.0) a = std::min(a, -tau / d.dtau);
      if (d.dkappa < 0.0) a = std::min(a, -kappa / d.dkappa);
      return a;
    };

    Vec ll;
    cones.jordan(lambda, lambda, ll);
    const Step aff = direction(1.0, ll, tau * kappa);
    const double alpha_aff = step_length(aff, 1.0);
    const double sigma = std::pow(1.0 - alpha_aff, 3);

    Vec ws, wz, corr;
    cones.apply_w(aff.ds, ws, true);
    cones.apply_w(aff.dz, wz, false);
    cones.jordan(ws, wz, corr);
    Vec d_s = ll + corr;
    cones.add_identity(d_s, -sigma * mu);
    const double d_kappa = tau * kappa + aff.dtau * aff.dkappa - sigma * mu;
    const Step cmb = direction(1.0 - sigma, d_s, d_kappa);
    if (!cmb.dx.allFinite() || !cmb.ds.allFinite() || !cmb.dz.allFinite() ||
        !std::isfinite(cmb.dtau) || !std::isfinite(cmb.dkappa)) {
      break;
    }
    const double alpha = std::min(1.0, 0.99 * step_length(cmb, 1e30));
    if (!(alpha > 1e-10)) {
      if (++stalls > 3) break;
    }

    x += alpha * cmb.dx;
    s += alpha * cmb.ds;
    z += alpha * cmb.dz;
    tau += alpha * cmb.dtau;
    kappa += alpha * cmb.dkappa;
  }
  // Stalled near the solution: accept the polished best iterate only if it
  // passes the stopping test.
  if (best_merit < 1e6) {
    SolveReport pr_rep = rep;
    Vec bx = best_x, bs = best_s, bz = best_z;
    polish(pr, bx, bs, bz, pr_rep);
    const Vec Px = pr.P.selfadjointView<Eigen::Lower>() * bx;
    const Vec Gx = pr.G * bx;
    const Vec GTz = pr.G.transpose() * bz;
    const double pres = inf_norm(Gx + bs - pr.h);
    const double dres = inf_norm(Px + GTz + pr.q);
    const double pobj = 0.5 * bx.dot(Px) + pr.q.dot(bx);
    const double dobj = -0.5 * bx.dot(Px) - pr.h.dot(bz);
    const ConeOps cones_check(pr.cones);
    const double cone_tol = st.abs_tol;
    const bool inside = cones_check.min_eig(bs) >= -cone_tol && cones_check.min_eig(bz) >= -cone_tol;
    if (inside && bx.allFinite() &&
        pres <= st.abs_tol + st.rel_tol * std::max({h_norm, inf_norm(Gx), inf_norm(bs)}) &&
        dres <= st.abs_tol + st.rel_tol * std::max({q_norm, inf_norm(Px), inf_norm(GTz)}) &&
        std::abs(pobj - dobj) <= st.abs_tol + st.rel_tol * std::min(std::abs(pobj), std::abs(dobj))) {
      result.z = bx;
      rep.status = SolveStatus::Optimal;
      rep.polished = pr_rep.polished;
      rep.primal_residual = pres;
      rep.dual_residual = dres;
      rep.gap = std::abs(pobj - dobj);
      rep.objective = pobj;
    }
  }
  return result;
}

SolveResult solve_standard(const StandardProblem& pr, const SolveSettings& st) {
  st.validate();
  SolveResult first = solve_standard_once(pr, st);
  if (first.report.status != SolveStatus::IterLimit) return first;
  // A stalled run is retried with the other equilibration setting.
  SolveSettings alt = st;
  alt.equilibrate = !st.equilibrate;
  SolveResult second = solve_standard_once(pr, alt);
  return second.report.status == SolveStatus::IterLimit ? first : second;
}

// ---------------------------------------------------------------------------
// Presolve

namespace {

struct UnionFind {
  std::vector<Index> parent;
  explicit UnionFind(Index n) : parent(static_cast<size_t>(n)) {
    std::iota(parent.begin(), parent.end(), Index{0});
  }
  Index find(Index a) {
    while (parent[static_cast<size_t>(a)] != a) {
      parent[static_cast<size_t>(a)] = parent[static_cast<size_t>(parent[static_cast<size_t>(a)])];
      a = parent[static_cast<size_t>(a)];
    }
    return a;
  }
  void unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<size_t>(std::max(a, b))] = std::min(a, b);
  }
};

}  // namespace

// Null-space basis by Gauss-Jordan elimination. Pivots are taken first from
// columns of the lowest priority value (complete pivoting within a class),
// so those variables become functions of the remaining free ones.
static Mat elimination_nullspace(Mat M, const std::vector<int>& priority, Index rank) {
  const Index m = M.rows();
  const Index n = M.cols();
  std::vector<Index> pivot_col;
  std::vector<Index> pivot_row;
  std::vector<char> row_used(static_cast<size_t>(m), 0), col_basic(static_cast<size_t>(n), 0);
  const double scale = std::max(M.cwiseAbs().maxCoeff(), 1e-300);
  int max_class = 0;
  for (int p : priority) max_class = std::max(max_class, p);
  while (static_cast<Index>(pivot_col.size()) < rank) {
    Index br = -1, bc = -1;
    double best = 0.0;
    for (int cls = 0; cls <= max_class && br < 0; ++cls) {
      for (Index c = 0; c < n; ++c) {
        if (col_basic[static_cast<size_t>(c)] || priority[static_cast<size_t>(c)] != cls) continue;
        for (Index r = 0; r < m; ++r) {
          if (row_used[static_cast<size_t>(r)]) continue;
          const double a = std::abs(M(r, c));
          if (a > best) {
            best = a;
            br = r;
            bc = c;
          }
        }
      }
      if (best <= 1e-9 * scale) br = -1, bc = -1, best = 0.0;
    }
    if (br < 0) break;
    row_used[static_cast<size_t>(br)] = 1;
    col_basic[static_cast<size_t>(bc)] = 1;
    pivot_row.push_back(br);
    pivot_col.push_back(bc);
    M.row(br) /= M(br, bc);
    for (Index r = 0; r < m; ++r) {
      if (r != br && M(r, bc) != 0.0) M.row(r) -= M(r, bc) * M.row(br);
    }
  }
  std::vector<Index> free_cols;
  for (Index c = 0; c < n; ++c) {
    if (!col_basic[static_cast<size_t>(c)]) free_cols.push_back(c);
  }
  Mat Z = Mat::Zero(n, static_cast<Index>(free_cols.size()));
  for (size_t f = 0; f < free_cols.size(); ++f) {
    const Index c = free_cols[f];
    Z(c, static_cast<Index>(f)) = 1.0;
    for (size_t k = 0; k < pivot_col.size(); ++k) {
      Z(pivot_col[k], static_cast<Index>(f)) = -M(pivot_row[k], c);
    }
  }
  return Z;
}

struct PresolvedProgram::Impl {
  ConicProgram prog;
  SpMat G_full;  // solver-form rows: inequalities then cones
  Vec h_full;
  ConeDims full_dims;
  SpMat T;       // n x n_y
  Vec c0;        // z = T y + c0 + Cv v
  SpMat Cv;
  Mat P_red;
  SpMatRow G_red;  // kept rows only
  // Reduced row k has h = h_all(copy) (if copy >= 0) +- ||h_all(norm_of)||.
  struct ReducedRow {
    Index copy = -1;
    std::vector<Index> norm_of;
    bool subtract = false;
  };
  std::vector<ReducedRow> kept_rows;
  ConeDims kept_dims;
  // Row groups whose reduced rows are all zero: checked for membership then dropped.
  std::vector<std::pair<Index, Index>> constant_cones;  // (start, dim); dim 0 marks a nonneg row
  SpMatRow A_rows;

  void build();
  SolveResult solve(const Vec& v, const SolveSettings& st) const;
};

void PresolvedProgram::Impl::build() {
  prog.validate();
  const Index n = prog.num_vars();

  // Solver-form rows.
  {
    std::vector<Triplet> t;
    std::vector<double> hv;
    Index row = 0;
    const SpMat Ccol = prog.C;
    for (Index k = 0; k < Ccol.outerSize(); ++k) {
      for (SpMat::InnerIterator it(Ccol, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    }
    for (Index r = 0; r < prog.d.size(); ++r) hv.push_back(prog.d(r));
    row = prog.C.rows();
    full_dims.nonneg = row;
    for (const auto& c : prog.socs) {
      for (SpVec::InnerIterator it(c.g); it; ++it) t.emplace_back(row, it.index(), -it.value());
      hv.push_back(c.h);
      for (Index k = 0; k < c.F.outerSize(); ++k) {
        for (SpMat::InnerIterator it(c.F, k); it; ++it) {
          t.emplace_back(row + 1 + it.row(), it.col(), -it.value());
        }
      }
      for (Index r = 0; r < c.f.size(); ++r) hv.push_back(c.f(r));
      full_dims.soc.push_back(1 + c.F.rows());
      row += 1 + c.F.rows();
    }
    G_full.resize(row, n);
    G_full.setFromTriplets(t.begin(), t.end());
    h_full = Eigen::Map<Vec>(hv.data(), static_cast<Index>(hv.size()));
  }

  // Fixed / free partition.
  const Index nf = static_cast<Index>(prog.fixed.size());
  std::vector<Index> fixed_slot(static_cast<size_t>(n), -1);
  for (Index k = 0; k < nf; ++k) fixed_slot[static_cast<size_t>(prog.fixed[static_cast<size_t>(k)].index)] = k;

  // States are eliminated first, then inputs; other roles stay free.
  std::vector<int> role_priority(static_cast<size_t>(n), 2);
  for (const auto& r : prog.layout.ranges()) {
    const int p = r.role == VarRole::X ? 0 : r.role == VarRole::U ? 1 : 2;
    for (Index k = 0; k < r.size(); ++k) role_priority[static_cast<size_t>(r.offset + k)] = p;
  }
  auto elimination_priority = [&](Index v) { return role_priority[static_cast<size_t>(v)]; };

  A_rows = prog.A_eq;
  A_rows.makeCompressed();
  UnionFind uf(n);
  std::vector<Index> row_anchor(static_cast<size_t>(A_rows.rows()), -1);
  for (Index r = 0; r < A_rows.rows(); ++r) {
    for (SpMatRow::InnerIterator it(A_rows, r); it; ++it) {
      if (it.value() == 0.0 || fixed_slot[static_cast<size_t>(it.col())] >= 0) continue;
      if (row_anchor[static_cast<size_t>(r)] < 0) {
        row_anchor[static_cast<size_t>(r)] = it.col();
      } else {
        uf.unite(row_anchor[static_cast<size_t>(r)], it.col());
      }
    }
  }
  // Blocks in order of their smallest variable index.
  std::vector<Index> block_of(static_cast<size_t>(n), -1);
  std::vector<std::vector<Index>> block_vars;
  for (Index i = 0; i < n; ++i) {
    if (fixed_slot[static_cast<size_t>(i)] >= 0) continue;
    const Index root = uf.find(i);
    if (block_of[static_cast<size_t>(root)] < 0) {
      block_of[static_cast<size_t>(root)] = static_cast<Index>(block_vars.size());
      block_vars.emplace_back();
    }
    block_of[static_cast<size_t>(i)] = block_of[static_cast<size_t>(root)];
    block_vars[static_cast<size_t>(block_of[static_cast<size_t>(i)])].push_back(i);
  }
  std::vector<std::vector<Index>> block_rows(block_vars.size());
  for (Index r = 0; r < A_rows.rows(); ++r) {
    const Index a = row_anchor[static_cast<size_t>(r)];
    if (a >= 0) block_rows[static_cast<size_t>(block_of[static_cast<size_t>(a)])].push_back(r);
  }

  const SpMat Pc = prog.P;       // column access
  const SpMat Gc = G_full;       // column access
  std::vector<Triplet> t_T, t_C;
  c0 = Vec::Zero(n);
  for (Index k = 0; k < nf; ++k) {
    const auto& fv = prog.fixed[static_cast<size_t>(k)];
    t_C.emplace_back(fv.index, k, 1.0);
  }

  std::vector<Index> stamp_p(static_cast<size_t>(n), -1), stamp_g(static_cast<size_t>(G_full.rows()), -1);
  Index ny = 0;
  for (size_t b = 0; b < block_vars.size(); ++b) {
    const auto& vars = block_vars[b];
    const auto& rows = block_rows[b];
    const Index nb = static_cast<Index>(vars.size());
    const Index mb = static_cast<Index>(rows.size());
    auto local_col = [&](Index global) {
      return static_cast<Index>(std::lower_bound(vars.begin(), vars.end(), global) - vars.begin());
    };

    Mat Z;
    if (mb == 0) {
      Z = Mat::Identity(nb, nb);
    } else {
      Mat Ab = Mat::Zero(mb, nb);
      Mat Af = Mat::Zero(mb, nf);
      Vec bb(mb);
      for (Index r = 0; r < mb; ++r) {
        const Index gr = rows[static_cast<size_t>(r)];
        for (SpMatRow::InnerIterator it(A_rows, gr); it; ++it) {
          const Index slot = fixed_slot[static_cast<size_t>(it.col())];
          if (slot >= 0) {
            Af(r, slot) += it.value();
          } else {
            Ab(r, local_col(it.col())) += it.value();
          }
        }
        bb(r) = prog.b_eq(gr);
      }
      Vec rs(mb);
      for (Index r = 0; r < mb; ++r) {
        const double nr = Ab.row(r).norm();
        rs(r) = nr > 0.0 ? 1.0 / nr : 1.0;
      }
      const Mat As = rs.asDiagonal() * Ab;
      const linalg::Svd svd = linalg::svd(As, linalg::SvdVectors::Thin, linalg::SvdVectors::Thin);
      const Vec& sv = svd.s;
      const double tol = sv.size() > 0 ? sv(0) * static_cast<double>(std::max(mb, nb)) * 0x1p-45 : 0.0;
      Index rank = 0;
      while (rank < sv.size() && sv(rank) > tol) ++rank;
      const Mat pinv = svd.V.leftCols(rank) *
                       sv.head(rank).cwiseInverse().asDiagonal() *
                       svd.U.leftCols(rank).transpose() * rs.asDiagonal();
      const Vec zp = pinv * bb;
      const Mat zc = -(pinv * Af);
      for (Index k = 0; k < nb; ++k) {
        c0(vars[static_cast<size_t>(k)]) = zp(k);
        for (Index f = 0; f < nf; ++f) {
          if (zc(k, f) != 0.0) t_C.emplace_back(vars[static_cast<size_t>(k)], f, zc(k, f));
        }
      }
      std::vector<int> priority(static_cast<size_t>(nb));
      for (Index k = 0; k < nb; ++k) priority[static_cast<size_t>(k)] = elimination_priority(vars[static_cast<size_t>(k)]);
      Z = elimination_nullspace(As, priority, rank);
    }
    if (Z.cols() == 0) continue;

    // Relevance: directions of Z seen by P, the solver rows, or q.
    std::vector<Index> prow, grow;
    for (Index v : vars) {
      for (SpMat::InnerIterator it(Pc, v); it; ++it) {
        if (stamp_p[static_cast<size_t>(it.row())] != static_cast<Index>(b)) {
          stamp_p[static_cast<size_t>(it.row())] = static_cast<Index>(b);
          prow.push_back(it.row());
        }
      }
      for (SpMat::InnerIterator it(Gc, v); it; ++it) {
        if (stamp_g[static_cast<size_t>(it.row())] != static_cast<Index>(b)) {
          stamp_g[static_cast<size_t>(it.row())] = static_cast<Index>(b);
          grow.push_back(it.row());
        }
      }
    }
    std::sort(prow.begin(), prow.end());
    std::sort(grow.begin(), grow.end());
    const Index ns = static_cast<Index>(prow.size() + grow.size()) + 1;
    Mat stack = Mat::Zero(ns, nb);
    for (Index k = 0; k < nb; ++k) {
      const Index v = vars[static_cast<size_t>(k)];
      for (SpMat::InnerIterator it(Pc, v); it; ++it) {
        const Index r = std::lower_bound(prow.begin(), prow.end(), it.row()) - prow.begin();
        stack(r, k) += it.value();
      }
      for (SpMat::InnerIterator it(Gc, v); it; ++it) {
        const Index r = std::lower_bound(grow.begin(), grow.end(), it.row()) - grow.begin();
        stack(static_cast<Index>(prow.size()) + r, k) += it.value();
      }
      stack(ns - 1, k) = prog.q(v);
    }
    for (Index r = 0; r < ns; ++r) {
      const double nr = stack.row(r).norm();
      if (nr > 0.0) stack.row(r) /= nr;
    }
    // Keep a maximal independent subset of the free directions; the others are set to zero.
    Mat Zn = Z;
    for (Index c = 0; c < Zn.cols(); ++c) {
      const double nc = Zn.col(c).norm();
      if (nc > 0.0) Zn.col(c) /= nc;
    }
    const Mat SZ = stack * Zn;
    // Directions below the threshold only carry roundoff (amplified along
    // unstable modes), so they are dropped with the irrelevant ones.
    const Vec rsv = linalg::singular_values(SZ);
    Index keep = 0;
    while (keep < rsv.size() && rsv(keep) > 1e-4 * std::max(1.0, rsv(0))) ++keep;
    Eigen::ColPivHouseholderQR<Mat> qr(SZ);
    if (keep == 0) continue;
    std::vector<Index> cols_kept(static_cast<size_t>(keep));
    for (Index c = 0; c < keep; ++c) cols_kept[static_cast<size_t>(c)] = qr.colsPermutation().indices()(c);
    std::sort(cols_kept.begin(), cols_kept.end());
    for (Index c = 0; c < keep; ++c) {
      const Index zc = cols_kept[static_cast<size_t>(c)];
      for (Index k = 0; k < nb; ++k) {
        if (Z(k, zc) != 0.0) t_T.emplace_back(vars[static_cast<size_t>(k)], ny + c, Z(k, zc));
      }
    }
    ny += keep;
  }
  T.resize(n, ny);
  T.setFromTriplets(t_T.begin(), t_T.end());
  Cv.resize(n, nf);
  Cv.setFromTriplets(t_C.begin(), t_C.end());

  const SpMat PT = prog.P * T;
  P_red = Mat(SpMat(T.transpose()) * PT);
  P_red = 0.5 * (P_red + P_red.transpose()).eval();

  SpMat GT = G_full * T;
  double gmax = 0.0;
  for (Index k = 0; k < GT.nonZeros(); ++k) gmax = std::max(gmax, std::abs(GT.valuePtr()[k]));
  GT.prune(1e-14 * std::max(1.0, gmax), 1.0);
  const SpMatRow GTr = GT;

  // Row groups that do not depend on y are dropped. Cone rows that are
  // constant in y are merged into one row holding their norm; a cone left
  // with no varying tail becomes the linear row head >= norm.
  auto zero_row = [&](Index r) { return GTr.outerIndexPtr()[r + 1] == GTr.outerIndexPtr()[r]; };
  std::vector<ReducedRow> lin, soc_rows;
  for (Index r = 0; r < full_dims.nonneg; ++r) {
    if (zero_row(r)) {
      constant_cones.emplace_back(r, 0);
    } else {
      lin.push_back({r, {}, false});
    }
  }
  Index off = full_dims.nonneg;
  for (Index d : full_dims.soc) {
    std::vector<Index> var_tail, const_tail;
    for (Index k = 1; k < d; ++k) (zero_row(off + k) ? const_tail : var_tail).push_back(off + k);
    if (zero_row(off) && var_tail.empty()) {
      constant_cones.emplace_back(off, d);
    } else if (var_tail.empty()) {
      lin.push_back({off, const_tail, true});
    } else {
      soc_rows.push_back({off, {}, false});
      for (Index r : var_tail) soc_rows.push_back({r, {}, false});
      if (!const_tail.empty()) soc_rows.push_back({-1, const_tail, false});
      kept_dims.soc.push_back(1 + static_cast<Index>(var_tail.size()) + (const_tail.empty() ? 0 : 1));
    }
    off += d;
  }
  kept_dims.nonneg = static_cast<Index>(lin.size());
  kept_rows = lin;
  kept_rows.insert(kept_rows.end(), soc_rows.begin(), soc_rows.end());
  std::vector<Triplet> t_G;
  for (size_t k = 0; k < kept_rows.size(); ++k) {
    if (kept_rows[k].copy < 0) continue;
    for (SpMatRow::InnerIterator it(GTr, kept_rows[k].copy); it; ++it) {
      t_G.emplace_back(static_cast<Index>(k), it.col(), it.value());
    }
  }
  G_red.resize(static_cast<Index>(kept_rows.size()), ny);
  G_red.setFromTriplets(t_G.begin(), t_G.end());
  G_red.makeCompressed();
}

SolveResult PresolvedProgram::Impl::solve(const Vec& v, const SolveSettings& st) const {
  require_dims(v.size() == static_cast<Index>(prog.fixed.size()),
               "fixed value vector does not match the fixed variables");
  const Vec c = c0 + Cv * v;
  SolveResult result;
  SolveReport& rep = result.report;

  // Equalities must be consistent at the particular solution.
  {
    const Vec r = A_rows * c - prog.b_eq;
    const double cn = inf_norm(c);
    for (Index i = 0; i < r.size(); ++i) {
      double an = 0.0;
      for (SpMatRow::InnerIterator it(A_rows, i); it; ++it) an = std::max(an, std::abs(it.value()));
      if (std::abs(r(i)) > 1e-9 * (an * cn + std::abs(prog.b_eq(i))) + 1e-12) {
        rep.status = SolveStatus::PrimalInfeasible;
        rep.primal_residual = std::abs(r(i));
        result.z = c;
        return result;
      }
    }
  }

  const Vec h_all = h_full - G_full * c;
  for (const auto& [start, dim] : constant_cones) {
    const double scale = 1e-9 * (1.0 + inf_norm(h_full));
    bool inside;
    if (dim == 0) {
      inside = h_all(start) >= -scale;
    } else {
      inside = h_all(start) - h_all.segment(start + 1, dim - 1).norm() >= -scale;
    }
    if (!inside) {
      rep.status = SolveStatus::PrimalInfeasible;
      result.z = c;
      return result;
    }
  }

  StandardProblem sp;
  sp.P = P_red;
  sp.q = T.transpose() * (prog.P * c + prog.q);
  sp.G = G_red;
  sp.h.resize(static_cast<Index>(kept_rows.size()));
  for (size_t k = 0; k < kept_rows.size(); ++k) {
    const ReducedRow& rr = kept_rows[k];
    double v = rr.copy >= 0 ? h_all(rr.copy) : 0.0;
    if (!rr.norm_of.empty()) {
      double sq = 0.0;
      for (Index r : rr.norm_of) sq += h_all(r) * h_all(r);
      v += rr.subtract ? -std::sqrt(sq) : std::sqrt(sq);
    }
    sp.h(static_cast<Index>(k)) = v;
  }
  sp.cones = kept_dims;

  SolveResult inner = solve_standard(sp, st);
  result.z = T * inner.z + c;
  result.report = inner.report;
  result.report.objective = prog.objective(result.z);
  return result;
}

PresolvedProgram::PresolvedProgram(ConicProgram program) : impl_(std::make_unique<Impl>()) {
  impl_->prog = std::move(program);
  impl_->build();
}
PresolvedProgram::~PresolvedProgram() = default;
PresolvedProgram::PresolvedProgram(PresolvedProgram&&) noexcept = default;
PresolvedProgram& PresolvedProgram::operator=(PresolvedProgram&&) noexcept = default;

const ConicProgram& PresolvedProgram::program() const { return impl_->prog; }
Index PresolvedProgram::reduced_dim() const { return impl_->T.cols(); }

SolveResult PresolvedProgram::solve(const SolveSettings& settings) const {
  return impl_->solve(impl_->prog.fixed_values(), settings);
}

SolveResult PresolvedProgram::solve(const Vec& fixed_values, const SolveSettings& settings) const {
  return impl_->solve(fixed_values, settings);
}

SolveResult solve(const ConicProgram& program, const SolveSettings& settings) {
  return PresolvedProgram(program).solve(settings);
}

FeasibilityReport check_feasibility(const ConicProgram& program, const Vec& z) {
  return check_feasibility(program, z, program.fixed_values());
}

FeasibilityReport check_feasibility(const ConicProgram& p, const Vec& z, const Vec& fixed_values) {
  require_dims(z.size() == p.num_vars(), "point has wrong dimension");
  require_dims(fixed_values.size() == static_cast<Index>(p.fixed.size()),
               "fixed value vector does not match the fixed variables");
  FeasibilityReport r;
  if (p.A_eq.rows() > 0) r.equality_residual = inf_norm(p.A_eq * z - p.b_eq);
  if (p.C.rows() > 0) r.inequality_violation = std::max(0.0, (p.C * z - p.d).maxCoeff());
  for (const auto& c : p.socs) {
    const double lhs = (c.F * z + c.f).norm();
    const double rhs = c.g.dot(z) + c.h;
    r.cone_violation = std::max(r.cone_violation, lhs - rhs);
  }
  for (size_t k = 0; k < p.fixed.size(); ++k) {
    r.fixed_violation = std::max(
        r.fixed_violation, std::abs(z(p.fixed[k].index) - fixed_values(static_cast<Index>(k))));
  }
  return r;
}

}  // namespace ddspc
