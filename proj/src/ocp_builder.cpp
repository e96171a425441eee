#include "ddspc/ocp_builder.hpp"

#include "ddspc/hankel.hpp"
#include "ddspc/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <limits>
#include <string>

namespace ddspc {

ChanceBox ChanceBox::unbounded(Index dim) {
  const double inf = std::numeric_limits<double>::infinity();
  return {Vec::Constant(dim, -inf), Vec::Constant(dim, inf)};
}

bool ChanceBox::has_lower(Index c) const { return std::isfinite(lower(c)); }
bool ChanceBox::has_upper(Index c) const { return std::isfinite(upper(c)); }

namespace {

void validate_box(const ChanceBox& box, Index dim, const std::string& name) {
  require_dims(box.lower.size() == dim && box.upper.size() == dim,
               name + " box must have one interval per component");
  for (Index c = 0; c < dim; ++c) {
    require(!std::isnan(box.lower(c)) && !std::isnan(box.upper(c)),
            name + " box bound is NaN");
    require(box.lower(c) <= box.upper(c),
            name + " box is empty in component " + std::to_string(c));
  }
}

void validate_psd(const Mat& m, Index dim, const std::string& name) {
  require_dims(m.rows() == dim && m.cols() == dim, name + " must be square of the signal size");
  require((m - m.transpose()).norm() <= 1e-12 * (1.0 + m.norm()), name + " must be symmetric");
  if (dim == 0) return;
  const Eigen::SelfAdjointEigenSolver<Mat> es(m);
  require(es.eigenvalues().minCoeff() >= -1e-10 * (1.0 + m.norm()),
          name + " must be positive semidefinite");
}

bool box_two_sided(const ChanceBox& box) {
  for (Index c = 0; c < box.dim(); ++c) {
    if (box.has_lower(c) && box.has_upper(c)) return true;
  }
  return false;
}

}  // namespace

void OcpSpec::validate(Index nx, Index nu) const {
  require(N >= 1, "horizon N must be at least 1");
  validate_psd(Q, nx, "Q");
  validate_psd(R, nu, "R");
  validate_box(state_box, nx, "state");
  validate_box(input_box, nu, "input");
  require(eps_x > 0.0 && eps_x <= 1.0, "eps_x must lie in (0, 1]");
  require(eps_u > 0.0 && eps_u <= 1.0, "eps_u must lie in (0, 1]");
}

double OcpSpec::state_factor() const {
  return tightening_factor(tightening, eps_x, box_two_sided(state_box));
}

double OcpSpec::input_factor() const {
  return tightening_factor(tightening, eps_u, box_two_sided(input_box));
}

double sigma(double eps) {
  require(eps > 0.0 && eps <= 1.0, "risk level must lie in (0, 1]");
  return std::sqrt((2.0 - eps) / eps);
}

double tightening_factor(Tightening mode, double eps, bool two_sided) {
  if (mode == Tightening::DistributionFree) return sigma(eps);
  require(eps > 0.0 && eps <= 1.0, "risk level must lie in (0, 1]");
  const double tail = two_sided ? 0.5 * eps : eps;
  if (tail >= 0.5) return 0.0;
  return boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - tail);
}

std::vector<Index> causality_zero_indices(Index L_x, Index L_w, Index N, Index offset) {
  require(L_x >= 0 && L_w >= 0 && N >= 1, "invalid basis sizes");
  require(offset >= 0 && offset <= N - 1, "prediction offset outside the horizon");
  const Index L = L_x + N * L_w;
  std::vector<Index> out;
  for (Index j = L_x + offset * L_w + 1; j <= L; ++j) out.push_back(j);
  return out;
}

namespace {

// Shared variables, objective, cones and fixings of both programs.
struct Assembly {
  ConicProgram prog;
  std::vector<Triplet> eq;
  std::vector<double> rhs;
  std::vector<Triplet> ineq;
  std::vector<double> ineq_rhs;
  Index L = 0;
  Index N = 0;
  Index nx = 0;
  Index nu = 0;

  Index x(Index j, Index i, Index c) const { return prog.layout.index(VarRole::X, j, i, c); }
  Index u(Index j, Index i, Index c) const { return prog.layout.index(VarRole::U, j, i, c); }

  Index add_eq_row(double b) {
    rhs.push_back(b);
    return static_cast<Index>(rhs.size()) - 1;
  }
};

// One face of a chance constraint on component c at step i of role `role`.
// `sign` = +1 for the upper face (ub - z^0), -1 for the lower face (z^0 - lb).
void add_face(Assembly& a, VarRole role, Index i, Index c, double bound, double sign,
              double factor, Index first_fixed, const JointBasis& basis) {
  const Index n = a.prog.num_vars();
  const auto& layout = a.prog.layout;
  const Index mean_idx = layout.index(role, 0, i, c);
  std::vector<Triplet> f;
  Index rows = 0;
  if (factor > 0.0) {
    for (Index j = 1; j <= a.L && j < first_fixed; ++j) {
      f.emplace_back(rows++, layout.index(role, j, i, c), factor * std::sqrt(basis.norm_squared(j)));
    }
  }
  if (rows == 0) {
    // sign * z^0 <= sign * bound.
    const Index r = static_cast<Index>(a.ineq_rhs.size());
    a.ineq.emplace_back(r, mean_idx, sign);
    a.ineq_rhs.push_back(sign * bound);
    return;
  }
  SocConstraint soc;
  soc.F.resize(rows, n);
  soc.F.setFromTriplets(f.begin(), f.end());
  soc.f = Vec::Zero(rows);
  soc.g.resize(n);
  soc.g.insert(mean_idx) = -sign;
  soc.h = sign * bound;
  a.prog.socs.push_back(std::move(soc));
}

Assembly assemble_common(Index nx, Index nu, const OcpSpec& spec, const JointBasis& basis,
                         const PceVector& x_init, bool with_g, Index g_width,
                         bool with_aux = false) {
  spec.validate(nx, nu);
  require(basis.horizon() == spec.N, "basis horizon differs from the OCP horizon");
  require(basis.noise_germ().components() == nx, "noise basis dimension differs from n_x");
  const Index L = basis.last_index();
  require_dims(x_init.coefficients.rows() == L + 1 && x_init.dim() == nx,
               "initial state coefficients must be (L+1) x n_x");

  Assembly a;
  a.L = L;
  a.N = spec.N;
  a.nx = nx;
  a.nu = nu;
  auto& layout = a.prog.layout;
  layout.add(VarRole::X, L + 1, spec.N, nx);
  layout.add(VarRole::U, L + 1, spec.N, nu);
  if (with_aux) layout.add(VarRole::Aux, L + 1, spec.N, nu);
  if (with_g) layout.add(VarRole::G, L + 1, 1, g_width);
  const Index n = layout.size();

  // Objective 1/2 z^T P z with blocks <phi^j, phi^j> Q and <phi^j, phi^j> R.
  std::vector<Triplet> p;
  for (Index j = 0; j <= L; ++j) {
    const double w = basis.norm_squared(j);
    for (Index i = 0; i < spec.N; ++i) {
      for (Index r = 0; r < nx; ++r) {
        for (Index c = 0; c < nx; ++c) {
          if (spec.Q(r, c) != 0.0) p.emplace_back(a.x(j, i, r), a.x(j, i, c), w * spec.Q(r, c));
        }
      }
      for (Index r = 0; r < nu; ++r) {
        for (Index c = 0; c < nu; ++c) {
          if (spec.R(r, c) != 0.0) p.emplace_back(a.u(j, i, r), a.u(j, i, c), w * spec.R(r, c));
        }
      }
    }
  }
  a.prog.P.resize(n, n);
  a.prog.P.setFromTriplets(p.begin(), p.end());
  a.prog.q = Vec::Zero(n);

  // Initial state and causality zeros.
  for (Index j = 0; j <= L; ++j) {
    for (Index c = 0; c < nx; ++c) a.prog.fixed.push_back({a.x(j, 0, c), x_init.coefficients(j, c)});
  }
  const Index Lx = basis.initial_terms();
  const Index Lw = basis.noise_terms();
  for (Index i = 0; i < spec.N; ++i) {
    for (Index j : causality_zero_indices(Lx, Lw, spec.N, i)) {
      for (Index c = 0; c < nu; ++c) a.prog.fixed.push_back({a.u(j, i, c), 0.0});
    }
  }

  // Chance constraints.
  const double fx = spec.state_factor();
  const double fu = spec.input_factor();
  for (Index i = 1; i < spec.N; ++i) {
    for (Index c = 0; c < nx; ++c) {
      if (spec.state_box.has_upper(c))
        add_face(a, VarRole::X, i, c, spec.state_box.upper(c), 1.0, fx, L + 1, basis);
      if (spec.state_box.has_lower(c))
        add_face(a, VarRole::X, i, c, spec.state_box.lower(c), -1.0, fx, L + 1, basis);
    }
  }
  for (Index i = 0; i < spec.N; ++i) {
    const Index first_fixed = Lx + i * Lw + 1;
    for (Index c = 0; c < nu; ++c) {
      if (spec.input_box.has_upper(c))
        add_face(a, VarRole::U, i, c, spec.input_box.upper(c), 1.0, fu, first_fixed, basis);
      if (spec.input_box.has_lower(c))
        add_face(a, VarRole::U, i, c, spec.input_box.lower(c), -1.0, fu, first_fixed, basis);
    }
  }
  return a;
}

ConicProgram finish(Assembly& a) {
  const Index n = a.prog.num_vars();
  a.prog.A_eq.resize(static_cast<Index>(a.rhs.size()), n);
  a.prog.A_eq.setFromTriplets(a.eq.begin(), a.eq.end());
  a.prog.b_eq = Eigen::Map<const Vec>(a.rhs.data(), static_cast<Index>(a.rhs.size()));
  a.prog.C.resize(static_cast<Index>(a.ineq_rhs.size()), n);
  a.prog.C.setFromTriplets(a.ineq.begin(), a.ineq.end());
  a.prog.d = Eigen::Map<const Vec>(a.ineq_rhs.data(), static_cast<Index>(a.ineq_rhs.size()));
  a.prog.validate();
  return std::move(a.prog);
}

// Infinite-horizon LQR gain for unit weights, zero when the Riccati
// iteration does not settle (e.g. unstabilizable pairs).
Mat stabilizing_gain(const LtiSystem& sys) {
  const Index nx = sys.nx();
  const Index nu = sys.nu();
  const Mat Q = Mat::Identity(nx, nx);
  const Mat R = Mat::Identity(nu, nu);
  Mat P = Q;
  Mat K = Mat::Zero(nu, nx);
  for (int it = 0; it < 10000; ++it) {
    const Mat BtP = sys.B.transpose() * P;
    K = (R + BtP * sys.B).ldlt().solve(BtP * sys.A);
    Mat Pn = Q + sys.A.transpose() * P * (sys.A - sys.B * K);
    Pn = 0.5 * (Pn + Pn.transpose()).eval();
    const double change = (Pn - P).norm();
    P = std::move(Pn);
    if (!P.allFinite()) return Mat::Zero(nu, nx);
    if (change <= 1e-13 * (1.0 + P.norm())) return K;
  }
  return Mat::Zero(nu, nx);
}

void check_noise_coefficients(const PceTrajectory& w, Index L, Index N, Index nx) {
  require_dims(w.length() >= N, "noise coefficients must cover the horizon");
  for (Index i = 0; i < N; ++i) {
    require_dims(w.steps[static_cast<size_t>(i)].rows() == L + 1 &&
                     w.steps[static_cast<size_t>(i)].cols() == nx,
                 "noise coefficients must be (L+1) x n_x per step");
  }
}

}  // namespace

ConicProgram build_model_based(const LtiSystem& sys, const OcpSpec& spec, const JointBasis& basis,
                               const PceVector& x_init, const PceTrajectory& w_coeffs) {
  Assembly a = assemble_common(sys.nx(), sys.nu(), spec, basis, x_init, false, 0, true);
  check_noise_coefficients(w_coeffs, a.L, spec.N, sys.nx());
  // v^j_i = u^j_i + K x^j_i with a stabilizing K. The substitution leaves the
  // feasible set unchanged; eliminating x and u in favour of v then follows
  // the stable closed loop instead of the open-loop dynamics.
  const Mat K = stabilizing_gain(sys);
  for (Index j = 0; j <= a.L; ++j) {
    for (Index i = 0; i < spec.N; ++i) {
      for (Index r = 0; r < a.nu; ++r) {
        const Index row = a.add_eq_row(0.0);
        a.eq.emplace_back(row, a.u(j, i, r), 1.0);
        for (Index c = 0; c < a.nx; ++c) {
          if (K(r, c) != 0.0) a.eq.emplace_back(row, a.x(j, i, c), K(r, c));
        }
        a.eq.emplace_back(row, a.prog.layout.index(VarRole::Aux, j, i, r), -1.0);
      }
    }
  }
  // x^j_{i+1} - A x^j_i - B u^j_i = w^j_i.
  for (Index j = 0; j <= a.L; ++j) {
    for (Index i = 0; i + 1 < spec.N; ++i) {
      for (Index r = 0; r < a.nx; ++r) {
        const Index row = a.add_eq_row(w_coeffs.steps[static_cast<size_t>(i)](j, r));
        a.eq.emplace_back(row, a.x(j, i + 1, r), 1.0);
        for (Index c = 0; c < a.nx; ++c) {
          if (sys.A(r, c) != 0.0) a.eq.emplace_back(row, a.x(j, i, c), -sys.A(r, c));
        }
        for (Index c = 0; c < a.nu; ++c) {
          if (sys.B(r, c) != 0.0) a.eq.emplace_back(row, a.u(j, i, c), -sys.B(r, c));
        }
      }
    }
  }
  return finish(a);
}

ConicProgram build_data_driven(const DataRecord& data, const OcpSpec& spec, const JointBasis& basis,
                               const PceVector& x_init, const PceTrajectory& w_coeffs) {
  const Index T = data.length();
  const Index nx = data.nx();
  const Index nu = data.nu();
  require_dims(data.x.rows() == T + 1, "state record must have T + 1 rows");
  require_dims(data.w_hat.rows() == T && data.w_hat.cols() == nx,
               "noise record must be T x n_x (estimate the noise first)");
  require_dims(T >= spec.N, "data length T = " + std::to_string(T) +
                                " is shorter than the horizon N = " + std::to_string(spec.N));
  const Index order = nx + spec.N;
  if (!is_persistently_exciting(stack_signals(data.u, data.w_hat), order)) {
    throw PersistencyError("stacked (u, w) data of length " + std::to_string(T) +
                               " is not persistently exciting of the required order " +
                               std::to_string(order) + " (n_x + N)",
                           order);
  }
  const HankelMatrix hx(data.x.topRows(T), spec.N);
  const HankelMatrix hu(data.u, spec.N);
  const HankelMatrix hw(data.w_hat, spec.N);
  const Index cols = hx.columns();

  Assembly a = assemble_common(nx, nu, spec, basis, x_init, true, cols);
  check_noise_coefficients(w_coeffs, a.L, spec.N, nx);
  const auto& layout = a.prog.layout;
  for (Index j = 0; j <= a.L; ++j) {
    const Index g0 = layout.index(VarRole::G, j, 0, 0);
    auto add_rows = [&](const Mat& H, VarRole role, Index width, bool pinned) {
      for (Index i = 0; i < spec.N; ++i) {
        for (Index c = 0; c < width; ++c) {
          const Index hr = i * width + c;
          const double b = pinned ? w_coeffs.steps[static_cast<size_t>(i)](j, c) : 0.0;
          const Index row = a.add_eq_row(b);
          for (Index k = 0; k < cols; ++k) {
            if (H(hr, k) != 0.0) a.eq.emplace_back(row, g0 + k, H(hr, k));
          }
          if (!pinned) a.eq.emplace_back(row, layout.index(role, j, i, c), -1.0);
        }
      }
    };
    add_rows(hx.matrix(), VarRole::X, nx, false);
    add_rows(hu.matrix(), VarRole::U, nu, false);
    add_rows(hw.matrix(), VarRole::X, nx, true);
  }
  return finish(a);
}

Mat NullspaceReduction::reconstruct_g(const Vec& z_reduced) const {
  const Vec full = expand(z_reduced);
  const Index width = M_w.rows();
  const Index terms = g_particular.cols();
  const Index offset = full.size() - width * terms;
  Mat g(terms, width);
  for (Index j = 0; j < terms; ++j) g.row(j) = full.segment(offset + j * width, width).transpose();
  return g;
}

Vec NullspaceReduction::expand(const Vec& z_reduced) const {
  require_dims(z_reduced.size() == S.cols(), "reduced vector has the wrong size");
  return S * z_reduced + s0;
}

NullspaceReduction apply_nullspace_reduction(const ConicProgram& program, const Mat& Hw,
                                             const PceTrajectory& w_coeffs) {
  program.validate();
  const auto& layout = program.layout;
  require(layout.has(VarRole::G) && layout.has(VarRole::X) && layout.has(VarRole::U),
          "null-space reduction needs a data-driven program");
  const RoleRange gr = layout.range(VarRole::G);
  const RoleRange xr = layout.range(VarRole::X);
  const Index cols = gr.width;
  const Index terms = gr.coefficients;
  const Index N = xr.times;
  const Index nx = xr.width;
  require(gr.offset + gr.size() == program.num_vars(), "role G must be the last role");
  require_dims(Hw.rows() == N * nx && Hw.cols() == cols, "H_w shape does not match the program");
  require(linalg::numerical_rank(Hw) == Hw.rows(),
          "noise Hankel matrix H_N(w) is not of full row rank");
  check_noise_coefficients(w_coeffs, terms - 1, N, nx);

  NullspaceReduction red;
  red.M_w = linalg::nullspace_basis(Hw);
  red.Hw_pinv = linalg::pseudo_inverse(Hw);
  const Index r = red.M_w.cols();
  red.g_particular.resize(cols, terms);
  for (Index j = 0; j < terms; ++j) {
    Vec wj(N * nx);
    for (Index i = 0; i < N; ++i) wj.segment(i * nx, nx) = w_coeffs.steps[static_cast<size_t>(i)].row(j).transpose();
    red.g_particular.col(j) = red.Hw_pinv * wj;
  }

  // New layout: same X and U ranges, H replaces G.
  VariableLayout nl;
  for (const auto& rr : layout.ranges()) {
    if (rr.role == VarRole::G) continue;
    nl.add(rr.role, rr.coefficients, rr.times, rr.width);
  }
  nl.add(VarRole::H, terms, 1, r);
  const Index n_old = program.num_vars();
  const Index n_new = nl.size();

  std::vector<Triplet> st;
  for (Index k = 0; k < gr.offset; ++k) st.emplace_back(k, k, 1.0);
  red.s0 = Vec::Zero(n_old);
  for (Index j = 0; j < terms; ++j) {
    const Index go = layout.index(VarRole::G, j, 0, 0);
    const Index ho = nl.index(VarRole::H, j, 0, 0);
    for (Index a = 0; a < cols; ++a) {
      for (Index b = 0; b < r; ++b) st.emplace_back(go + a, ho + b, red.M_w(a, b));
    }
    red.s0.segment(go, cols) = red.g_particular.col(j);
  }
  red.S.resize(n_old, n_new);
  red.S.setFromTriplets(st.begin(), st.end());
  red.S.prune(0.0);
  const SpMat& S = red.S;
  const Vec& s0 = red.s0;

  ConicProgram out;
  out.layout = nl;
  const Vec Ps0 = program.P * s0;
  out.P = SpMat(S.transpose() * program.P * S);
  out.q = S.transpose() * (program.q + Ps0);
  out.constant = program.constant + 0.5 * s0.dot(Ps0) + program.q.dot(s0);

  // Equalities: rows supported only on G that vanish under M_w are the w rows.
  const SpMat A_new = program.A_eq * S;
  const Vec b_new = program.b_eq - program.A_eq * s0;
  Eigen::SparseMatrix<double, Eigen::RowMajor> A_old_rows = program.A_eq;
  Eigen::SparseMatrix<double, Eigen::RowMajor> A_new_rows = A_new;
  std::vector<Index> keep;
  for (Index row = 0; row < A_old_rows.rows(); ++row) {
    bool only_g = true;
    double old_norm = 0.0;
    for (decltype(A_old_rows)::InnerIterator it(A_old_rows, row); it; ++it) {
      if (it.col() < gr.offset) only_g = false;
      old_norm += it.value() * it.value();
    }
    double new_norm = 0.0;
    for (decltype(A_new_rows)::InnerIterator it(A_new_rows, row); it; ++it) new_norm += it.value() * it.value();
    if (only_g && std::sqrt(new_norm) <= 1e-9 * std::sqrt(old_norm)) {
      if (std::abs(b_new(row)) > 1e-8 * (1.0 + std::abs(program.b_eq(row)))) {
        throw InconsistentSystemError("noise equality row " + std::to_string(row) +
                                      " is violated by the particular solution");
      }
      continue;
    }
    keep.push_back(row);
  }
  std::vector<Triplet> at;
  for (size_t k = 0; k < keep.size(); ++k) {
    for (decltype(A_new_rows)::InnerIterator it(A_new_rows, keep[k]); it; ++it) {
      at.emplace_back(static_cast<Index>(k), it.col(), it.value());
    }
  }
  out.A_eq.resize(static_cast<Index>(keep.size()), n_new);
  out.A_eq.setFromTriplets(at.begin(), at.end());
  out.b_eq.resize(static_cast<Index>(keep.size()));
  for (size_t k = 0; k < keep.size(); ++k) out.b_eq(static_cast<Index>(k)) = b_new(keep[k]);

  out.C = program.C * S;
  out.d = program.d - program.C * s0;
  for (const auto& c : program.socs) {
    SocConstraint nc;
    nc.F = c.F * S;
    nc.f = c.f + c.F * s0;
    nc.g = (S.transpose() * c.g).pruned();
    nc.h = c.h + c.g.dot(s0);
    out.socs.push_back(std::move(nc));
  }
  for (const auto& f : program.fixed) {
    require(f.index < gr.offset, "fixed variables inside role G are not supported");
    out.fixed.push_back(f);
  }
  out.validate();
  red.program = std::move(out);
  return red;
}

PceVector pin_initial_state(const BasisPtr& basis, const Vec& x_k) {
  require(static_cast<bool>(basis), "basis is required");
  Mat c = Mat::Zero(basis->total_terms(), x_k.size());
  c.row(0) = x_k.transpose();
  return {c, basis};
}

OcpSolution extract_solution(const ConicProgram& program, const BasisPtr& basis,
                             const SolveResult& result) {
  const auto& layout = program.layout;
  require_dims(result.z.size() == program.num_vars(), "solution vector has the wrong size");
  OcpSolution s;
  s.z = result.z;
  s.report = result.report;
  s.objective = program.objective(result.z);
  auto split = [&](VarRole role, PceTrajectory& out) {
    const RoleRange r = layout.range(role);
    out.basis = basis;
    for (Index i = 0; i < r.times; ++i) {
      Mat m(r.coefficients, r.width);
      for (Index j = 0; j < r.coefficients; ++j) {
        for (Index c = 0; c < r.width; ++c) m(j, c) = result.z(layout.index(role, j, i, c));
      }
      out.steps.push_back(std::move(m));
    }
  };
  split(VarRole::X, s.x);
  split(VarRole::U, s.u);
  if (layout.has(VarRole::G)) {
    const RoleRange r = layout.range(VarRole::G);
    Mat g(r.coefficients, r.width);
    for (Index j = 0; j < r.coefficients; ++j) g.row(j) = result.z.segment(layout.index(VarRole::G, j, 0, 0), r.width).transpose();
    s.g = std::move(g);
  }
  return s;
}

}  // namespace ddspc
