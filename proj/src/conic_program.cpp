#include "ddspc/conic_program.hpp"

#include <json.hpp>

#include <ostream>
#include <set>

namespace ddspc {

const char* role_name(VarRole role) {
  switch (role) {
    case VarRole::X: return "x";
    case VarRole::U: return "u";
    case VarRole::G: return "g";
    case VarRole::H: return "h";
    case VarRole::Aux: return "aux";
  }
  return "?";
}

Index VariableLayout::add(VarRole role, Index coefficients, Index times, Index width) {
  require(!has(role), std::string("layout already has role ") + role_name(role));
  require(coefficients >= 0 && times >= 0 && width >= 0, "negative layout extent");
  RoleRange r{role, size_, coefficients, times, width};
  ranges_.push_back(r);
  size_ += r.size();
  return r.offset;
}

bool VariableLayout::has(VarRole role) const {
  for (const auto& r : ranges_) {
    if (r.role == role) return true;
  }
  return false;
}

const RoleRange& VariableLayout::range(VarRole role) const {
  for (const auto& r : ranges_) {
    if (r.role == role) return r;
  }
  throw std::invalid_argument(std::string("layout has no role ") + role_name(role));
}

Index VariableLayout::index(VarRole role, Index coefficient, Index time,
                            Index component) const {
  const RoleRange& r = range(role);
  require(coefficient >= 0 && coefficient < r.coefficients && time >= 0 &&
              time < r.times && component >= 0 && component < r.width,
          std::string("layout index out of range for role ") + role_name(role));
  return r.offset + (coefficient * r.times + time) * r.width + component;
}

double ConicProgram::objective(const Vec& z) const {
  return 0.5 * z.dot(P * z) + q.dot(z) + constant;
}

Vec ConicProgram::fixed_values() const {
  Vec v(static_cast<Index>(fixed.size()));
  for (size_t k = 0; k < fixed.size(); ++k) v(static_cast<Index>(k)) = fixed[k].value;
  return v;
}

void ConicProgram::validate() const {
  const Index n = num_vars();
  require_dims(P.rows() == n && P.cols() == n, "P must be n x n");
  require_dims(A_eq.cols() == n && A_eq.rows() == b_eq.size(), "equality block shape");
  require_dims(C.cols() == n && C.rows() == d.size(), "inequality block shape");
  require_dims(layout.size() == 0 || layout.size() == n, "layout does not cover the variables");
  for (const auto& c : socs) {
    require_dims(c.F.cols() == n && c.F.rows() == c.f.size() && c.g.size() == n,
                 "cone block shape");
  }
  std::set<Index> seen;
  for (const auto& fv : fixed) {
    require(fv.index >= 0 && fv.index < n, "fixed variable index out of range");
    require(seen.insert(fv.index).second, "variable fixed twice");
  }
  const double asym = (SpMat(P.transpose()) - P).norm();
  require(asym <= 1e-12 * (1.0 + P.norm()), "P must be symmetric");
}

namespace {

nlohmann::json sparse_json(const SpMat& m) {
  nlohmann::json t = nlohmann::json::array();
  for (Index k = 0; k < m.outerSize(); ++k) {
    for (SpMat::InnerIterator it(m, k); it; ++it) {
      t.push_back({it.row(), it.col(), it.value()});
    }
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"triplets", t}};
}

std::vector<double> dense_json(const Vec& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

void write_program_json(const ConicProgram& p, std::ostream& out) {
  nlohmann::json j;
  j["format"] = "ddspc-conic-program";
  j["version"] = 1;
  j["num_vars"] = p.num_vars();
  j["P"] = sparse_json(p.P);
  j["q"] = dense_json(p.q);
  j["constant"] = p.constant;
  j["A_eq"] = sparse_json(p.A_eq);
  j["b_eq"] = dense_json(p.b_eq);
  j["C"] = sparse_json(p.C);
  j["d"] = dense_json(p.d);
  nlohmann::json cones = nlohmann::json::array();
  for (const auto& c : p.socs) {
    nlohmann::json g = nlohmann::json::array();
    for (SpVec::InnerIterator it(c.g); it; ++it) g.push_back({it.index(), it.value()});
    cones.push_back({{"F", sparse_json(c.F)}, {"f", dense_json(c.f)}, {"g", g}, {"h", c.h}});
  }
  j["socs"] = cones;
  nlohmann::json fixed = nlohmann::json::array();
  for (const auto& f : p.fixed) fixed.push_back({f.index, f.value});
  j["fixed"] = fixed;
  nlohmann::json layout = nlohmann::json::array();
  for (const auto& r : p.layout.ranges()) {
    layout.push_back({{"role", role_name(r.role)},
                      {"offset", r.offset},
                      {"coefficients", r.coefficients},
                      {"times", r.times},
                      {"width", r.width}});
  }
  j["layout"] = layout;
  out << j.dump(1) << '\n';
}

}  // namespace ddspc
