#pragma once

#include "ddspc/types.hpp"

#include <Eigen/SparseCore>

#include <iosfwd>
#include <string>
#include <vector>

namespace ddspc {

using SpVec = Eigen::SparseVector<double>;

enum class VarRole { X, U, G, H, Aux };

const char* role_name(VarRole role);

/// Contiguous variable range of one role: index = offset +
/// (coefficient * times + time) * width + component.
struct RoleRange {
  VarRole role = VarRole::Aux;
  Index offset = 0;
  Index coefficients = 0;
  Index times = 0;
  Index width = 0;

  Index size() const { return coefficients * times * width; }
};

/// Role-major variable layout (role, then coefficient j, then time i).
class VariableLayout {
 public:
  /// Appends a role range and returns its offset.
  Index add(VarRole role, Index coefficients, Index times, Index width);

  bool has(VarRole role) const;
  const RoleRange& range(VarRole role) const;
  Index index(VarRole role, Index coefficient, Index time, Index component) const;
  Index size() const { return size_; }
  const std::vector<RoleRange>& ranges() const { return ranges_; }

 private:
  std::vector<RoleRange> ranges_;
  Index size_ = 0;
};

/// ||F z + f||_2 <= g^T z + h.
struct SocConstraint {
  SpMat F;
  Vec f;
  SpVec g;
  double h = 0.0;
};

/// Variable pinned to a value. The value may be replaced at solve time.
struct FixedVariable {
  Index index = 0;
  double value = 0.0;
};

/// min 1/2 z^T P z + q^T z + constant
/// s.t. A_eq z = b_eq, C z <= d, second-order cones, fixed variables.
struct ConicProgram {
  SpMat P;
  Vec q;
  double constant = 0.0;
  SpMat A_eq;
  Vec b_eq;
  SpMat C;
  Vec d;
  std::vector<SocConstraint> socs;
  std::vector<FixedVariable> fixed;
  VariableLayout layout;

  Index num_vars() const { return q.size(); }
  double objective(const Vec& z) const;
  /// Values of the fixed variables, in `fixed` order.
  Vec fixed_values() const;
  /// Throws DimensionError / std::invalid_argument on malformed data.
  void validate() const;
};

/// Versioned text dump of a program for debugging (JSON).
void write_program_json(const ConicProgram& program, std::ostream& out);

}  // namespace ddspc
