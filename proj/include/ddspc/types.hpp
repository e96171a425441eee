#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <stdexcept>
#include <string>

namespace ddspc {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Thrown when matrix or trajectory dimensions do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when recorded data is not persistently exciting of the order an
/// operation needs.
class PersistencyError : public std::runtime_error {
 public:
  PersistencyError(const std::string& what, Index required_order)
      : std::runtime_error(what), required_order_(required_order) {}

  Index required_order() const { return required_order_; }

 private:
  Index required_order_;
};

/// Thrown when a linear system that should be consistent is not.
class InconsistentSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

inline void require_dims(bool condition, const std::string& message) {
  if (!condition) throw DimensionError(message);
}

}  // namespace ddspc
