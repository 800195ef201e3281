#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace tensortopo {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A matrix that had to be inverted was singular or too ill-conditioned.
class SingularMatrixError : public Error {
 public:
  SingularMatrixError(const std::string& what, double condition_estimate)
      : Error(what + " (condition estimate " + std::to_string(condition_estimate) + ")"),
        condition_estimate_(condition_estimate) {}

  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

/// Binary directed-edge indicator S with s(i, j) = 1 when node j drives node i.
class EdgeIndicator {
 public:
  EdgeIndicator() = default;
  explicit EdgeIndicator(Index n) : s_(Eigen::MatrixXi::Zero(n, n)) {}
  /// Throws std::invalid_argument unless `s` is square, binary, and has a zero diagonal.
  explicit EdgeIndicator(Eigen::MatrixXi s);

  Index n() const noexcept { return s_.rows(); }
  int operator()(Index i, Index j) const { return s_(i, j); }
  const Eigen::MatrixXi& matrix() const noexcept { return s_; }
  Index edge_count() const { return s_.sum(); }
  bool operator==(const EdgeIndicator& other) const {
    return s_.rows() == other.s_.rows() && s_ == other.s_;
  }

 private:
  Eigen::MatrixXi s_;
};

/// Weighted adjacency A of the SEM y = A y + B x + e. The diagonal is exactly zero.
class AdjacencyMatrix {
 public:
  AdjacencyMatrix() = default;
  explicit AdjacencyMatrix(Matrix a);

  Index n() const noexcept { return a_.rows(); }
  double operator()(Index i, Index j) const { return a_(i, j); }
  const Matrix& matrix() const noexcept { return a_; }
  /// Off-diagonal nonzero pattern.
  EdgeIndicator support() const;

 private:
  Matrix a_;
};

/// Mixing matrix (I - A)^{-1} B, or a solver estimate of it.
class MixingMatrix {
 public:
  MixingMatrix() = default;
  explicit MixingMatrix(Matrix phi);

  Index n() const noexcept { return phi_.rows(); }
  const Matrix& matrix() const noexcept { return phi_; }

 private:
  Matrix phi_;
};

/// 1-norm reciprocal condition estimate from an LU factorisation; 0 for exactly singular.
double reciprocal_condition(const Matrix& m);

}  // namespace tensortopo
