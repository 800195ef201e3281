#include "tensortopo/types.hpp"

#include <stdexcept>

#include <Eigen/LU>

namespace tensortopo {

EdgeIndicator::EdgeIndicator(Eigen::MatrixXi s) : s_(std::move(s)) {
  if (s_.rows() != s_.cols()) throw std::invalid_argument("edge indicator must be square");
  for (Index j = 0; j < s_.cols(); ++j) {
    for (Index i = 0; i < s_.rows(); ++i) {
      if (s_(i, j) != 0 && s_(i, j) != 1)
        throw std::invalid_argument("edge indicator entries must be 0 or 1");
    }
    if (s_(j, j) != 0) throw std::invalid_argument("edge indicator must have a zero diagonal");
  }
}

AdjacencyMatrix::AdjacencyMatrix(Matrix a) : a_(std::move(a)) {
  if (a_.rows() != a_.cols()) throw std::invalid_argument("adjacency matrix must be square");
  if (!a_.allFinite()) throw std::invalid_argument("adjacency matrix has non-finite entries");
  for (Index i = 0; i < a_.rows(); ++i) {
    if (a_(i, i) != 0.0) throw std::invalid_argument("adjacency matrix must have a zero diagonal");
  }
}

EdgeIndicator AdjacencyMatrix::support() const {
  Eigen::MatrixXi s = (a_.array() != 0.0).cast<int>();
  s.diagonal().setZero();
  return EdgeIndicator(std::move(s));
}

MixingMatrix::MixingMatrix(Matrix phi) : phi_(std::move(phi)) {
  if (phi_.rows() != phi_.cols()) throw std::invalid_argument("mixing matrix must be square");
}

double reciprocal_condition(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (!m.allFinite()) return 0.0;
  Eigen::FullPivLU<Matrix> lu(m);
  if (!lu.isInvertible()) return 0.0;
  // Exact 1-norm condition; matrices here are at most a few hundred wide.
  const double norm = m.cwiseAbs().colwise().sum().maxCoeff();
  const double inv_norm = lu.inverse().cwiseAbs().colwise().sum().maxCoeff();
  return 1.0 / (norm * inv_norm);
}

}  // namespace tensortopo
