#pragma once

#include <vector>

#include "emlp/matrix.hpp"

namespace emlp {

struct SymmetricEigen {
  std::vector<double> values;  ///< descending
  DenseMatrix vectors;         ///< row i is the unit eigenvector for values[i]
};

/// Full eigendecomposition of a symmetric matrix by Householder reduction to
/// tridiagonal form followed by the implicit QL algorithm. Only the lower
/// triangle is read.
SymmetricEigen symmetric_eigen(const DenseMatrix& a);

}  // namespace emlp
