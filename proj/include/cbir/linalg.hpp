#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cbir {

struct SymmetricEigen {
  std::size_t n = 0;
  /// Descending.
  std::vector<double> values;
  /// Row i is the unit eigenvector for values[i]; n x n row-major.
  std::vector<double> vectors;
};

/// Eigendecomposition of a symmetric n x n row-major matrix (only the lower
/// triangle is read).
SymmetricEigen symmetric_eigen(std::span<const double> a, std::size_t n);

}  // namespace cbir
