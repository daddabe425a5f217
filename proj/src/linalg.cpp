#include "cbir/linalg.hpp"

#include <Eigen/Eigenvalues>

#include "cbir/error.hpp"

namespace cbir {

SymmetricEigen symmetric_eigen(std::span<const double> a, std::size_t n) {
  if (a.size() != n * n) fail(Errc::DimMismatch, "symmetric_eigen: not n x n");
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMajor> m(a.data(), static_cast<Eigen::Index>(n),
                                     static_cast<Eigen::Index>(n));
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) {
    fail(Errc::InvalidArgument, "symmetric_eigen: no convergence");
  }
  // Eigen returns ascending values with eigenvectors as columns.
  SymmetricEigen out;
  out.n = n;
  out.values.resize(n);
  out.vectors.resize(n * n);
  const auto& vals = solver.eigenvalues();
  const auto& vecs = solver.eigenvectors();
  for (std::size_t k = 0; k < n; ++k) {
    const auto col = static_cast<Eigen::Index>(n - 1 - k);
    out.values[k] = vals(col);
    for (std::size_t i = 0; i < n; ++i) out.vectors[k * n + i] = vecs(static_cast<Eigen::Index>(i), col);
  }
  return out;
}

}  // namespace cbir
