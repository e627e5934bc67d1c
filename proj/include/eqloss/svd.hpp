#pragma once

#include <cstddef>
#include <vector>

#include "eqloss/matrix.hpp"

namespace eqloss {

/// Thin SVD A = U diag(sigma) V^T with k = min(rows, cols).
struct SvdResult {
  std::vector<double> sigma;  // non-increasing, non-negative
  Matrix u;                   // rows x k, orthonormal columns
  Matrix v;                   // cols x k, orthonormal columns
  std::size_t sweeps = 0;
};

/// One-sided (Hestenes) Jacobi SVD of an arbitrary dense matrix.
///
/// Deterministic. Columns of U belonging to (numerically) zero singular values
/// are completed to an orthonormal set. The largest-magnitude entry of every U
/// column is made non-negative, with the matching V column flipped alongside.
/// Throws ConvergenceError after 100 * max(1, k) sweeps without convergence.
SvdResult jacobi_svd(const Matrix& a);

/// Sum of singular values.
double nuclear_norm_of(const Matrix& a);

}  // namespace eqloss
