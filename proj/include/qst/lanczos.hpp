#pragma once

#include <cstdint>
#include <functional>

#include "qst/pauli.hpp"

namespace qst {

enum class EigMethod { dense, iterative };

struct LanczosResult {
  double eig_min = 0.0;
  double eig_max = 0.0;
  double residual_min = 0.0; // |beta_k * y_k| bound on ||A v - theta v|| for each end
  double residual_max = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Extreme eigenvalues of a Hermitian operator given only its matvec.
// Full reorthogonalization against the whole Krylov basis (no ghost
// eigenvalues at these sizes); one run delivers both spectrum ends, so the
// largest-magnitude eigenvalue is max(|eig_min|, |eig_max|). The start vector
// is a fixed seeded pseudo-random vector, so results are deterministic.
// Convergence: successive Ritz change < ritz_tol on both ends and residual
// certificate <= resid_tol * |theta| on the largest-magnitude end; reaching
// the full space dimension or an invariant subspace is exact.
// max_iter = 0 selects the default of 5 * dim (the walk stops at dim anyway).
LanczosResult lanczos_extreme_eigs(const std::function<void(const ComplexVector&, ComplexVector&)>& apply,
                                   uint64_t dim, int max_iter = 0, double ritz_tol = 1e-10,
                                   double resid_tol = 1e-8);

} // namespace qst
