#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qst/density.hpp"
#include "qst/lanczos.hpp"

namespace qst {

enum class ErrorNorm { spectral, frobenius };

ErrorNorm parse_norm(const std::string& text);
std::string norm_name(ErrorNorm norm);

struct ErrorReport {
  double spectral_sq = 0.0;
  double frobenius_sq = 0.0;
  std::vector<std::pair<double, double>> schatten; // (order, norm value)
  EigMethod method = EigMethod::dense;
};

// ||a - b||_F^2 = sum_j (beta_j^a - beta_j^b)^2 / d, exact in coefficient
// space; no matrix is materialized.
double frobenius_error_sq(const DensityState& a, const DensityState& b2);

// Largest |eigenvalue| of the difference. The dense path is a full
// eigendecomposition (the oracle); the iterative path runs matrix-free
// Lanczos on the coefficient difference.
double spectral_error(const DensityState& a, const DensityState& b2, EigMethod method,
                      int dense_limit = kNormDenseQubitLimit);
// Dense when the dimension allows it, else iterative.
double spectral_error(const DensityState& a, const DensityState& b2);

// Schatten s-norm of the difference: (sum |lambda_j|^s)^(1/s), s in [1, inf].
// Pass std::numeric_limits<double>::infinity() for s = inf.
double schatten_error(const DensityState& a, const DensityState& b2, double s,
                      int dense_limit = kNormDenseQubitLimit);

// Verifies spectral <= frobenius <= sqrt(d) * spectral and
// spectral <= max absolute row sum on the dense difference.
bool norm_inequality_check(const DensityState& a, const DensityState& b2,
                           std::string* details = nullptr, int dense_limit = kNormDenseQubitLimit);

ErrorReport error_report(const DensityState& a, const DensityState& b2,
                         const std::vector<double>& schatten_orders, EigMethod method);

} // namespace qst
