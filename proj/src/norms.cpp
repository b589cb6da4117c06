#include "qst/norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

namespace qst {

namespace {

void check_compatible(const DensityState& a, const DensityState& b2) {
  if (a.qubits() != b2.qubits())
    throw input_error("norms: qubit counts differ (" + std::to_string(a.qubits()) + " vs " +
                      std::to_string(b2.qubits()) + ")");
}

// Coefficient difference a - b over the union of supports.
PauliExpansion difference(const DensityState& a, const DensityState& b2) {
  const auto& ta = a.expansion().terms();
  const auto& tb = b2.expansion().terms();
  std::vector<std::pair<uint64_t, double>> out;
  out.reserve(ta.size() + tb.size());
  std::size_t i = 0, j = 0;
  while (i < ta.size() || j < tb.size()) {
    if (j == tb.size() || (i < ta.size() && ta[i].first < tb[j].first)) {
      out.push_back(ta[i]);
      ++i;
    } else if (i == ta.size() || tb[j].first < ta[i].first) {
      out.push_back({tb[j].first, -tb[j].second});
      ++j;
    } else {
      double delta = ta[i].second - tb[j].second;
      if (delta != 0.0) out.push_back({ta[i].first, delta});
      ++i;
      ++j;
    }
  }
  return PauliExpansion(a.qubits(), std::move(out));
}

// Dense difference matrix sum_j delta_j B_j / d.
DenseHermitian dense_difference(const PauliExpansion& delta, int dense_limit) {
  uint32_t b = delta.qubits();
  if (static_cast<int>(b) > dense_limit)
    throw input_error("norms: " + std::to_string(b) + " qubits exceeds the dense eigen-path limit of " +
                      std::to_string(dense_limit));
  uint64_t d = delta.dim();
  double inv_d = 1.0 / static_cast<double>(d);
  DenseHermitian m = DenseHermitian::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (const auto& [code, c] : delta.terms()) {
    PauliLabel label(b, code);
    double f = c * inv_d;
    for (uint64_t col = 0; col < d; ++col) {
      PauliColumn pc = pauli_column(label, col);
      m(static_cast<Eigen::Index>(pc.row), static_cast<Eigen::Index>(col)) += f * pc.phase;
    }
  }
  return m;
}

Eigen::VectorXd dense_eigenvalues(const PauliExpansion& delta, int dense_limit) {
  Eigen::SelfAdjointEigenSolver<DenseHermitian> es(dense_difference(delta, dense_limit),
                                                   Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw numerical_error("norms: eigensolver failed");
  return es.eigenvalues();
}

} // namespace

ErrorNorm parse_norm(const std::string& text) {
  if (text == "spectral") return ErrorNorm::spectral;
  if (text == "frobenius") return ErrorNorm::frobenius;
  throw input_error("unknown norm '" + text + "' (expected 'spectral' or 'frobenius')");
}

std::string norm_name(ErrorNorm norm) {
  return norm == ErrorNorm::spectral ? "spectral" : "frobenius";
}

double frobenius_error_sq(const DensityState& a, const DensityState& b2) {
  check_compatible(a, b2);
  PauliExpansion delta = difference(a, b2);
  double sum = 0.0;
  for (const auto& [code, c] : delta.terms()) {
    (void)code;
    sum += c * c;
  }
  return sum / static_cast<double>(a.dim());
}

double spectral_error(const DensityState& a, const DensityState& b2, EigMethod method,
                      int dense_limit) {
  check_compatible(a, b2);
  PauliExpansion delta = difference(a, b2);
  if (delta.size() == 0) return 0.0;
  if (method == EigMethod::dense) {
    Eigen::VectorXd ev = dense_eigenvalues(delta, dense_limit);
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  }
  uint64_t d = delta.dim();
  double inv_d = 1.0 / static_cast<double>(d);
  auto apply = [&](const ComplexVector& v, ComplexVector& w) {
    expansion_matvec_accumulate(delta, inv_d, v, w);
  };
  LanczosResult r = lanczos_extreme_eigs(apply, d);
  if (!r.converged) {
    std::ostringstream msg;
    msg << "spectral_error: lanczos did not converge after " << r.iterations
        << " iterations (best estimates " << r.eig_min << ", " << r.eig_max << "; residuals "
        << r.residual_min << ", " << r.residual_max << ")";
    throw numerical_error(msg.str());
  }
  return std::max(std::abs(r.eig_min), std::abs(r.eig_max));
}

double spectral_error(const DensityState& a, const DensityState& b2) {
  return spectral_error(a, b2,
                        static_cast<int>(a.qubits()) <= kNormDenseQubitLimit ? EigMethod::dense
                                                                             : EigMethod::iterative);
}

double schatten_error(const DensityState& a, const DensityState& b2, double s, int dense_limit) {
  check_compatible(a, b2);
  if (!(s >= 1.0)) throw input_error("schatten_error: order must be at least 1");
  PauliExpansion delta = difference(a, b2);
  if (delta.size() == 0) return 0.0;
  Eigen::VectorXd ev = dense_eigenvalues(delta, dense_limit);
  if (std::isinf(s)) return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  double sum = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    double mag = std::abs(ev(i));
    if (mag < 1e-14) continue; // treat as exact zeros
    sum += std::pow(mag, s);
  }
  return std::pow(sum, 1.0 / s);
}

bool norm_inequality_check(const DensityState& a, const DensityState& b2, std::string* details,
                           int dense_limit) {
  check_compatible(a, b2);
  PauliExpansion delta = difference(a, b2);
  double fro = std::sqrt(frobenius_error_sq(a, b2));
  double spec = 0.0;
  double row_sum = 0.0;
  if (delta.size() > 0) {
    DenseHermitian m = dense_difference(delta, dense_limit);
    Eigen::SelfAdjointEigenSolver<DenseHermitian> es(m, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw numerical_error("norms: eigensolver failed");
    spec = std::max(std::abs(es.eigenvalues()(0)),
                    std::abs(es.eigenvalues()(es.eigenvalues().size() - 1)));
    row_sum = m.cwiseAbs().rowwise().sum().maxCoeff();
  }
  double sqrt_d = std::sqrt(static_cast<double>(a.dim()));
  double tol = 1e-10 * std::max(1.0, fro);
  bool ok = spec <= fro + tol && fro <= sqrt_d * spec + tol && spec <= row_sum + tol;
  if (!ok && details) {
    std::ostringstream msg;
    msg << "norm inequalities violated: spectral=" << spec << " frobenius=" << fro
        << " sqrt(d)*spectral=" << sqrt_d * spec << " max_row_sum=" << row_sum;
    *details = msg.str();
  }
  return ok;
}

ErrorReport error_report(const DensityState& a, const DensityState& b2,
                         const std::vector<double>& schatten_orders, EigMethod method) {
  ErrorReport rep;
  rep.method = method;
  rep.frobenius_sq = frobenius_error_sq(a, b2);
  double spec = spectral_error(a, b2, method);
  rep.spectral_sq = spec * spec;
  for (double s : schatten_orders) rep.schatten.push_back({s, schatten_error(a, b2, s)});
  return rep;
}

} // namespace qst
