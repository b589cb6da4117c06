#include "qst/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

namespace qst {

ThresholdRule parse_rule(const std::string& text) {
  if (text == "hard") return ThresholdRule::hard;
  if (text == "soft") return ThresholdRule::soft;
  throw input_error("unknown threshold rule '" + text + "' (expected hard or soft)");
}

std::string rule_name(ThresholdRule rule) { return rule == ThresholdRule::hard ? "hard" : "soft"; }

LogBase parse_log_base(const std::string& text) {
  if (text == "natural") return LogBase::natural;
  if (text == "ten") return LogBase::ten;
  throw input_error("unknown log base '" + text + "' (expected natural or ten)");
}

std::string log_base_name(LogBase base) { return base == LogBase::natural ? "natural" : "ten"; }

namespace {

double log_dim(uint64_t d, LogBase base) {
  double dd = static_cast<double>(d);
  return base == LogBase::natural ? std::log(dd) : std::log10(dd);
}

void check_hbar(double hbar) {
  if (!(hbar > 1.0)) throw input_error("threshold constant hbar must exceed 1");
}

} // namespace

ThresholdPolicy ThresholdPolicy::universal(double hbar, LogBase log_base) {
  check_hbar(hbar);
  ThresholdPolicy p;
  p.kind = Kind::universal;
  p.hbar = hbar;
  p.log_base = log_base;
  return p;
}

ThresholdPolicy ThresholdPolicy::individual(double hbar, LogBase log_base) {
  check_hbar(hbar);
  ThresholdPolicy p;
  p.kind = Kind::individual;
  p.hbar = hbar;
  p.log_base = log_base;
  return p;
}

ThresholdPolicy ThresholdPolicy::fixed(double varpi) {
  if (!(varpi >= 0.0)) throw input_error("fixed threshold must be nonnegative");
  ThresholdPolicy p;
  p.kind = Kind::fixed;
  p.varpi = varpi;
  return p;
}

ThresholdPolicy ThresholdPolicy::optimal_grid(std::vector<double> grid) {
  if (grid.empty()) throw input_error("optimal threshold grid must be nonempty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0)) throw input_error("optimal threshold grid values must be nonnegative");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw input_error("optimal threshold grid must be strictly ascending");
  }
  ThresholdPolicy p;
  p.kind = Kind::optimal_grid;
  p.grid = std::move(grid);
  return p;
}

double universal_threshold(uint64_t n, uint64_t d, double hbar, LogBase log_base) {
  if (n < 1) throw input_error("universal_threshold: n must be at least 1");
  if (d < 2) throw input_error("universal_threshold: d must be at least 2");
  check_hbar(hbar);
  return hbar * std::sqrt(4.0 * log_dim(d, log_base) / static_cast<double>(n));
}

double individual_threshold(double N, uint64_t n, uint64_t d, double hbar, LogBase log_base) {
  if (std::abs(N) > 1.0) throw input_error("individual_threshold: |N| must be at most 1");
  if (n < 1) throw input_error("individual_threshold: n must be at least 1");
  if (d < 2) throw input_error("individual_threshold: d must be at least 2");
  check_hbar(hbar);
  return hbar * std::sqrt(4.0 * (1.0 - N * N) * log_dim(d, log_base) / static_cast<double>(n));
}

double apply_threshold(double N, double varpi, ThresholdRule rule) {
  if (!(varpi >= 0.0)) throw input_error("apply_threshold: varpi must be nonnegative");
  if (rule == ThresholdRule::hard) return std::abs(N) >= varpi ? N : 0.0;
  double mag = std::abs(N) - varpi;
  return mag > 0.0 ? std::copysign(mag, N) : 0.0;
}

EstimateReport estimate(const MeasurementRecord& record, const ThresholdPolicy& policy,
                        ThresholdRule rule) {
  if (policy.kind == ThresholdPolicy::Kind::optimal_grid)
    throw input_error("estimate: the optimal-grid policy needs the truth; "
                      "use optimal_threshold_search");
  AverageOutcomes avg = averages(record);
  uint64_t d = record.dim();
  double w_universal = policy.kind == ThresholdPolicy::Kind::fixed
                           ? policy.varpi
                           : universal_threshold(record.shots(), d, policy.hbar, policy.log_base);

  std::vector<std::pair<uint64_t, double>> terms;
  std::vector<std::pair<uint64_t, double>> thresholds;
  thresholds.reserve(avg.values.size());
  for (const auto& [code, N] : avg.values) {
    double w = policy.kind == ThresholdPolicy::Kind::individual
                   ? individual_threshold(N, record.shots(), d, policy.hbar, policy.log_base)
                   : w_universal;
    thresholds.push_back({code, w});
    double value = apply_threshold(N, w, rule);
    if (value != 0.0) terms.push_back({code, value});
  }
  uint64_t survivors = terms.size();
  return EstimateReport{DensityState(PauliExpansion(record.qubits(), std::move(terms))),
                        std::move(thresholds), survivors, policy, rule};
}

OptimalSearchResult optimal_threshold_search(const DensityState& truth,
                                             const std::vector<MeasurementRecord>& replicate_records,
                                             ThresholdRule rule, const std::vector<double>& grid,
                                             ErrorNorm norm) {
  if (replicate_records.empty()) throw input_error("optimal_threshold_search: empty records");
  ThresholdPolicy::optimal_grid(grid); // validates shape
  for (const auto& rec : replicate_records)
    if (rec.qubits() != truth.qubits())
      throw input_error("optimal_threshold_search: record qubit count does not match the truth");

  OptimalSearchResult best;
  bool first = true;
  for (double varpi : grid) {
    double total = 0.0;
    for (const auto& rec : replicate_records) {
      EstimateReport rep = estimate(rec, ThresholdPolicy::fixed(varpi), rule);
      if (norm == ErrorNorm::frobenius) {
        total += frobenius_error_sq(rep.estimate, truth);
      } else {
        double s = spectral_error(rep.estimate, truth);
        total += s * s;
      }
    }
    double mse = total / static_cast<double>(replicate_records.size());
    if (first || mse < best.mse_star) { // strict: ties keep the smaller varpi
      best.varpi_star = varpi;
      best.mse_star = mse;
      first = false;
    }
  }
  return best;
}

std::vector<double> default_optimal_grid(uint64_t n, uint64_t d, double hbar, LogBase log_base,
                                         std::size_t points) {
  if (points < 2) throw input_error("default_optimal_grid: need at least 2 points");
  double hi = 2.0 * universal_threshold(n, d, hbar, log_base);
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i)
    grid[i] = hi * static_cast<double>(i) / static_cast<double>(points - 1);
  return grid;
}

std::vector<double> project_to_simplex(const std::vector<double>& values) {
  if (values.empty()) throw input_error("project_to_simplex: empty input");
  std::vector<double> u = values;
  std::sort(u.begin(), u.end(), std::greater<>());
  double css = 0.0;
  double tau = 0.0;
  std::size_t rho = 0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    css += u[k];
    double t = (1.0 - css) / static_cast<double>(k + 1);
    if (u[k] + t > 0.0) {
      rho = k + 1;
      tau = t;
    }
  }
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = std::max(values[i] + tau, 0.0);
  (void)rho;
  return out;
}

DensityState psd_project(const DensityState& estimate, int dense_limit) {
  Eigen::SelfAdjointEigenSolver<DenseHermitian> es(to_dense(estimate, dense_limit));
  if (es.info() != Eigen::Success) throw numerical_error("psd_project: eigensolver failed");
  std::vector<double> lambda(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::vector<double> projected = project_to_simplex(lambda);
  Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(projected.data(),
                                                     static_cast<Eigen::Index>(projected.size()));
  DenseHermitian rebuilt =
      es.eigenvectors() * diag.asDiagonal() * es.eigenvectors().adjoint();
  return from_dense(rebuilt, kDropTolerance, dense_limit);
}

} // namespace qst
