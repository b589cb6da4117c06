#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qst/density.hpp"
#include "qst/measurement.hpp"
#include "qst/norms.hpp"

namespace qst {

enum class ThresholdRule { hard, soft };
enum class LogBase { natural, ten };

ThresholdRule parse_rule(const std::string& text);
std::string rule_name(ThresholdRule rule);
LogBase parse_log_base(const std::string& text);
std::string log_base_name(LogBase base);

// Threshold selection policy. universal/individual require hbar > 1; fixed
// carries a constant varpi; optimal_grid carries a strictly ascending grid
// and is only valid where the truth is known (see optimal_threshold_search).
struct ThresholdPolicy {
  enum class Kind { universal, individual, fixed, optimal_grid };

  Kind kind = Kind::universal;
  double hbar = 1.01;
  LogBase log_base = LogBase::ten;
  double varpi = 0.0;
  std::vector<double> grid;

  static ThresholdPolicy universal(double hbar = 1.01, LogBase log_base = LogBase::ten);
  static ThresholdPolicy individual(double hbar = 1.01, LogBase log_base = LogBase::ten);
  static ThresholdPolicy fixed(double varpi);
  static ThresholdPolicy optimal_grid(std::vector<double> grid);
};

// hbar * sqrt(4 * log(d) / n) with the configured logarithm base.
double universal_threshold(uint64_t n, uint64_t d, double hbar = 1.01,
                           LogBase log_base = LogBase::ten);

// hbar * sqrt(4 * (1 - N^2) * log(d) / n); zero at |N| = 1.
double individual_threshold(double N, uint64_t n, uint64_t d, double hbar = 1.01,
                            LogBase log_base = LogBase::ten);

// hard: N if |N| >= varpi else 0 (ties survive); soft: sign(N) * max(|N| - varpi, 0).
double apply_threshold(double N, double varpi, ThresholdRule rule);

struct EstimateReport {
  DensityState estimate;
  std::vector<std::pair<uint64_t, double>> thresholds_used; // label code -> varpi
  uint64_t survivors = 0;                                   // stored nonzero coefficients
  ThresholdPolicy policy;
  ThresholdRule rule = ThresholdRule::hard;
};

// Thresholds every measured average; unmeasured labels contribute nothing, so
// the estimate has exact unit trace by construction. optimal_grid is rejected
// here (it needs the truth).
EstimateReport estimate(const MeasurementRecord& record, const ThresholdPolicy& policy,
                        ThresholdRule rule);

struct OptimalSearchResult {
  double varpi_star = 0.0;
  double mse_star = 0.0;
};

// Replicate-averaged squared error in the chosen norm for each grid value;
// returns the minimizer, ties broken toward the smaller varpi. Simulation
// only: the truth must be known.
OptimalSearchResult optimal_threshold_search(const DensityState& truth,
                                             const std::vector<MeasurementRecord>& replicate_records,
                                             ThresholdRule rule, const std::vector<double>& grid,
                                             ErrorNorm norm);

// 200 evenly spaced points covering [0, 2 * universal_threshold].
std::vector<double> default_optimal_grid(uint64_t n, uint64_t d, double hbar, LogBase log_base,
                                         std::size_t points = 200);

// Euclidean projection onto the probability simplex (sum = 1, entries >= 0);
// exact sort-and-shift algorithm.
std::vector<double> project_to_simplex(const std::vector<double>& values);

// Frobenius-nearest density matrix: eigendecompose, project the eigenvalue
// vector onto the probability simplex, reconstruct.
DensityState psd_project(const DensityState& estimate, int dense_limit = kDenseQubitLimit);

} // namespace qst
