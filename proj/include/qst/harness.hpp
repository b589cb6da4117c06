#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qst/density.hpp"
#include "qst/estimator.hpp"

namespace qst {

// Monte Carlo study configuration. Parsed from a flat key=value text file;
// see parse_config for the key set and defaults.
struct ExperimentConfig {
  std::vector<uint32_t> qubit_list;
  std::vector<uint64_t> shots_list;
  uint64_t replicates = 200;
  // Tokens: universal | individual | fixed:<v> | optimal. The no-threshold
  // baseline is always included and needs no token.
  std::vector<std::string> policies = {"universal"};
  std::vector<ThresholdRule> rules = {ThresholdRule::hard, ThresholdRule::soft};
  double hbar = 1.01;
  LogBase log_base = LogBase::ten;
  double support_factor = 6.0;
  LogBase support_log_base = LogBase::natural;
  enum class Rounding { floor_to_int, nearest } support_round = Rounding::floor_to_int;
  double amplitude = 0.2;
  uint64_t master_seed = 0;
  bool fresh_state_per_replicate = true;
  unsigned workers = 0; // 0 selects the hardware concurrency
  std::size_t optimal_grid_points = 200;
};

ExperimentConfig parse_config(std::istream& in, const std::string& source_name);
ExperimentConfig parse_config_file(const std::string& path);
void validate_config(const ExperimentConfig& config);

// floor/round of support_factor * log(d) in the configured base.
uint64_t support_size_for(uint32_t qubits, const ExperimentConfig& config);

// The shared truth used for a given d when fresh_state_per_replicate=false;
// exposed so external checks can recompute analytic baselines.
DensityState shared_truth(const ExperimentConfig& config, uint32_t qubits);

// Seed derivation for the per-replicate streams (fresh truths and records);
// exposed for reproducibility checks.
uint64_t truth_seed(uint64_t master_seed, uint32_t qubits);
uint64_t truth_seed(uint64_t master_seed, uint32_t qubits, uint64_t shots, uint64_t replicate);
uint64_t record_seed(uint64_t master_seed, uint32_t qubits, uint64_t shots, uint64_t replicate);

struct MseRow {
  uint32_t qubits = 0;
  uint64_t d = 0;
  uint64_t n = 0;
  std::string policy; // none | universal | individual | fixed:<v> | optimal
  std::string rule;   // none | hard | soft
  std::string norm;   // spectral | frobenius
  double mse = 0.0;
  double sem = 0.0;
  uint64_t replicates = 0;
  double threshold_mean = 0.0;
  std::string diagnostic; // empty on success; aborted cells carry NaN mse
};

struct MseTable {
  std::vector<MseRow> rows;
  const MseRow* find(uint64_t d, uint64_t n, const std::string& policy, const std::string& rule,
                     const std::string& norm) const;
};

// Runs the full (d, n, policy, rule) grid with per-replicate derived seeds.
// Replicates run in a worker pool; aggregation is reduced in replicate order,
// so the table is bit-identical for any worker count.
MseTable run_experiment(const ExperimentConfig& config);

// Long CSV: d,n,policy,rule,norm,mse,sem,replicates,threshold_mean,diagnostic.
void emit_table(const MseTable& table, const std::string& path);

// Grouped layout with one row per (d, n, norm) and the policy/rule grid as
// columns; written only when every needed cell is present (returns false
// otherwise).
bool emit_table_grouped(const MseTable& table, const std::string& path);

enum class PlotMode { mse_vs_n, mse_vs_d, rescaled_vs_d };

// Wide CSV per plotting series; rescaled_vs_d multiplies spectral MSE by d^2
// and Frobenius MSE by d.
void emit_plot_data(const MseTable& table, PlotMode mode, const std::string& path);

struct SlopeFit {
  uint64_t d = 0;
  std::string policy;
  std::string rule;
  std::string norm;
  double slope = 0.0;
  double ci95 = 0.0;   // halfwidth
  double target = 0.0; // -(1-q) spectral, -(1-q/2) frobenius
  int points = 0;
};

struct ScalingReport {
  double q = 0.0;
  std::string budget_note;
  std::vector<SlopeFit> fits;
  std::string text;
};

// Fits log-MSE vs log-n per (d, policy, rule, norm) series with >= 3 shot
// counts; deterministic given the table.
ScalingReport scaling_check(const MseTable& table, double q, const std::string& budget_note);

// Writes mse.csv, plot_*.csv (when the grid supports them), scaling.txt,
// table1.csv (when the policy grid is complete) and manifest.txt.
void run_bench(const ExperimentConfig& config, const std::string& out_dir,
               const std::string& config_text);

uint64_t fnv1a64(const std::string& data);

} // namespace qst
