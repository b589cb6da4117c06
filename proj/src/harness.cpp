#include "qst/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "qst/errors.hpp"
#include "qst/measurement.hpp"
#include "qst/norms.hpp"
#include "qst/rng.hpp"
#include "qst/version.hpp"

namespace qst {
namespace {

constexpr uint64_t kTruthTag = 0x74727574;  // stream tag for state generation
constexpr uint64_t kRecordTag = 0x72656364; // stream tag for measurement noise

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string trim(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  std::size_t end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& value, const std::string& context) {
  std::vector<std::string> items;
  std::size_t pos = 0;
  while (true) {
    std::size_t comma = value.find(',', pos);
    std::string item = trim(comma == std::string::npos ? value.substr(pos)
                                                       : value.substr(pos, comma - pos));
    if (item.empty()) throw input_error(context + ": empty list item");
    items.push_back(item);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return items;
}

uint64_t parse_u64(const std::string& text, const std::string& context) {
  uint64_t value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw input_error(context + ": expected a nonnegative integer, got '" + text + "'");
  }
  return value;
}

double parse_finite_double(const std::string& text, const std::string& context) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw input_error(context + ": expected a finite number, got '" + text + "'");
  }
  return value;
}

LogBase parse_log_base_value(const std::string& text, const std::string& context) {
  if (text == "ten") return LogBase::ten;
  if (text == "natural") return LogBase::natural;
  throw input_error(context + ": expected 'ten' or 'natural', got '" + text + "'");
}

bool parse_bool(const std::string& text, const std::string& context) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw input_error(context + ": expected 'true' or 'false', got '" + text + "'");
}

// Policy tokens: universal | individual | optimal | fixed:<value>.
void check_policy_token(const std::string& token, const std::string& context) {
  if (token == "universal" || token == "individual" || token == "optimal") return;
  if (token.rfind("fixed:", 0) == 0) {
    double v = parse_finite_double(token.substr(6), context);
    if (v < 0.0) throw input_error(context + ": fixed threshold must be nonnegative");
    return;
  }
  throw input_error(context + ": unknown policy '" + token + "'");
}

// Runs body(0..count-1) on a small worker pool. body must not throw; callers
// record failures into per-index slots so results are order-independent.
void parallel_for(uint64_t count, unsigned workers, const std::function<void(uint64_t)>& body) {
  if (count == 0) return;
  uint64_t use64 = std::min<uint64_t>(workers, count);
  unsigned use = static_cast<unsigned>(use64);
  if (use <= 1) {
    for (uint64_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<uint64_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(use);
  for (unsigned w = 0; w < use; ++w) {
    pool.emplace_back([&] {
      while (true) {
        uint64_t i = next.fetch_add(1, std::memory_order_relaxed);
        if (i >= count) return;
        body(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

DensityState state_from_averages(const AverageOutcomes& avg) {
  std::vector<std::pair<uint64_t, double>> terms;
  terms.reserve(avg.values.size());
  for (const auto& [code, value] : avg.values) {
    if (value != 0.0) terms.emplace_back(code, value);
  }
  return DensityState(PauliExpansion(avg.qubits, std::move(terms)));
}

double norm_error_sq(const DensityState& estimate, const DensityState& truth, ErrorNorm norm) {
  if (norm == ErrorNorm::frobenius) return frobenius_error_sq(estimate, truth);
  double s = spectral_error(estimate, truth);
  return s * s;
}

double mean_of(const std::vector<double>& xs) {
  double total = 0.0;
  for (double x : xs) total += x;
  return total / static_cast<double>(xs.size());
}

double sem_of(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  double r = static_cast<double>(xs.size());
  return std::sqrt(ss / (r * (r - 1.0)));
}

struct EstimatorSpec {
  std::string policy_name;
  std::string rule_name;
  bool baseline = false;
  bool optimal = false;
  ThresholdRule rule = ThresholdRule::hard;
  ThresholdPolicy policy = ThresholdPolicy::fixed(0.0);
};

std::vector<EstimatorSpec> build_specs(const ExperimentConfig& config) {
  std::vector<EstimatorSpec> specs;
  EstimatorSpec base;
  base.policy_name = "none";
  base.rule_name = "none";
  base.baseline = true;
  specs.push_back(base);
  for (const std::string& token : config.policies) {
    for (ThresholdRule rule : config.rules) {
      EstimatorSpec spec;
      spec.policy_name = token;
      spec.rule_name = rule_name(rule);
      spec.rule = rule;
      if (token == "optimal") {
        spec.optimal = true;
      } else if (token == "universal") {
        spec.policy = ThresholdPolicy::universal(config.hbar, config.log_base);
      } else if (token == "individual") {
        spec.policy = ThresholdPolicy::individual(config.hbar, config.log_base);
      } else {
        spec.policy = ThresholdPolicy::fixed(parse_finite_double(token.substr(6), "policy"));
      }
      specs.push_back(spec);
    }
  }
  return specs;
}

MseRow nan_row(uint32_t qubits, uint64_t n, const EstimatorSpec& spec, ErrorNorm norm,
               const std::string& diagnostic) {
  MseRow row;
  row.qubits = qubits;
  row.d = uint64_t{1} << qubits;
  row.n = n;
  row.policy = spec.policy_name;
  row.rule = spec.rule_name;
  row.norm = norm_name(norm);
  row.mse = std::numeric_limits<double>::quiet_NaN();
  row.sem = std::numeric_limits<double>::quiet_NaN();
  row.replicates = 0;
  row.threshold_mean = std::numeric_limits<double>::quiet_NaN();
  row.diagnostic = diagnostic;
  return row;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"'; // rfc 4180: double embedded quotes
    out += c == '\n' ? ' ' : c;
  }
  out += '"';
  return out;
}

std::string series_name(const std::string& prefix, const MseRow& row) {
  std::string name = prefix + "_" + row.policy + "_" + row.rule + "_" + row.norm;
  std::replace(name.begin(), name.end(), ':', '_');
  return name;
}

double t_critical_95(int df) {
  static constexpr double kTable[30] = {
      12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
      2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
      2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
  if (df <= 0) return std::numeric_limits<double>::quiet_NaN();
  if (df <= 30) return kTable[df - 1];
  return 1.96;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot open '" + path + "' for writing");
  return out;
}

} // namespace

ExperimentConfig parse_config(std::istream& in, const std::string& source_name) {
  ExperimentConfig config;
  std::set<std::string> seen;
  std::string line;
  uint64_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::string where = source_name + ":" + std::to_string(line_number);
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw input_error(where + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw input_error(where + ": empty key");
    if (value.empty()) throw input_error(where + ": empty value for '" + key + "'");
    if (!seen.insert(key).second) throw input_error(where + ": duplicate key '" + key + "'");

    if (key == "qubit_list") {
      config.qubit_list.clear();
      for (const std::string& item : split_list(value, where)) {
        config.qubit_list.push_back(static_cast<uint32_t>(parse_u64(item, where)));
      }
    } else if (key == "shots_list") {
      config.shots_list.clear();
      for (const std::string& item : split_list(value, where)) {
        config.shots_list.push_back(parse_u64(item, where));
      }
    } else if (key == "replicates") {
      config.replicates = parse_u64(value, where);
    } else if (key == "policies") {
      config.policies = split_list(value, where);
      for (const std::string& token : config.policies) check_policy_token(token, where);
    } else if (key == "rules") {
      config.rules.clear();
      for (const std::string& item : split_list(value, where)) {
        config.rules.push_back(parse_rule(item));
      }
    } else if (key == "hbar") {
      config.hbar = parse_finite_double(value, where);
    } else if (key == "log_base") {
      config.log_base = parse_log_base_value(value, where);
    } else if (key == "support_factor") {
      config.support_factor = parse_finite_double(value, where);
    } else if (key == "support_log_base") {
      config.support_log_base = parse_log_base_value(value, where);
    } else if (key == "support_round") {
      if (value == "floor") {
        config.support_round = ExperimentConfig::Rounding::floor_to_int;
      } else if (value == "nearest") {
        config.support_round = ExperimentConfig::Rounding::nearest;
      } else {
        throw input_error(where + ": expected 'floor' or 'nearest', got '" + value + "'");
      }
    } else if (key == "amplitude") {
      config.amplitude = parse_finite_double(value, where);
    } else if (key == "master_seed") {
      config.master_seed = parse_u64(value, where);
    } else if (key == "fresh_state_per_replicate") {
      config.fresh_state_per_replicate = parse_bool(value, where);
    } else if (key == "workers") {
      config.workers = static_cast<unsigned>(parse_u64(value, where));
    } else if (key == "optimal_grid_points") {
      config.optimal_grid_points = static_cast<std::size_t>(parse_u64(value, where));
    } else {
      throw input_error(where + ": unknown key '" + key + "'");
    }
  }
  validate_config(config);
  return config;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

void validate_config(const ExperimentConfig& config) {
  if (config.qubit_list.empty()) throw input_error("config: qubit_list must be nonempty");
  for (uint32_t b : config.qubit_list) {
    if (b < 1 || b > kMaxQubits) {
      throw input_error("config: qubit counts must lie in [1, " + std::to_string(kMaxQubits) +
                        "]");
    }
  }
  if (config.shots_list.empty()) throw input_error("config: shots_list must be nonempty");
  for (uint64_t n : config.shots_list) {
    if (n == 0) throw input_error("config: shot counts must be positive");
  }
  if (config.replicates == 0) throw input_error("config: replicates must be positive");
  if (config.policies.empty()) throw input_error("config: policies must be nonempty");
  for (const std::string& token : config.policies) check_policy_token(token, "config");
  if (config.rules.empty()) throw input_error("config: rules must be nonempty");
  if (!(config.hbar > 1.0)) throw input_error("config: hbar must exceed 1");
  if (!(config.support_factor > 0.0)) throw input_error("config: support_factor must be positive");
  if (!(config.amplitude > 0.0)) throw input_error("config: amplitude must be positive");
  if (config.optimal_grid_points < 2) {
    throw input_error("config: optimal_grid_points must be at least 2");
  }
  bool wants_optimal =
      std::find(config.policies.begin(), config.policies.end(), "optimal") != config.policies.end();
  if (wants_optimal && config.fresh_state_per_replicate) {
    throw input_error(
        "config: the optimal policy searches one shared truth, set "
        "fresh_state_per_replicate=false");
  }
}

uint64_t support_size_for(uint32_t qubits, const ExperimentConfig& config) {
  double log_d = static_cast<double>(qubits) * std::log(2.0);
  if (config.support_log_base == LogBase::ten) log_d /= std::log(10.0);
  double x = config.support_factor * log_d;
  double rounded = config.support_round == ExperimentConfig::Rounding::floor_to_int
                       ? std::floor(x)
                       : std::floor(x + 0.5);
  if (rounded < 0.0) rounded = 0.0;
  return static_cast<uint64_t>(rounded);
}

DensityState shared_truth(const ExperimentConfig& config, uint32_t qubits) {
  Rng rng(truth_seed(config.master_seed, qubits));
  return random_sparse_state(qubits, rng, support_size_for(qubits, config), config.amplitude);
}

uint64_t truth_seed(uint64_t master_seed, uint32_t qubits) {
  return derive_seed(master_seed, {kTruthTag, qubits});
}

uint64_t truth_seed(uint64_t master_seed, uint32_t qubits, uint64_t shots, uint64_t replicate) {
  return derive_seed(master_seed, {kTruthTag, qubits, shots, replicate});
}

uint64_t record_seed(uint64_t master_seed, uint32_t qubits, uint64_t shots, uint64_t replicate) {
  return derive_seed(master_seed, {kRecordTag, qubits, shots, replicate});
}

const MseRow* MseTable::find(uint64_t d, uint64_t n, const std::string& policy,
                             const std::string& rule, const std::string& norm) const {
  for (const MseRow& row : rows) {
    if (row.d == d && row.n == n && row.policy == policy && row.rule == rule && row.norm == norm) {
      return &row;
    }
  }
  return nullptr;
}

MseTable run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  unsigned workers =
      config.workers != 0 ? config.workers : std::max(1u, std::thread::hardware_concurrency());
  const bool wants_optimal =
      std::find(config.policies.begin(), config.policies.end(), "optimal") != config.policies.end();
  const std::vector<EstimatorSpec> specs = build_specs(config);
  std::vector<std::size_t> plain; // spec indices evaluated inside the replicate loop
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (!specs[i].optimal) plain.push_back(i);
  }
  const uint64_t R = config.replicates;
  const std::array<ErrorNorm, 2> norms = {ErrorNorm::spectral, ErrorNorm::frobenius};

  MseTable table;
  for (uint32_t b : config.qubit_list) {
    const uint64_t d = uint64_t{1} << b;
    const std::vector<PauliLabel> labels = all_nonidentity_labels(b);
    std::optional<DensityState> shared;
    std::string shared_failure;
    if (!config.fresh_state_per_replicate) {
      try {
        shared = shared_truth(config, b);
      } catch (const std::exception& ex) {
        shared_failure = ex.what();
      }
    }

    for (uint64_t n : config.shots_list) {
      if (!config.fresh_state_per_replicate && !shared) {
        for (const EstimatorSpec& spec : specs) {
          for (ErrorNorm norm : norms) table.rows.push_back(nan_row(b, n, spec, norm, shared_failure));
        }
        continue;
      }

      // err[i][norm][r] for the plain specs; thresholds averaged per replicate.
      std::vector<std::array<std::vector<double>, 2>> err(plain.size());
      std::vector<std::vector<double>> thr(plain.size());
      for (std::size_t i = 0; i < plain.size(); ++i) {
        err[i][0].resize(R);
        err[i][1].resize(R);
        thr[i].resize(R);
      }
      std::vector<std::optional<MeasurementRecord>> records(wants_optimal ? R : 0);
      std::vector<std::string> failures(R);

      parallel_for(R, workers, [&](uint64_t r) {
        try {
          DensityState truth =
              config.fresh_state_per_replicate
                  ? [&] {
                      Rng rng(truth_seed(config.master_seed, b, n, r));
                      return random_sparse_state(b, rng, support_size_for(b, config),
                                                 config.amplitude);
                    }()
                  : *shared;
          MeasurementRecord record =
              sample_measurements(truth, n, labels, record_seed(config.master_seed, b, n, r));
          AverageOutcomes avg = averages(record);
          for (std::size_t i = 0; i < plain.size(); ++i) {
            const EstimatorSpec& spec = specs[plain[i]];
            DensityState est = [&] {
              if (spec.baseline) return state_from_averages(avg);
              EstimateReport report = estimate(record, spec.policy, spec.rule);
              double total = 0.0;
              for (const auto& [code, w] : report.thresholds_used) total += w;
              thr[i][r] = report.thresholds_used.empty()
                              ? 0.0
                              : total / static_cast<double>(report.thresholds_used.size());
              return std::move(report.estimate);
            }();
            err[i][0][r] = norm_error_sq(est, truth, ErrorNorm::spectral);
            err[i][1][r] = norm_error_sq(est, truth, ErrorNorm::frobenius);
          }
          if (wants_optimal) records[r] = std::move(record);
        } catch (const std::exception& ex) {
          failures[r] = ex.what();
        }
      });

      std::string first_failure;
      for (const std::string& f : failures) {
        if (!f.empty()) {
          first_failure = f;
          break;
        }
      }
      if (!first_failure.empty()) {
        for (const EstimatorSpec& spec : specs) {
          for (ErrorNorm norm : norms) table.rows.push_back(nan_row(b, n, spec, norm, first_failure));
        }
        continue;
      }

      // Grid search for the oracle threshold, per (rule, norm), on the shared
      // truth; parallel over grid points with in-order reduction.
      struct OptimalCell {
        double varpi = 0.0;
        std::vector<double> errors;
        std::string failure;
      };
      std::array<std::array<OptimalCell, 2>, 2> optimal_cells; // [rule][norm]
      if (wants_optimal) {
        std::vector<double> grid =
            default_optimal_grid(n, d, config.hbar, config.log_base, config.optimal_grid_points);
        for (ThresholdRule rule : {ThresholdRule::hard, ThresholdRule::soft}) {
          bool rule_requested = std::find(config.rules.begin(), config.rules.end(), rule) !=
                                config.rules.end();
          if (!rule_requested) continue;
          for (ErrorNorm norm : norms) {
            OptimalCell cell;
            std::vector<double> totals(grid.size());
            std::vector<std::string> grid_failures(grid.size());
            parallel_for(grid.size(), workers, [&](uint64_t g) {
              try {
                double total = 0.0;
                for (uint64_t r = 0; r < R; ++r) {
                  EstimateReport rep =
                      estimate(*records[r], ThresholdPolicy::fixed(grid[g]), rule);
                  total += norm_error_sq(rep.estimate, *shared, norm);
                }
                totals[g] = total;
              } catch (const std::exception& ex) {
                grid_failures[g] = ex.what();
              }
            });
            for (const std::string& f : grid_failures) {
              if (!f.empty()) {
                cell.failure = f;
                break;
              }
            }
            if (cell.failure.empty()) {
              std::size_t best = 0;
              for (std::size_t g = 1; g < grid.size(); ++g) {
                if (totals[g] < totals[best]) best = g; // ties keep the smaller threshold
              }
              cell.varpi = grid[best];
              cell.errors.resize(R);
              std::vector<std::string> rep_failures(R);
              parallel_for(R, workers, [&](uint64_t r) {
                try {
                  EstimateReport rep =
                      estimate(*records[r], ThresholdPolicy::fixed(cell.varpi), rule);
                  cell.errors[r] = norm_error_sq(rep.estimate, *shared, norm);
                } catch (const std::exception& ex) {
                  rep_failures[r] = ex.what();
                }
              });
              for (const std::string& f : rep_failures) {
                if (!f.empty()) {
                  cell.failure = f;
                  break;
                }
              }
            }
            optimal_cells[rule == ThresholdRule::hard ? 0 : 1][norm == ErrorNorm::spectral ? 0 : 1] =
                std::move(cell);
          }
        }
      }

      std::size_t plain_index = 0;
      for (const EstimatorSpec& spec : specs) {
        if (spec.optimal) {
          for (ErrorNorm norm : norms) {
            const OptimalCell& cell =
                optimal_cells[spec.rule == ThresholdRule::hard ? 0 : 1]
                             [norm == ErrorNorm::spectral ? 0 : 1];
            if (!cell.failure.empty()) {
              table.rows.push_back(nan_row(b, n, spec, norm, cell.failure));
              continue;
            }
            MseRow row;
            row.qubits = b;
            row.d = d;
            row.n = n;
            row.policy = spec.policy_name;
            row.rule = spec.rule_name;
            row.norm = norm_name(norm);
            row.mse = mean_of(cell.errors);
            row.sem = sem_of(cell.errors, row.mse);
            row.replicates = R;
            row.threshold_mean = cell.varpi;
            table.rows.push_back(std::move(row));
          }
          continue;
        }
        std::size_t i = plain_index++;
        for (ErrorNorm norm : norms) {
          const std::vector<double>& xs = err[i][norm == ErrorNorm::spectral ? 0 : 1];
          MseRow row;
          row.qubits = b;
          row.d = d;
          row.n = n;
          row.policy = spec.policy_name;
          row.rule = spec.rule_name;
          row.norm = norm_name(norm);
          row.mse = mean_of(xs);
          row.sem = sem_of(xs, row.mse);
          row.replicates = R;
          row.threshold_mean = spec.baseline ? 0.0 : mean_of(thr[i]);
          table.rows.push_back(std::move(row));
        }
      }
    }
  }
  return table;
}

void emit_table(const MseTable& table, const std::string& path) {
  std::ofstream out = open_output(path);
  out << "d,n,policy,rule,norm,mse,sem,replicates,threshold_mean,diagnostic\n";
  for (const MseRow& row : table.rows) {
    out << row.d << ',' << row.n << ',' << row.policy << ',' << row.rule << ',' << row.norm << ','
        << format_double(row.mse) << ',' << format_double(row.sem) << ',' << row.replicates << ','
        << format_double(row.threshold_mean) << ',' << csv_escape(row.diagnostic) << '\n';
  }
  if (!out) throw input_error("failed while writing '" + path + "'");
}

bool emit_table_grouped(const MseTable& table, const std::string& path) {
  // Distinct (d, n) cells in first-appearance order.
  std::vector<std::pair<uint64_t, uint64_t>> cells;
  for (const MseRow& row : table.rows) {
    std::pair<uint64_t, uint64_t> key{row.d, row.n};
    if (std::find(cells.begin(), cells.end(), key) == cells.end()) cells.push_back(key);
  }
  struct Column {
    const char* header;
    const char* policy;
    const char* rule;
  };
  static constexpr Column kColumns[] = {
      {"without", "none", "none"},           {"optimal_hard", "optimal", "hard"},
      {"optimal_soft", "optimal", "soft"},   {"universal_hard", "universal", "hard"},
      {"universal_soft", "universal", "soft"}, {"individual_hard", "individual", "hard"},
      {"individual_soft", "individual", "soft"}};

  std::ostringstream body;
  for (const auto& [d, n] : cells) {
    for (const char* norm : {"spectral", "frobenius"}) {
      body << d << ',' << n << ',' << norm;
      for (const Column& col : kColumns) {
        const MseRow* row = table.find(d, n, col.policy, col.rule, norm);
        if (row == nullptr) return false;
        body << ',' << format_double(row->mse);
      }
      const MseRow* universal = table.find(d, n, "universal", "hard", norm);
      const MseRow* opt_hard = table.find(d, n, "optimal", "hard", norm);
      const MseRow* opt_soft = table.find(d, n, "optimal", "soft", norm);
      if (universal == nullptr || opt_hard == nullptr || opt_soft == nullptr) return false;
      body << ',' << format_double(universal->threshold_mean) << ','
           << format_double(opt_hard->threshold_mean) << ','
           << format_double(opt_soft->threshold_mean) << '\n';
    }
  }

  std::ofstream out = open_output(path);
  out << "d,n,norm";
  for (const Column& col : kColumns) out << ',' << col.header;
  out << ",universal_threshold,optimal_threshold_hard,optimal_threshold_soft\n";
  out << body.str();
  if (!out) throw input_error("failed while writing '" + path + "'");
  return true;
}

void emit_plot_data(const MseTable& table, PlotMode mode, const std::string& path) {
  const bool by_n = mode == PlotMode::mse_vs_n;
  // Axis values and series keys in first-appearance order.
  std::vector<uint64_t> axis;
  std::vector<const MseRow*> series; // representative row per series
  std::vector<std::string> names;
  for (const MseRow& row : table.rows) {
    uint64_t x = by_n ? row.n : row.d;
    if (std::find(axis.begin(), axis.end(), x) == axis.end()) axis.push_back(x);
    std::string name = by_n ? series_name("d" + std::to_string(row.d), row)
                            : series_name("n" + std::to_string(row.n), row);
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      names.push_back(name);
      series.push_back(&row);
    }
  }
  std::ofstream out = open_output(path);
  out << (by_n ? 'n' : 'd');
  for (const std::string& name : names) out << ',' << name;
  out << '\n';
  for (uint64_t x : axis) {
    out << x;
    for (const MseRow* rep : series) {
      const MseRow* row = by_n ? table.find(rep->d, x, rep->policy, rep->rule, rep->norm)
                               : table.find(x, rep->n, rep->policy, rep->rule, rep->norm);
      if (row == nullptr) {
        throw input_error("plot grid incomplete at axis value " + std::to_string(x));
      }
      double value = row->mse;
      if (mode == PlotMode::rescaled_vs_d) {
        double factor = row->norm == "spectral" ? static_cast<double>(row->d) * row->d
                                                : static_cast<double>(row->d);
        value *= factor;
      }
      out << ',' << format_double(value);
    }
    out << '\n';
  }
  if (!out) throw input_error("failed while writing '" + path + "'");
}

ScalingReport scaling_check(const MseTable& table, double q, const std::string& budget_note) {
  ScalingReport report;
  report.q = q;
  report.budget_note = budget_note;

  struct Key {
    uint64_t d;
    std::string policy, rule, norm;
    bool operator==(const Key& o) const {
      return d == o.d && policy == o.policy && rule == o.rule && norm == o.norm;
    }
  };
  std::vector<Key> keys;
  for (const MseRow& row : table.rows) {
    Key key{row.d, row.policy, row.rule, row.norm};
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }

  std::ostringstream text;
  text << "power-law fit of mse against shot count (log-log least squares)\n";
  text << "sparsity exponent q=" << format_double(q)
       << "; target slopes: spectral -(1-q), frobenius -(1-q/2)\n";
  if (!budget_note.empty()) text << "note: " << budget_note << '\n';

  for (const Key& key : keys) {
    std::vector<std::pair<double, double>> points; // (log n, log mse)
    for (const MseRow& row : table.rows) {
      if (!(Key{row.d, row.policy, row.rule, row.norm} == key)) continue;
      if (!std::isfinite(row.mse) || row.mse <= 0.0) continue;
      points.emplace_back(std::log(static_cast<double>(row.n)), std::log(row.mse));
    }
    if (points.size() < 3) continue;

    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : points) {
      mx += x;
      my += y;
    }
    mx /= static_cast<double>(points.size());
    my /= static_cast<double>(points.size());
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : points) {
      sxx += (x - mx) * (x - mx);
      sxy += (x - mx) * (y - my);
    }
    double slope = sxy / sxx;
    double intercept = my - slope * mx;
    double rss = 0.0;
    for (const auto& [x, y] : points) {
      double resid = y - (intercept + slope * x);
      rss += resid * resid;
    }
    int df = static_cast<int>(points.size()) - 2;
    double se = std::sqrt(rss / static_cast<double>(df) / sxx);
    double ci = t_critical_95(df) * se;

    SlopeFit fit;
    fit.d = key.d;
    fit.policy = key.policy;
    fit.rule = key.rule;
    fit.norm = key.norm;
    fit.slope = slope;
    fit.ci95 = ci;
    fit.target = key.norm == "spectral" ? -(1.0 - q) : -(1.0 - q / 2.0);
    fit.points = static_cast<int>(points.size());
    report.fits.push_back(fit);

    char line[256];
    std::snprintf(line, sizeof(line),
                  "d=%llu policy=%s rule=%s norm=%s: slope=%.4f ci95=%.4f target=%.4f points=%d "
                  "[%s]\n",
                  static_cast<unsigned long long>(key.d), key.policy.c_str(), key.rule.c_str(),
                  key.norm.c_str(), slope, ci, fit.target, fit.points,
                  std::abs(slope - fit.target) <= ci ? "within ci" : "outside ci");
    text << line;
  }
  if (report.fits.empty()) {
    throw input_error("scaling check needs at least 3 shot counts for some series");
  }
  report.text = text.str();
  return report;
}

uint64_t fnv1a64(const std::string& data) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void run_bench(const ExperimentConfig& config, const std::string& out_dir,
               const std::string& config_text) {
  std::filesystem::create_directories(out_dir);
  auto path_in = [&](const char* name) { return out_dir + "/" + name; };

  MseTable table = run_experiment(config);
  emit_table(table, path_in("mse.csv"));

  std::vector<std::string> outputs = {"mse.csv"};
  if (emit_table_grouped(table, path_in("table1.csv"))) outputs.push_back("table1.csv");

  std::set<uint64_t> distinct_n(config.shots_list.begin(), config.shots_list.end());
  std::set<uint32_t> distinct_b(config.qubit_list.begin(), config.qubit_list.end());
  if (distinct_n.size() >= 2) {
    emit_plot_data(table, PlotMode::mse_vs_n, path_in("plot_mse_vs_n.csv"));
    outputs.push_back("plot_mse_vs_n.csv");
  }
  if (distinct_b.size() >= 2) {
    emit_plot_data(table, PlotMode::mse_vs_d, path_in("plot_mse_vs_d.csv"));
    outputs.push_back("plot_mse_vs_d.csv");
    emit_plot_data(table, PlotMode::rescaled_vs_d, path_in("plot_rescaled_vs_d.csv"));
    outputs.push_back("plot_rescaled_vs_d.csv");
  }

  {
    std::ofstream out = open_output(path_in("scaling.txt"));
    if (distinct_n.size() >= 3) {
      // Generated truths are exactly sparse, so the target exponent uses q=0.
      try {
        ScalingReport scaling = scaling_check(table, 0.0, "generated truths are exactly sparse");
        out << scaling.text;
      } catch (const std::exception& ex) {
        out << "scaling fit unavailable: " << ex.what() << '\n';
      }
    } else {
      out << "scaling fit skipped: needs at least 3 distinct shot counts\n";
    }
    if (!out) throw input_error("failed while writing scaling.txt");
    outputs.push_back("scaling.txt");
  }

  unsigned resolved_workers =
      config.workers != 0 ? config.workers : std::max(1u, std::thread::hardware_concurrency());
  char hash_buf[32];
  std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config_text)));
  std::ofstream manifest = open_output(path_in("manifest.txt"));
  manifest << "version=" << kVersion << '\n';
  manifest << "state_format=" << kStateFormat << '\n';
  manifest << "counts_format=" << kCountsFormat << '\n';
  manifest << "master_seed=" << config.master_seed << '\n';
  manifest << "workers=" << resolved_workers << '\n';
  manifest << "replicates=" << config.replicates << '\n';
  manifest << "config_hash=fnv1a64:" << hash_buf << '\n';
  manifest << "outputs=";
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    manifest << (i == 0 ? "" : ",") << outputs[i];
  }
  manifest << '\n';
  outputs.push_back("manifest.txt");
  if (!manifest) throw input_error("failed while writing manifest.txt");
}

} // namespace qst
