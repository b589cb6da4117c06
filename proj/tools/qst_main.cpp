#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qst/density.hpp"
#include "qst/errors.hpp"
#include "qst/estimator.hpp"
#include "qst/harness.hpp"
#include "qst/measurement.hpp"
#include "qst/norms.hpp"
#include "qst/version.hpp"

namespace {

using namespace qst;

std::string format_value(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

// "-" selects the standard streams so subcommands compose as a pipeline.
DensityState load_state_arg(const std::string& path) {
  if (path == "-") return load_state(std::cin, "<stdin>");
  return load_state(path);
}

void save_state_arg(const DensityState& state, const std::string& path) {
  if (path == "-") {
    save_state(state, std::cout);
    if (!std::cout) throw input_error("write to stdout failed");
    return;
  }
  save_state(state, path);
}

MeasurementRecord load_record_arg(const std::string& path) {
  if (path == "-") return load_record(std::cin, "<stdin>");
  return load_record(path);
}

void save_record_arg(const MeasurementRecord& record, const std::string& path) {
  if (path == "-") {
    save_record(record, std::cout);
    if (!std::cout) throw input_error("write to stdout failed");
    return;
  }
  save_record(record, path);
}

LogBase parse_log_base_flag(const std::string& text) {
  if (text == "ten") return LogBase::ten;
  if (text == "natural") return LogBase::natural;
  throw input_error("unknown log base '" + text + "' (expected 'ten' or 'natural')");
}

ThresholdPolicy parse_policy_flag(const std::string& text, double hbar, LogBase base) {
  if (text == "universal") return ThresholdPolicy::universal(hbar, base);
  if (text == "individual") return ThresholdPolicy::individual(hbar, base);
  if (text.rfind("fixed:", 0) == 0) {
    std::string value_text = text.substr(6);
    char* end = nullptr;
    double v = std::strtod(value_text.c_str(), &end);
    if (end == value_text.c_str() || *end != '\0' || !std::isfinite(v) || v < 0.0) {
      throw input_error("invalid fixed threshold '" + value_text + "'");
    }
    return ThresholdPolicy::fixed(v);
  }
  throw input_error("unknown policy '" + text +
                    "' (expected universal, individual, or fixed:<v>)");
}

struct GenStateArgs {
  uint32_t qubits = 0;
  uint64_t seed = 0;
  int64_t support = -1; // negative selects floor(6 ln d)
  double amplitude = 0.2;
  std::string out = "-";
};

int run_gen_state(const GenStateArgs& args) {
  uint64_t support = args.support >= 0
                         ? static_cast<uint64_t>(args.support)
                         : static_cast<uint64_t>(std::floor(
                               6.0 * static_cast<double>(args.qubits) * std::log(2.0)));
  Rng rng(args.seed);
  GenerationStats stats;
  DensityState state = random_sparse_state(args.qubits, rng, support, args.amplitude,
                                           kPsdTolerance, kGenerationRetryLimit, &stats);
  save_state_arg(state, args.out);
  std::ostream& info = args.out == "-" ? std::cerr : std::cout;
  info << "support=" << support << " attempts=" << stats.attempts << "\n";
  return 0;
}

struct MeasureArgs {
  std::string state = "-";
  uint64_t shots = 0;
  uint64_t seed = 0;
  std::string out = "-";
};

int run_measure(const MeasureArgs& args) {
  DensityState state = load_state_arg(args.state);
  std::vector<PauliLabel> labels = all_nonidentity_labels(state.qubits());
  MeasurementRecord record = sample_measurements(state, args.shots, labels, args.seed);
  save_record_arg(record, args.out);
  return 0;
}

struct EstimateArgs {
  std::string record = "-";
  std::string rule_text;
  std::string policy_text;
  double hbar = 1.01;
  std::string log_base_text = "ten";
  bool project = false;
  std::string out = "-";
};

int run_estimate(const EstimateArgs& args) {
  MeasurementRecord record = load_record_arg(args.record);
  ThresholdRule rule = parse_rule(args.rule_text);
  ThresholdPolicy policy =
      parse_policy_flag(args.policy_text, args.hbar, parse_log_base_flag(args.log_base_text));
  EstimateReport report = estimate(record, policy, rule);
  DensityState result = args.project ? psd_project(report.estimate) : std::move(report.estimate);
  save_state_arg(result, args.out);
  std::ostream& info = args.out == "-" ? std::cerr : std::cout;
  info << "survivors=" << report.survivors << "\n";
  return 0;
}

struct EvalArgs {
  std::string truth;
  std::string estimate;
  std::string schatten_text;
  std::string method_text = "auto";
};

int run_eval(const EvalArgs& args) {
  DensityState truth = load_state_arg(args.truth);
  DensityState est = load_state_arg(args.estimate);

  std::vector<double> orders;
  std::vector<std::string> order_tokens;
  if (!args.schatten_text.empty()) {
    std::istringstream iss(args.schatten_text);
    std::string token;
    while (std::getline(iss, token, ',')) {
      if (token.empty()) throw input_error("--schatten: empty list item");
      double s;
      if (token == "inf") {
        s = std::numeric_limits<double>::infinity();
      } else {
        char* end = nullptr;
        s = std::strtod(token.c_str(), &end);
        if (end == token.c_str() || *end != '\0' || !(s >= 1.0)) {
          throw input_error("--schatten: invalid order '" + token + "' (needs s >= 1 or inf)");
        }
      }
      orders.push_back(s);
      order_tokens.push_back(token);
    }
  }

  EigMethod method;
  if (args.method_text == "dense") {
    method = EigMethod::dense;
  } else if (args.method_text == "iterative") {
    method = EigMethod::iterative;
  } else if (args.method_text == "auto") {
    method = truth.qubits() <= kNormDenseQubitLimit ? EigMethod::dense : EigMethod::iterative;
  } else {
    throw input_error("unknown method '" + args.method_text +
                      "' (expected auto, dense, or iterative)");
  }

  ErrorReport report = error_report(truth, est, orders, method);
  std::cout << "qubits=" << truth.qubits() << "\n";
  std::cout << "d=" << (uint64_t{1} << truth.qubits()) << "\n";
  std::cout << "method=" << (method == EigMethod::dense ? "dense" : "iterative") << "\n";
  std::cout << "spectral_sq=" << format_value(report.spectral_sq) << "\n";
  std::cout << "spectral=" << format_value(std::sqrt(report.spectral_sq)) << "\n";
  std::cout << "frobenius_sq=" << format_value(report.frobenius_sq) << "\n";
  std::cout << "frobenius=" << format_value(std::sqrt(report.frobenius_sq)) << "\n";
  for (std::size_t i = 0; i < report.schatten.size(); ++i) {
    std::cout << "schatten_" << order_tokens[i] << "=" << format_value(report.schatten[i].second)
              << "\n";
  }
  if (!std::cout) throw input_error("write to stdout failed");
  return 0;
}

struct ProjectArgs {
  std::string in = "-";
  std::string out = "-";
};

int run_project(const ProjectArgs& args) {
  DensityState state = load_state_arg(args.in);
  save_state_arg(psd_project(state), args.out);
  return 0;
}

struct BenchArgs {
  std::string config;
  std::string out_dir;
  int64_t workers = -1; // negative keeps the config value
};

int run_bench_cmd(const BenchArgs& args) {
  std::ifstream in(args.config);
  if (!in) throw input_error("cannot open config file '" + args.config + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();
  std::istringstream iss(text);
  ExperimentConfig config = parse_config(iss, args.config);
  if (args.workers >= 0) config.workers = static_cast<unsigned>(args.workers);
  run_bench(config, args.out_dir, text);
  std::cout << "bench: wrote artifacts to " << args.out_dir << " (inventory in manifest.txt)\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse density-matrix estimation from Pauli measurement counts"};
  app.require_subcommand(0, 1);
  std::string version_text = std::string("qst ") + qst::kVersion + " (formats: " +
                             qst::kStateFormat + ", " + qst::kCountsFormat + ")";
  app.set_version_flag("--version", version_text);

  GenStateArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen-state", "Generate a random sparse density state");
  gen->add_option("--qubits", gen_args.qubits, "Qubit count b (d = 2^b)")
      ->required()
      ->check(CLI::Range(1u, 31u));
  gen->add_option("--seed", gen_args.seed, "Generator seed")->required();
  gen->add_option("--support", gen_args.support,
                  "Number of nonzero coefficients (default floor(6 ln d))");
  gen->add_option("--amplitude", gen_args.amplitude, "Coefficient amplitude bound (default 0.2)");
  gen->add_option("--out", gen_args.out, "Output state file, '-' for stdout");

  MeasureArgs measure_args;
  CLI::App* measure = app.add_subcommand("measure", "Sample Pauli measurement counts from a state");
  measure->add_option("--state", measure_args.state, "Input state file, '-' for stdin");
  measure->add_option("--shots", measure_args.shots, "Measurements per observable")
      ->required()
      ->check(CLI::PositiveNumber);
  measure->add_option("--seed", measure_args.seed, "Sampler seed")->required();
  measure->add_option("--out", measure_args.out, "Output counts file, '-' for stdout");

  EstimateArgs estimate_args;
  CLI::App* est = app.add_subcommand("estimate", "Estimate a density state from counts");
  est->add_option("--record", estimate_args.record, "Input counts file, '-' for stdin");
  est->add_option("--rule", estimate_args.rule_text, "Threshold rule: hard | soft")->required();
  est->add_option("--policy", estimate_args.policy_text,
                  "Threshold policy: universal | individual | fixed:<v>")
      ->required();
  est->add_option("--hbar", estimate_args.hbar, "Threshold constant (default 1.01)");
  est->add_option("--log-base", estimate_args.log_base_text,
                  "Logarithm base in thresholds: ten | natural (default ten)");
  est->add_flag("--project", estimate_args.project, "Project the estimate onto density matrices");
  est->add_option("--out", estimate_args.out, "Output state file, '-' for stdout");

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Report estimation error between two states");
  eval_cmd->add_option("--truth", eval_args.truth, "Reference state file")->required();
  eval_cmd->add_option("--estimate", eval_args.estimate, "Estimated state file")->required();
  eval_cmd->add_option("--schatten", eval_args.schatten_text,
                       "Comma list of Schatten orders, e.g. 1,2,inf");
  eval_cmd->add_option("--method", eval_args.method_text,
                       "Spectral solver: auto | dense | iterative");

  ProjectArgs project_args;
  CLI::App* project = app.add_subcommand("project", "Project a state onto density matrices");
  project->add_option("--in", project_args.in, "Input state file, '-' for stdin");
  project->add_option("--out", project_args.out, "Output state file, '-' for stdout");

  BenchArgs bench_args;
  CLI::App* bench = app.add_subcommand("bench", "Run the Monte Carlo benchmark harness");
  bench->add_option("--config", bench_args.config, "key=value experiment config file")->required();
  bench->add_option("--out-dir", bench_args.out_dir, "Output directory")->required();
  bench->add_option("--workers", bench_args.workers, "Override the config worker count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2; // flag/subcommand errors are input errors
  }

  try {
    if (app.got_subcommand(gen)) return run_gen_state(gen_args);
    if (app.got_subcommand(measure)) return run_measure(measure_args);
    if (app.got_subcommand(est)) return run_estimate(estimate_args);
    if (app.got_subcommand(eval_cmd)) return run_eval(eval_args);
    if (app.got_subcommand(project)) return run_project(project_args);
    if (app.got_subcommand(bench)) return run_bench_cmd(bench_args);
    std::cerr << app.help();
    return 2;
  } catch (const qst::input_error& e) {
    std::cerr << "qst: error: " << e.what() << "\n";
    return 2;
  } catch (const qst::generation_error& e) {
    std::cerr << "qst: error: " << e.what() << "\n";
    return 3;
  } catch (const qst::numerical_error& e) {
    std::cerr << "qst: error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "qst: internal error: " << e.what() << "\n";
    return 4;
  }
}
