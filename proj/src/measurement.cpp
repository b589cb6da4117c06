#include "qst/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace qst {

namespace {

// Sequential CDF inversion; expected n*p + 1 pmf steps.
uint64_t binomial_inversion(uint64_t n, double p, Rng& rng) {
  double q = 1.0 - p;
  double s = p / q;
  double f = std::exp(static_cast<double>(n) * std::log1p(-p)); // q^n, no underflow for small n*p
  double u = rng.next_unit();
  double cdf = f;
  uint64_t k = 0;
  while (u > cdf && k < n) {
    ++k;
    f *= s * (static_cast<double>(n - k + 1) / static_cast<double>(k));
    cdf += f;
  }
  return k;
}

// Transformed rejection (Hormann's BTRS), valid for n * min(p, 1-p) >= 10.
// The final acceptance test compares against the exact log-pmf ratio, so the
// returned distribution is exact.
uint64_t binomial_btrs(uint64_t n, double p, Rng& rng) {
  double nd = static_cast<double>(n);
  double q = 1.0 - p;
  double spq = std::sqrt(nd * p * q);
  double b = 1.15 + 2.53 * spq;
  double a = -0.0873 + 0.0248 * b + 0.01 * p;
  double c = nd * p + 0.5;
  double vr = 0.92 - 4.2 / b;
  double alpha = (2.83 + 5.1 / b) * spq;
  double lpq = std::log(p / q);
  double m = std::floor((nd + 1.0) * p);
  double h = std::lgamma(m + 1.0) + std::lgamma(nd - m + 1.0);
  while (true) {
    double u = rng.next_unit() - 0.5;
    double v = rng.next_unit();
    double us = 0.5 - std::abs(u);
    double kd = std::floor((2.0 * a / us + b) * u + c);
    if (kd < 0.0 || kd > nd) continue;
    if (us >= 0.07 && v <= vr) return static_cast<uint64_t>(kd);
    double logv = std::log(v * alpha / (a / (us * us) + b));
    if (logv <= h - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0) + (kd - m) * lpq)
      return static_cast<uint64_t>(kd);
  }
}

} // namespace

uint64_t sample_binomial(uint64_t n, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw input_error("sample_binomial: probability out of [0, 1]");
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  bool flip = p > 0.5;
  double pmin = flip ? 1.0 - p : p;
  uint64_t k = static_cast<double>(n) * pmin < 10.0 ? binomial_inversion(n, pmin, rng)
                                                    : binomial_btrs(n, pmin, rng);
  return flip ? n - k : k;
}

MeasurementRecord::MeasurementRecord(uint32_t qubits, uint64_t shots,
                                     std::vector<std::pair<uint64_t, uint64_t>> counts)
    : qubits_(qubits), shots_(shots), counts_(std::move(counts)) {
  if (qubits < 1 || qubits > kMaxQubits) throw input_error("record: invalid qubit count");
  if (shots < 1) throw input_error("record: shots must be at least 1");
  std::sort(counts_.begin(), counts_.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  uint64_t space = 1ull << (2 * qubits);
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    const auto& [code, count] = counts_[i];
    if (code == 0) throw input_error("record: the identity label cannot be measured");
    if (code >= space) throw input_error("record: label code out of range");
    if (count > shots_)
      throw input_error("record: count " + std::to_string(count) + " exceeds shots " +
                        std::to_string(shots_));
    if (i > 0 && code == counts_[i - 1].first)
      throw input_error("record: duplicate label code " + std::to_string(code));
  }
}

MeasurementRecord sample_measurements(const DensityState& state, uint64_t shots,
                                      const std::vector<PauliLabel>& labels, uint64_t seed) {
  if (shots < 1) throw input_error("sample_measurements: shots must be at least 1");
  std::vector<uint64_t> codes;
  codes.reserve(labels.size());
  for (const auto& label : labels) {
    if (label.qubits() != state.qubits())
      throw input_error("sample_measurements: label qubit count does not match the state");
    if (label.is_identity())
      throw input_error("sample_measurements: the identity observable carries no information");
    codes.push_back(label.code());
  }
  std::sort(codes.begin(), codes.end());
  codes.erase(std::unique(codes.begin(), codes.end()), codes.end());

  std::vector<std::pair<uint64_t, uint64_t>> counts;
  counts.reserve(codes.size());
  for (uint64_t code : codes) {
    double beta = state.coefficient(PauliLabel(state.qubits(), code));
    if (std::abs(beta) > 1.0 + 1e-9)
      throw input_error("sample_measurements: coefficient " + std::to_string(beta) +
                        " outside [-1, 1] signals an unphysical state");
    double prob = std::clamp(0.5 * (1.0 + beta), 0.0, 1.0);
    Rng sub(derive_seed(seed, {code}));
    counts.push_back({code, sample_binomial(shots, prob, sub)});
  }
  return MeasurementRecord(state.qubits(), shots, std::move(counts));
}

AverageOutcomes averages(const MeasurementRecord& record) {
  AverageOutcomes out;
  out.qubits = record.qubits();
  out.values.reserve(record.counts().size());
  double n = static_cast<double>(record.shots());
  for (const auto& [code, count] : record.counts())
    out.values.push_back({code, 2.0 * static_cast<double>(count) / n - 1.0});
  return out;
}

std::vector<PauliLabel> all_nonidentity_labels(uint32_t qubits) {
  if (qubits < 1 || qubits > kMaxQubits) throw input_error("all_nonidentity_labels: invalid qubit count");
  if (qubits > 12)
    throw input_error("all_nonidentity_labels: enumerating 4^" + std::to_string(qubits) +
                      " labels is not supported");
  uint64_t space = 1ull << (2 * qubits);
  std::vector<PauliLabel> out;
  out.reserve(space - 1);
  for (uint64_t code = 1; code < space; ++code) out.emplace_back(qubits, code);
  return out;
}

void save_record(const MeasurementRecord& record, std::ostream& out) {
  out << "pauli-counts v1 qubits=" << record.qubits() << " shots=" << record.shots() << "\n";
  for (const auto& [code, count] : record.counts())
    out << PauliLabel(record.qubits(), code).str() << " " << count << "\n";
}

void save_record(const MeasurementRecord& record, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot open '" + path + "' for writing");
  save_record(record, out);
  if (!out) throw input_error("write failed for '" + path + "'");
}

MeasurementRecord load_record(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) throw input_error(path + ":1: empty file");
  std::istringstream header(line);
  std::string magic, version, qubits_kv, shots_kv;
  header >> magic >> version >> qubits_kv >> shots_kv;
  if (magic != "pauli-counts" || version != "v1" || qubits_kv.rfind("qubits=", 0) != 0 ||
      shots_kv.rfind("shots=", 0) != 0)
    throw input_error(path + ":1: expected header 'pauli-counts v1 qubits=<b> shots=<n>'");
  uint32_t b = 0;
  uint64_t shots = 0;
  try {
    std::size_t pos = 0;
    unsigned long qb = std::stoul(qubits_kv.substr(7), &pos);
    if (pos != qubits_kv.size() - 7) throw std::invalid_argument("trailing characters");
    b = static_cast<uint32_t>(qb);
    pos = 0;
    shots = std::stoull(shots_kv.substr(6), &pos);
    if (pos != shots_kv.size() - 6) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    throw input_error(path + ":1: invalid qubits= or shots= value");
  }

  std::vector<std::pair<uint64_t, uint64_t>> counts;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word, count_text, extra;
    if (!(ls >> word >> count_text) || (ls >> extra))
      throw input_error(path + ":" + std::to_string(lineno) + ": expected '<LABEL> <count>'");
    PauliLabel label(1, 0);
    try {
      label = PauliLabel::parse(word);
    } catch (const input_error& e) {
      throw input_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (label.is_identity())
      throw input_error(path + ":" + std::to_string(lineno) +
                        ": the identity observable cannot be measured");
    uint64_t count = 0;
    try {
      std::size_t pos = 0;
      count = std::stoull(count_text, &pos);
      if (pos != count_text.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw input_error(path + ":" + std::to_string(lineno) + ": invalid count '" + count_text + "'");
    }
    counts.push_back({label.code(), count});
    if (label.qubits() != b)
      throw input_error(path + ":" + std::to_string(lineno) + ": label length " +
                        std::to_string(label.qubits()) + " does not match qubits=" + std::to_string(b));
    if (count > shots)
      throw input_error(path + ":" + std::to_string(lineno) + ": count " + std::to_string(count) +
                        " exceeds shots=" + std::to_string(shots));
  }
  try {
    return MeasurementRecord(b, shots, std::move(counts));
  } catch (const input_error& e) {
    throw input_error(path + ": " + e.what());
  }
}

MeasurementRecord load_record(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open '" + path + "'");
  return load_record(in, path);
}

} // namespace qst
