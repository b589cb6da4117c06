#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "qst/density.hpp"
#include "qst/rng.hpp"

namespace qst {

// Shot counts of +1 outcomes per observable; the sufficient statistic is
// N_j = 2 * count_j / shots - 1. Counts stay sorted by label code and never
// include the identity.
class MeasurementRecord {
public:
  MeasurementRecord(uint32_t qubits, uint64_t shots, std::vector<std::pair<uint64_t, uint64_t>> counts);

  uint32_t qubits() const { return qubits_; }
  uint64_t dim() const { return 1ull << qubits_; }
  uint64_t shots() const { return shots_; }
  const std::vector<std::pair<uint64_t, uint64_t>>& counts() const { return counts_; }

private:
  uint32_t qubits_;
  uint64_t shots_;
  std::vector<std::pair<uint64_t, uint64_t>> counts_;
};

// Per-observable averages N_j in [-1, 1], sorted by label code.
struct AverageOutcomes {
  uint32_t qubits;
  std::vector<std::pair<uint64_t, double>> values;
};

// One draw from Binomial(n, p): inversion when n * min(p, 1-p) is small,
// otherwise transformed rejection with an exact log-pmf acceptance test.
// The distribution is exact either way; no normal approximation.
uint64_t sample_binomial(uint64_t n, double p, Rng& rng);

// Each observable's count is Binomial(shots, (1 + beta_j)/2), drawn from an
// independent substream derived from (seed, label code), so the result is
// independent of label order and worker count.
MeasurementRecord sample_measurements(const DensityState& state, uint64_t shots,
                                      const std::vector<PauliLabel>& labels, uint64_t seed);

AverageOutcomes averages(const MeasurementRecord& record);

// All d^2 - 1 non-identity labels in index order.
std::vector<PauliLabel> all_nonidentity_labels(uint32_t qubits);

// Text format: "pauli-counts v1 qubits=<b> shots=<n>" then "<LABEL> <count>".
void save_record(const MeasurementRecord& record, std::ostream& out);
void save_record(const MeasurementRecord& record, const std::string& path);
// source_name prefixes line-numbered diagnostics.
MeasurementRecord load_record(std::istream& in, const std::string& source_name);
MeasurementRecord load_record(const std::string& path);

} // namespace qst
