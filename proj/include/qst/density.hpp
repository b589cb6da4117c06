#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "qst/lanczos.hpp"
#include "qst/pauli.hpp"
#include "qst/rng.hpp"

namespace qst {

inline constexpr double kPsdTolerance = 1e-10;
inline constexpr double kDropTolerance = 1e-14;
inline constexpr uint64_t kGenerationRetryLimit = 10000;

// Density matrix in Pauli form: rho = I/d + sum_j beta_j B_j / d.
// The identity coefficient is fixed at 1, so the trace is exactly 1 and the
// matrix is Hermitian by construction; positivity is a separate check.
class DensityState {
public:
  explicit DensityState(PauliExpansion expansion);

  uint32_t qubits() const { return expansion_.qubits(); }
  uint64_t dim() const { return expansion_.dim(); }
  const PauliExpansion& expansion() const { return expansion_; }

  // Stored coefficient, 0 if absent; the identity label returns 1.
  double coefficient(const PauliLabel& label) const;

private:
  PauliExpansion expansion_;
};

DenseHermitian to_dense(const DensityState& state, int dense_limit = kDenseQubitLimit);

// Recovers beta_j = tr(m B_j) for every non-identity label, dropping
// |beta_j| < drop_tolerance. Requires Hermitian input with trace within 1e-9 of 1.
DensityState from_dense(const DenseHermitian& m, double drop_tolerance = kDropTolerance,
                        int dense_limit = kDenseQubitLimit);

// Smallest eigenvalue. Dense path (b <= kNormDenseQubitLimit) is an exact
// eigendecomposition; the iterative path runs Lanczos on the matvec.
double min_eigenvalue(const DensityState& state, EigMethod method);
double min_eigenvalue(const DensityState& state); // dense when allowed, else iterative

struct GenerationStats {
  uint64_t attempts = 0;
};

// Draws support_size distinct non-identity labels uniformly, assigns i.i.d.
// Uniform[-amplitude, amplitude] coefficients, and rejects until the state is
// positive semidefinite within psd_tolerance. Deterministic given the
// generator's seed.
DensityState random_sparse_state(uint32_t qubits, Rng& rng, uint64_t support_size, double amplitude,
                                 double psd_tolerance = kPsdTolerance,
                                 uint64_t retry_limit = kGenerationRetryLimit,
                                 GenerationStats* stats = nullptr);

// sum over stored coefficients of |beta_j|^q, q in [0, 1]; 0^0 counts as 0,
// so q = 0 is the support size.
double sparsity_norm(const DensityState& state, double q);

// Text format: "pauli-state v1 qubits=<b>" then "<LABEL> <coefficient>" per
// line, 17 significant digits, sorted by label index.
void save_state(const DensityState& state, std::ostream& out);
void save_state(const DensityState& state, const std::string& path);
// source_name prefixes line-numbered diagnostics.
DensityState load_state(std::istream& in, const std::string& source_name);
DensityState load_state(const std::string& path);

} // namespace qst
