#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qst/errors.hpp"

namespace qst {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;
using DenseHermitian = Eigen::MatrixXcd;

// 4^b must fit in uint64.
inline constexpr uint32_t kMaxQubits = 31;
// Dense-path limit for explicit d x d matrices (d = 1024).
inline constexpr int kDenseQubitLimit = 10;
// Dense-path limit for eigendecompositions in the norm/eigenvalue routines (d = 256).
inline constexpr int kNormDenseQubitLimit = 8;

// Tensor-product Pauli word over b qubits. Symbols: 0=I, 1=X, 2=Y, 3=Z.
// Packed base-4 with qubit 1 in the most significant pair, so that
// code() == index - 1 and lexicographic word order equals index order.
class PauliLabel {
public:
  PauliLabel(uint32_t qubits, uint64_t code);
  static PauliLabel from_symbols(const std::vector<uint8_t>& symbols);
  // Word over {I,X,Y,Z}, e.g. "XZI".
  static PauliLabel parse(const std::string& text);

  uint32_t qubits() const { return qubits_; }
  uint64_t code() const { return code_; }
  bool is_identity() const { return code_ == 0; }
  // k in [1, qubits], qubit 1 first in the word.
  uint8_t symbol(uint32_t k) const { return static_cast<uint8_t>((code_ >> (2 * (qubits_ - k))) & 3u); }
  std::vector<uint8_t> symbols() const;
  std::string str() const;

  friend bool operator==(const PauliLabel& a, const PauliLabel& b) {
    return a.qubits_ == b.qubits_ && a.code_ == b.code_;
  }

private:
  uint32_t qubits_;
  uint64_t code_;
};

// Index identification: j = 1 + sum_k symbol_k * 4^(b-k), j in [1, 4^b].
uint64_t label_to_index(const PauliLabel& label);
PauliLabel index_to_label(uint64_t j, uint32_t qubits);

// One nonzero per column: B[row, col] = phase with row = col ^ flip_mask.
struct PauliColumn {
  uint64_t row;
  Complex phase;
};
PauliColumn pauli_column(const PauliLabel& label, uint64_t col);

// B_label * v, applied one 2x2 factor at a time along its tensor axis; O(d*b).
void pauli_matvec_inplace(const PauliLabel& label, ComplexVector& v);
ComplexVector pauli_matvec(const PauliLabel& label, const ComplexVector& v);

// Explicit Kronecker product; dense-path limit guarded.
DenseHermitian pauli_dense(const PauliLabel& label, int dense_limit = kDenseQubitLimit);

// tr(B_a B_b) = d if a == b else 0.
double trace_product(const PauliLabel& a, const PauliLabel& b2);

// Sparse real expansion over non-identity Pauli words, keyed by label code.
// Terms stay sorted by code; the identity is never stored.
class PauliExpansion {
public:
  explicit PauliExpansion(uint32_t qubits);
  // Sorts and validates; duplicate or identity codes are rejected.
  PauliExpansion(uint32_t qubits, std::vector<std::pair<uint64_t, double>> terms);

  uint32_t qubits() const { return qubits_; }
  uint64_t dim() const { return 1ull << qubits_; }
  const std::vector<std::pair<uint64_t, double>>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }

  // 0 if absent.
  double coefficient(uint64_t code) const;
  // value 0 erases.
  void set(uint64_t code, double value);

private:
  uint32_t qubits_;
  std::vector<std::pair<uint64_t, double>> terms_;
};

// (scale * sum_j c_j B_j) * v; O(terms * d * b).
ComplexVector expansion_matvec(const PauliExpansion& coeffs, double scale, const ComplexVector& v);
// w += scale * sum_j c_j B_j v, preallocated output; the kernel behind the iterative paths.
void expansion_matvec_accumulate(const PauliExpansion& coeffs, double scale, const ComplexVector& v,
                                 ComplexVector& w);

} // namespace qst
