#include "qst/pauli.hpp"

#include <algorithm>

namespace qst {

namespace {

void check_qubits(uint32_t qubits) {
  if (qubits < 1 || qubits > kMaxQubits)
    throw input_error("qubit count must be in [1, " + std::to_string(kMaxQubits) + "], got " +
                      std::to_string(qubits));
}

uint64_t label_space(uint32_t qubits) { return 1ull << (2 * qubits); } // 4^b

} // namespace

PauliLabel::PauliLabel(uint32_t qubits, uint64_t code) : qubits_(qubits), code_(code) {
  check_qubits(qubits);
  if (code >= label_space(qubits))
    throw input_error("pauli code " + std::to_string(code) + " out of range for " +
                      std::to_string(qubits) + " qubits");
}

PauliLabel PauliLabel::from_symbols(const std::vector<uint8_t>& symbols) {
  check_qubits(static_cast<uint32_t>(symbols.size()));
  uint64_t code = 0;
  for (uint8_t s : symbols) {
    if (s > 3) throw input_error("pauli symbol must be in {0,1,2,3}");
    code = (code << 2) | s;
  }
  return PauliLabel(static_cast<uint32_t>(symbols.size()), code);
}

PauliLabel PauliLabel::parse(const std::string& text) {
  if (text.empty()) throw input_error("empty pauli label");
  check_qubits(static_cast<uint32_t>(text.size()));
  uint64_t code = 0;
  for (char c : text) {
    uint64_t s;
    switch (c) {
      case 'I': s = 0; break;
      case 'X': s = 1; break;
      case 'Y': s = 2; break;
      case 'Z': s = 3; break;
      default:
        throw input_error("invalid pauli label character '" + std::string(1, c) +
                          "' (expected I, X, Y or Z)");
    }
    code = (code << 2) | s;
  }
  return PauliLabel(static_cast<uint32_t>(text.size()), code);
}

std::vector<uint8_t> PauliLabel::symbols() const {
  std::vector<uint8_t> out(qubits_);
  for (uint32_t k = 1; k <= qubits_; ++k) out[k - 1] = symbol(k);
  return out;
}

std::string PauliLabel::str() const {
  static const char lut[4] = {'I', 'X', 'Y', 'Z'};
  std::string out(qubits_, 'I');
  for (uint32_t k = 1; k <= qubits_; ++k) out[k - 1] = lut[symbol(k)];
  return out;
}

uint64_t label_to_index(const PauliLabel& label) { return label.code() + 1; }

PauliLabel index_to_label(uint64_t j, uint32_t qubits) {
  check_qubits(qubits);
  if (j < 1 || j > label_space(qubits))
    throw input_error("pauli index " + std::to_string(j) + " out of range [1, " +
                      std::to_string(label_space(qubits)) + "]");
  return PauliLabel(qubits, j - 1);
}

PauliColumn pauli_column(const PauliLabel& label, uint64_t col) {
  uint32_t b = label.qubits();
  uint64_t flip = 0;
  Complex phase(1.0, 0.0);
  for (uint32_t k = 1; k <= b; ++k) {
    uint64_t bitpos = b - k;
    uint64_t bit = (col >> bitpos) & 1ull;
    switch (label.symbol(k)) {
      case 0: break;
      case 1: flip |= 1ull << bitpos; break;
      case 2: // column 0 holds i, column 1 holds -i
        flip |= 1ull << bitpos;
        phase *= bit ? Complex(0.0, -1.0) : Complex(0.0, 1.0);
        break;
      case 3:
        if (bit) phase = -phase;
        break;
    }
  }
  return {col ^ flip, phase};
}

void pauli_matvec_inplace(const PauliLabel& label, ComplexVector& v) {
  uint32_t b = label.qubits();
  uint64_t d = 1ull << b;
  if (v.size() != d)
    throw input_error("pauli_matvec: vector length " + std::to_string(v.size()) +
                      " does not match dimension " + std::to_string(d));
  for (uint32_t k = 1; k <= b; ++k) {
    uint8_t s = label.symbol(k);
    if (s == 0) continue;
    uint64_t stride = 1ull << (b - k);
    for (uint64_t base = 0; base < d; base += 2 * stride) {
      for (uint64_t off = 0; off < stride; ++off) {
        Complex& v0 = v[base + off];
        Complex& v1 = v[base + off + stride];
        switch (s) {
          case 1:
            std::swap(v0, v1);
            break;
          case 2: { // sigma2 * (a, b) = (-i b, i a)
            Complex a = v0;
            v0 = Complex(0.0, -1.0) * v1;
            v1 = Complex(0.0, 1.0) * a;
            break;
          }
          case 3:
            v1 = -v1;
            break;
        }
      }
    }
  }
}

ComplexVector pauli_matvec(const PauliLabel& label, const ComplexVector& v) {
  ComplexVector out = v;
  pauli_matvec_inplace(label, out);
  return out;
}

DenseHermitian pauli_dense(const PauliLabel& label, int dense_limit) {
  if (static_cast<int>(label.qubits()) > dense_limit)
    throw input_error("pauli_dense: " + std::to_string(label.qubits()) +
                      " qubits exceeds the dense-path limit of " + std::to_string(dense_limit));
  uint64_t d = 1ull << label.qubits();
  DenseHermitian m = DenseHermitian::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (uint64_t c = 0; c < d; ++c) {
    PauliColumn pc = pauli_column(label, c);
    m(static_cast<Eigen::Index>(pc.row), static_cast<Eigen::Index>(c)) = pc.phase;
  }
  return m;
}

double trace_product(const PauliLabel& a, const PauliLabel& b2) {
  if (a.qubits() != b2.qubits())
    throw input_error("trace_product: qubit counts differ (" + std::to_string(a.qubits()) + " vs " +
                      std::to_string(b2.qubits()) + ")");
  return a.code() == b2.code() ? static_cast<double>(1ull << a.qubits()) : 0.0;
}

PauliExpansion::PauliExpansion(uint32_t qubits) : qubits_(qubits) { check_qubits(qubits); }

PauliExpansion::PauliExpansion(uint32_t qubits, std::vector<std::pair<uint64_t, double>> terms)
    : qubits_(qubits), terms_(std::move(terms)) {
  check_qubits(qubits);
  std::sort(terms_.begin(), terms_.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  uint64_t space = label_space(qubits);
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (terms_[i].first == 0) throw input_error("expansion must not contain the identity label");
    if (terms_[i].first >= space)
      throw input_error("expansion label code " + std::to_string(terms_[i].first) +
                        " out of range for " + std::to_string(qubits) + " qubits");
    if (i > 0 && terms_[i].first == terms_[i - 1].first)
      throw input_error("duplicate expansion label code " + std::to_string(terms_[i].first));
  }
}

double PauliExpansion::coefficient(uint64_t code) const {
  auto it = std::lower_bound(terms_.begin(), terms_.end(), code,
                             [](const auto& t, uint64_t c) { return t.first < c; });
  return (it != terms_.end() && it->first == code) ? it->second : 0.0;
}

void PauliExpansion::set(uint64_t code, double value) {
  if (code == 0) throw input_error("expansion must not contain the identity label");
  if (code >= label_space(qubits_))
    throw input_error("expansion label code out of range");
  auto it = std::lower_bound(terms_.begin(), terms_.end(), code,
                             [](const auto& t, uint64_t c) { return t.first < c; });
  if (it != terms_.end() && it->first == code) {
    if (value == 0.0)
      terms_.erase(it);
    else
      it->second = value;
  } else if (value != 0.0) {
    terms_.insert(it, {code, value});
  }
}

void expansion_matvec_accumulate(const PauliExpansion& coeffs, double scale, const ComplexVector& v,
                                 ComplexVector& w) {
  uint64_t d = coeffs.dim();
  if (v.size() != d || w.size() != d)
    throw input_error("expansion_matvec: vector length does not match dimension " +
                      std::to_string(d));
  ComplexVector tmp(d);
  for (const auto& [code, c] : coeffs.terms()) {
    tmp = v;
    pauli_matvec_inplace(PauliLabel(coeffs.qubits(), code), tmp);
    double f = scale * c;
    for (uint64_t i = 0; i < d; ++i) w[i] += f * tmp[i];
  }
}

ComplexVector expansion_matvec(const PauliExpansion& coeffs, double scale, const ComplexVector& v) {
  ComplexVector w(coeffs.dim(), Complex(0.0, 0.0));
  expansion_matvec_accumulate(coeffs, scale, v, w);
  return w;
}

} // namespace qst
