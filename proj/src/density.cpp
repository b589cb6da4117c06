#include "qst/density.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <Eigen/Dense>

namespace qst {

namespace {

std::string format_coefficient(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

} // namespace

DensityState::DensityState(PauliExpansion expansion) : expansion_(std::move(expansion)) {}

double DensityState::coefficient(const PauliLabel& label) const {
  if (label.qubits() != qubits())
    throw input_error("coefficient: label has " + std::to_string(label.qubits()) +
                      " qubits, state has " + std::to_string(qubits()));
  if (label.is_identity()) return 1.0;
  return expansion_.coefficient(label.code());
}

DenseHermitian to_dense(const DensityState& state, int dense_limit) {
  uint32_t b = state.qubits();
  if (static_cast<int>(b) > dense_limit)
    throw input_error("to_dense: " + std::to_string(b) + " qubits exceeds the dense-path limit of " +
                      std::to_string(dense_limit));
  uint64_t d = state.dim();
  double inv_d = 1.0 / static_cast<double>(d);
  DenseHermitian m = DenseHermitian::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (uint64_t c = 0; c < d; ++c) m(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)) = inv_d;
  for (const auto& [code, beta] : state.expansion().terms()) {
    PauliLabel label(b, code);
    double f = beta * inv_d;
    for (uint64_t c = 0; c < d; ++c) {
      PauliColumn pc = pauli_column(label, c);
      m(static_cast<Eigen::Index>(pc.row), static_cast<Eigen::Index>(c)) += f * pc.phase;
    }
  }
  return m;
}

DensityState from_dense(const DenseHermitian& m, double drop_tolerance, int dense_limit) {
  if (m.rows() != m.cols()) throw input_error("from_dense: matrix must be square");
  uint64_t d = static_cast<uint64_t>(m.rows());
  if (d == 0 || (d & (d - 1)) != 0)
    throw input_error("from_dense: dimension " + std::to_string(d) + " is not a power of two");
  uint32_t b = 0;
  while ((1ull << b) < d) ++b;
  if (static_cast<int>(b) > dense_limit)
    throw input_error("from_dense: " + std::to_string(b) +
                      " qubits exceeds the dense-path limit of " + std::to_string(dense_limit));

  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  double herm_err = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (herm_err > 1e-12 * scale)
    throw input_error("from_dense: matrix is not Hermitian (max asymmetry " +
                      format_coefficient(herm_err) + ")");
  double tr = m.trace().real();
  if (std::abs(tr - 1.0) > 1e-9)
    throw input_error("from_dense: trace " + format_coefficient(tr) + " is not 1 within 1e-9");

  // beta_j = tr(m B_j); B_j has one nonzero per column, so each trace is O(d).
  std::vector<std::pair<uint64_t, double>> terms;
  uint64_t space = 1ull << (2 * b);
  for (uint64_t code = 1; code < space; ++code) {
    PauliLabel label(b, code);
    Complex t(0.0, 0.0);
    for (uint64_t c = 0; c < d; ++c) {
      PauliColumn pc = pauli_column(label, c);
      t += m(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(pc.row)) * pc.phase;
    }
    double beta = t.real();
    if (std::abs(beta) >= drop_tolerance) terms.push_back({code, beta});
  }
  return DensityState(PauliExpansion(b, std::move(terms)));
}

double min_eigenvalue(const DensityState& state, EigMethod method) {
  if (method == EigMethod::dense) {
    if (static_cast<int>(state.qubits()) > kNormDenseQubitLimit)
      throw input_error("min_eigenvalue: " + std::to_string(state.qubits()) +
                        " qubits exceeds the dense eigen-path limit of " +
                        std::to_string(kNormDenseQubitLimit));
    Eigen::SelfAdjointEigenSolver<DenseHermitian> es(to_dense(state), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw numerical_error("min_eigenvalue: eigensolver failed");
    return es.eigenvalues()(0);
  }
  uint64_t d = state.dim();
  double inv_d = 1.0 / static_cast<double>(d);
  auto apply = [&](const ComplexVector& v, ComplexVector& w) {
    for (uint64_t i = 0; i < d; ++i) w[i] = inv_d * v[i];
    expansion_matvec_accumulate(state.expansion(), inv_d, v, w);
  };
  LanczosResult r = lanczos_extreme_eigs(apply, d);
  if (!r.converged) {
    std::ostringstream msg;
    msg << "min_eigenvalue: lanczos did not converge after " << r.iterations
        << " iterations (best estimate " << r.eig_min << ", residual " << r.residual_min << ")";
    throw numerical_error(msg.str());
  }
  return r.eig_min;
}

double min_eigenvalue(const DensityState& state) {
  return min_eigenvalue(state, static_cast<int>(state.qubits()) <= kNormDenseQubitLimit
                                   ? EigMethod::dense
                                   : EigMethod::iterative);
}

DensityState random_sparse_state(uint32_t qubits, Rng& rng, uint64_t support_size, double amplitude,
                                 double psd_tolerance, uint64_t retry_limit, GenerationStats* stats) {
  if (qubits < 1 || qubits > kMaxQubits) throw input_error("random_sparse_state: invalid qubit count");
  uint64_t space = (1ull << (2 * qubits)) - 1; // non-identity labels
  if (support_size > space)
    throw input_error("random_sparse_state: support size " + std::to_string(support_size) +
                      " exceeds the " + std::to_string(space) + " non-identity labels");
  if (!(amplitude > 0.0 && amplitude <= 1.0))
    throw input_error("random_sparse_state: amplitude must be in (0, 1]");

  GenerationStats local;
  GenerationStats& st = stats ? *stats : local;
  st.attempts = 0;
  while (true) {
    if (st.attempts >= retry_limit)
      throw generation_error("random_sparse_state: no positive semidefinite draw in " +
                             std::to_string(retry_limit) + " attempts");
    ++st.attempts;

    // Floyd's sampling: support_size distinct codes in [1, space].
    std::set<uint64_t> codes;
    for (uint64_t j = space - support_size + 1; j <= space; ++j) {
      uint64_t r = 1 + rng.next_below(j);
      if (!codes.insert(r).second) codes.insert(j);
    }
    // Values are i.i.d., so assignment order is immaterial; ascending code
    // order keeps the draw deterministic.
    std::vector<std::pair<uint64_t, double>> terms;
    terms.reserve(codes.size());
    for (uint64_t code : codes) terms.push_back({code, rng.next_uniform(-amplitude, amplitude)});

    DensityState candidate{PauliExpansion(qubits, std::move(terms))};
    if (support_size == 0) return candidate; // maximally mixed, eigenvalues 1/d
    if (min_eigenvalue(candidate) >= -psd_tolerance) return candidate;
  }
}

double sparsity_norm(const DensityState& state, double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw input_error("sparsity_norm: q must be in [0, 1]");
  double sum = 0.0;
  for (const auto& [code, beta] : state.expansion().terms()) {
    (void)code;
    if (beta == 0.0) continue; // 0^0 counts as 0
    sum += q == 0.0 ? 1.0 : std::pow(std::abs(beta), q);
  }
  return sum;
}

void save_state(const DensityState& state, std::ostream& out) {
  out << "pauli-state v1 qubits=" << state.qubits() << "\n";
  for (const auto& [code, beta] : state.expansion().terms())
    out << PauliLabel(state.qubits(), code).str() << " " << format_coefficient(beta) << "\n";
}

void save_state(const DensityState& state, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot open '" + path + "' for writing");
  save_state(state, out);
  if (!out) throw input_error("write failed for '" + path + "'");
}

DensityState load_state(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) throw input_error(path + ":1: empty file");
  std::istringstream header(line);
  std::string magic, version, qubits_kv;
  header >> magic >> version >> qubits_kv;
  if (magic != "pauli-state" || version != "v1" || qubits_kv.rfind("qubits=", 0) != 0)
    throw input_error(path + ":1: expected header 'pauli-state v1 qubits=<b>'");
  uint32_t b = 0;
  try {
    std::size_t pos = 0;
    unsigned long parsed = std::stoul(qubits_kv.substr(7), &pos);
    if (pos != qubits_kv.size() - 7) throw std::invalid_argument("trailing characters");
    b = static_cast<uint32_t>(parsed);
  } catch (const std::exception&) {
    throw input_error(path + ":1: invalid qubit count '" + qubits_kv.substr(7) + "'");
  }
  if (b < 1 || b > kMaxQubits) throw input_error(path + ":1: qubit count out of range");

  std::vector<std::pair<uint64_t, double>> terms;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word, value_text, extra;
    if (!(ls >> word >> value_text) || (ls >> extra))
      throw input_error(path + ":" + std::to_string(lineno) + ": expected '<LABEL> <coefficient>'");
    PauliLabel label(1, 0);
    try {
      label = PauliLabel::parse(word);
    } catch (const input_error& e) {
      throw input_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (label.qubits() != b)
      throw input_error(path + ":" + std::to_string(lineno) + ": label length " +
                        std::to_string(label.qubits()) + " does not match qubits=" + std::to_string(b));
    if (label.is_identity())
      throw input_error(path + ":" + std::to_string(lineno) +
                        ": the identity label is implied and must not be listed");
    char* end = nullptr;
    double value = std::strtod(value_text.c_str(), &end);
    if (end == value_text.c_str() || *end != '\0' || !std::isfinite(value))
      throw input_error(path + ":" + std::to_string(lineno) + ": invalid coefficient '" + value_text + "'");
    if (value != 0.0) terms.push_back({label.code(), value});
  }
  try {
    return DensityState(PauliExpansion(b, std::move(terms)));
  } catch (const input_error& e) {
    throw input_error(path + ": " + e.what());
  }
}

DensityState load_state(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open '" + path + "'");
  return load_state(in, path);
}

} // namespace qst
