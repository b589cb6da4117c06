#include <doctest.h>

#include <cmath>
#include <functional>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "qst/density.hpp"
#include "qst/errors.hpp"

using namespace qst;

namespace {

DensityState random_state(uint32_t b, uint64_t seed, uint64_t support, double amplitude = 0.2) {
  Rng rng(seed);
  return random_sparse_state(b, rng, support, amplitude);
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

} // namespace

TEST_SUITE("density") {

TEST_CASE("the empty expansion is the maximally mixed state") {
  DensityState state{PauliExpansion(2)};
  CHECK(state.coefficient(PauliLabel::parse("II")) == 1.0);
  CHECK(state.coefficient(PauliLabel::parse("XY")) == 0.0);
  DenseHermitian m = to_dense(state);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      CHECK(std::abs(m(r, c) - (r == c ? Complex(0.25) : Complex(0.0))) < 1e-15);
    }
  }
}

TEST_CASE("to_dense realizes I/d plus the weighted words") {
  Rng rng(7);
  for (int c = 0; c < 20; ++c) {
    uint32_t b = 1 + static_cast<uint32_t>(rng.next_below(4));
    uint64_t d = uint64_t{1} << b;
    DensityState state = random_state(b, 100 + c, std::min<uint64_t>(3, (1ull << (2 * b)) - 1));
    DenseHermitian expected =
        DenseHermitian::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (const auto& [code, beta] : state.expansion().terms())
      expected += beta * pauli_dense(PauliLabel(b, code));
    expected /= static_cast<double>(d);
    CHECK((to_dense(state) - expected).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("from_dense recovers every coefficient") {
  for (int c = 0; c < 25; ++c) {
    uint32_t b = 1 + static_cast<uint32_t>(c % 4);
    uint64_t space = (uint64_t{1} << (2 * b)) - 1;
    DensityState state = random_state(b, 500 + c, std::min<uint64_t>(space, 2 + c % 5));
    DensityState back = from_dense(to_dense(state));
    CHECK(back.qubits() == state.qubits());
    for (const auto& [code, beta] : state.expansion().terms()) {
      CHECK(back.expansion().coefficient(code) == doctest::Approx(beta).epsilon(1e-12));
    }
    CHECK(back.expansion().size() == state.expansion().size());
  }
}

TEST_CASE("from_dense validates shape, Hermiticity, and trace") {
  DenseHermitian rect = DenseHermitian::Zero(2, 3);
  CHECK_THROWS_AS(from_dense(rect), input_error);

  DenseHermitian odd = DenseHermitian::Identity(3, 3) / 3.0;
  CHECK_THROWS_AS(from_dense(odd), input_error);

  DenseHermitian skew = DenseHermitian::Identity(4, 4) / 4.0;
  skew(0, 1) = Complex(0.1, 0.0); // (1,0) left at 0: not Hermitian
  CHECK_THROWS_AS(from_dense(skew), input_error);

  DenseHermitian traceless = DenseHermitian::Identity(4, 4);
  CHECK_THROWS_AS(from_dense(traceless), input_error); // trace 4, not 1
}

TEST_CASE("min_eigenvalue dense and iterative paths agree") {
  for (int c = 0; c < 18; ++c) {
    uint32_t b = 1 + static_cast<uint32_t>(c % 6);
    uint64_t space = (uint64_t{1} << (2 * b)) - 1;
    DensityState state = random_state(b, 900 + c, std::min<uint64_t>(space, 4));
    double dense = min_eigenvalue(state, EigMethod::dense);
    double iterative = min_eigenvalue(state, EigMethod::iterative);
    CHECK(iterative == doctest::Approx(dense).epsilon(1e-8));
  }
}

TEST_CASE("generated states obey support, amplitude, and positivity") {
  GenerationStats stats;
  Rng rng(4242);
  DensityState state = random_sparse_state(5, rng, 20, 0.2, kPsdTolerance,
                                           kGenerationRetryLimit, &stats);
  CHECK(state.expansion().size() == 20);
  CHECK(stats.attempts >= 1);
  for (const auto& [code, beta] : state.expansion().terms()) {
    CHECK(code >= 1);
    CHECK(std::abs(beta) <= 0.2);
    CHECK(beta != 0.0);
  }
  CHECK(min_eigenvalue(state) >= -kPsdTolerance);
}

TEST_CASE("generation is deterministic in the seed") {
  Rng a(77), b2(77), c(78);
  DensityState s1 = random_sparse_state(4, a, 10, 0.2);
  DensityState s2 = random_sparse_state(4, b2, 10, 0.2);
  DensityState s3 = random_sparse_state(4, c, 10, 0.2);
  REQUIRE(s1.expansion().terms().size() == s2.expansion().terms().size());
  for (std::size_t i = 0; i < s1.expansion().terms().size(); ++i) {
    CHECK(s1.expansion().terms()[i].first == s2.expansion().terms()[i].first);
    CHECK(s1.expansion().terms()[i].second == s2.expansion().terms()[i].second);
  }
  bool same = s1.expansion().terms() == s3.expansion().terms();
  CHECK_FALSE(same);
}

TEST_CASE("support zero is accepted and support beyond the basis is not") {
  Rng rng(5);
  DensityState mixed = random_sparse_state(3, rng, 0, 0.2);
  CHECK(mixed.expansion().size() == 0);
  CHECK_THROWS_AS(random_sparse_state(2, rng, 16, 0.2), input_error);
}

TEST_CASE("generation reports exhausted retries") {
  // Full support at amplitude 1 is essentially never positive semidefinite.
  Rng rng(9);
  GenerationStats stats;
  CHECK_THROWS_AS(random_sparse_state(3, rng, 63, 1.0, kPsdTolerance, 50, &stats),
                  generation_error);
  CHECK(stats.attempts == 50);
}

TEST_CASE("state files round-trip bit for bit") {
  DensityState state = random_state(4, 1234, 12);
  std::ostringstream out;
  save_state(state, out);
  std::istringstream in(out.str());
  DensityState back = load_state(in, "<memory>");
  REQUIRE(back.expansion().terms().size() == state.expansion().terms().size());
  for (std::size_t i = 0; i < state.expansion().terms().size(); ++i) {
    CHECK(back.expansion().terms()[i].first == state.expansion().terms()[i].first);
    CHECK(back.expansion().terms()[i].second == state.expansion().terms()[i].second);
  }
}

TEST_CASE("loader diagnostics carry the source name and line number") {
  auto load_text = [](const std::string& text) {
    return [text] {
      std::istringstream in(text);
      load_state(in, "f");
    };
  };
  CHECK(message_of(load_text("")).find("f:1") != std::string::npos);
  CHECK(message_of(load_text("bogus header\n")).find("f:1") != std::string::npos);
  CHECK(message_of(load_text("pauli-state v1 qubits=2x\n")).find("f:1") != std::string::npos);
  CHECK(message_of(load_text("pauli-state v1 qubits=2\nXQ 0.5\n")).find("f:2") != std::string::npos);
  CHECK(message_of(load_text("pauli-state v1 qubits=2\nXY zero\n")).find("f:2") != std::string::npos);
  CHECK(message_of(load_text("pauli-state v1 qubits=2\nXY 0.5\nXYZ 0.5\n")).find("f:3") !=
        std::string::npos);
  CHECK(message_of(load_text("pauli-state v1 qubits=2\nII 0.5\n")).find("f:2") != std::string::npos);
  CHECK(message_of(load_text("pauli-state v1 qubits=2\nXY 0.5 junk\n")).find("f:2") !=
        std::string::npos);
  // Duplicate labels surface through the expansion validation.
  CHECK(message_of(load_text("pauli-state v1 qubits=2\nXY 0.5\nXY 0.25\n")).find("duplicate") !=
        std::string::npos);
}

TEST_CASE("sparsity_norm interpolates between support count and l1") {
  DensityState state{PauliExpansion(2, {{1, 0.2}, {5, -0.1}})};
  CHECK(sparsity_norm(state, 0.0) == 2.0);
  CHECK(sparsity_norm(state, 1.0) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(sparsity_norm(state, 0.5) ==
        doctest::Approx(std::sqrt(0.2) + std::sqrt(0.1)).epsilon(1e-15));
  CHECK_THROWS_AS(sparsity_norm(state, 1.5), input_error);
}

} // TEST_SUITE
