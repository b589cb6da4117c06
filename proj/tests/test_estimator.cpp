#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qst/density.hpp"
#include "qst/errors.hpp"
#include "qst/estimator.hpp"
#include "qst/measurement.hpp"
#include "qst/norms.hpp"
#include "qst/rng.hpp"

using namespace qst;

namespace {

// Record whose averages are exactly the requested values; each |N| must be
// representable as 2k/shots - 1 for an integer k.
MeasurementRecord record_with_averages(uint32_t qubits, uint64_t shots,
                                       const std::vector<std::pair<uint64_t, double>>& values) {
  std::vector<std::pair<uint64_t, uint64_t>> counts;
  counts.reserve(values.size());
  for (const auto& [code, N] : values) {
    double k = (N + 1.0) * static_cast<double>(shots) / 2.0;
    uint64_t count = static_cast<uint64_t>(std::llround(k));
    REQUIRE(std::abs(k - static_cast<double>(count)) < 1e-9);
    counts.push_back({code, count});
  }
  return MeasurementRecord(qubits, shots, std::move(counts));
}

// Exhaustive active-set projection onto the probability simplex: every
// subset of coordinates is tried as the zero set, the feasible candidate
// with the smallest distance wins. Exponential, oracle use only.
std::vector<double> simplex_oracle(const std::vector<double>& v) {
  std::size_t dim = v.size();
  std::vector<double> best;
  double best_dist = 0.0;
  bool found = false;
  for (uint32_t mask = 0; mask < (1u << dim); ++mask) {
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < dim; ++i)
      if (!(mask & (1u << i))) active.push_back(i);
    if (active.empty()) continue;
    double sum = 0.0;
    for (std::size_t i : active) sum += v[i];
    double shift = (1.0 - sum) / static_cast<double>(active.size());
    std::vector<double> cand(dim, 0.0);
    bool feasible = true;
    for (std::size_t i : active) {
      cand[i] = v[i] + shift;
      if (cand[i] < -1e-12) feasible = false;
    }
    if (!feasible) continue;
    double dist = 0.0;
    for (std::size_t i = 0; i < dim; ++i) dist += (cand[i] - v[i]) * (cand[i] - v[i]);
    if (!found || dist < best_dist - 1e-15) {
      best = cand;
      best_dist = dist;
      found = true;
    }
  }
  REQUIRE(found);
  return best;
}

std::string message_of(const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

} // namespace

TEST_SUITE("estimator") {

TEST_CASE("universal threshold matches the closed form in both log bases") {
  // hbar * sqrt(4 * log10(32) / 100)
  CHECK(universal_threshold(100, 32, 1.01, LogBase::ten) ==
        doctest::Approx(1.01 * std::sqrt(4.0 * std::log10(32.0) / 100.0)).epsilon(1e-15));
  CHECK(universal_threshold(100, 32, 1.01, LogBase::ten) == doctest::Approx(0.24782).epsilon(1e-4));
  CHECK(universal_threshold(100, 32, 1.01, LogBase::natural) ==
        doctest::Approx(0.37605).epsilon(1e-4));
  CHECK(universal_threshold(2000, 128, 1.01, LogBase::ten) ==
        doctest::Approx(0.065573).epsilon(1e-4));
  // Quadrupling n halves the threshold.
  CHECK(universal_threshold(400, 32, 1.01, LogBase::ten) ==
        doctest::Approx(0.5 * universal_threshold(100, 32, 1.01, LogBase::ten)).epsilon(1e-15));
}

TEST_CASE("universal threshold validates its arguments") {
  CHECK_THROWS_AS(universal_threshold(0, 32, 1.01, LogBase::ten), input_error);
  CHECK_THROWS_AS(universal_threshold(100, 1, 1.01, LogBase::ten), input_error);
  CHECK_THROWS_AS(universal_threshold(100, 32, 1.0, LogBase::ten), input_error);
  CHECK_THROWS_AS(universal_threshold(100, 32, 0.99, LogBase::ten), input_error);
}

TEST_CASE("individual threshold shrinks with |N| and vanishes at 1") {
  const uint64_t n = 500;
  const uint64_t d = 64;
  double at0 = individual_threshold(0.0, n, d, 1.01, LogBase::ten);
  CHECK(at0 == doctest::Approx(universal_threshold(n, d, 1.01, LogBase::ten)).epsilon(1e-15));
  CHECK(individual_threshold(1.0, n, d, 1.01, LogBase::ten) == 0.0);
  CHECK(individual_threshold(-1.0, n, d, 1.01, LogBase::ten) == 0.0);
  // Closed form at N = 0.6: factor sqrt(1 - 0.36).
  CHECK(individual_threshold(0.6, n, d, 1.01, LogBase::ten) ==
        doctest::Approx(at0 * std::sqrt(0.64)).epsilon(1e-15));
  double prev = at0;
  for (double N : {0.1, 0.3, 0.5, 0.7, 0.9, 0.99}) {
    double w = individual_threshold(N, n, d, 1.01, LogBase::ten);
    CHECK(w < prev);
    CHECK(w == individual_threshold(-N, n, d, 1.01, LogBase::ten));
    prev = w;
  }
  CHECK_THROWS_AS(individual_threshold(1.0001, n, d, 1.01, LogBase::ten), input_error);
  CHECK_THROWS_AS(individual_threshold(0.5, n, d, 1.0, LogBase::ten), input_error);
}

TEST_CASE("hard thresholding keeps ties and never shrinks survivors") {
  CHECK(apply_threshold(0.3, 0.3, ThresholdRule::hard) == 0.3);
  CHECK(apply_threshold(-0.3, 0.3, ThresholdRule::hard) == -0.3);
  CHECK(apply_threshold(0.29, 0.3, ThresholdRule::hard) == 0.0);
  CHECK(apply_threshold(-0.29, 0.3, ThresholdRule::hard) == 0.0);
  CHECK(apply_threshold(0.31, 0.3, ThresholdRule::hard) == 0.31);
  CHECK(apply_threshold(0.7, 0.0, ThresholdRule::hard) == 0.7);
  CHECK(apply_threshold(0.0, 0.0, ThresholdRule::hard) == 0.0);
}

TEST_CASE("soft thresholding shrinks toward zero by varpi") {
  CHECK(apply_threshold(0.5, 0.2, ThresholdRule::soft) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(apply_threshold(-0.5, 0.2, ThresholdRule::soft) == doctest::Approx(-0.3).epsilon(1e-15));
  CHECK(apply_threshold(0.2, 0.2, ThresholdRule::soft) == 0.0);
  CHECK(apply_threshold(-0.2, 0.2, ThresholdRule::soft) == 0.0);
  CHECK(apply_threshold(0.1, 0.2, ThresholdRule::soft) == 0.0);
  CHECK(apply_threshold(0.9, 0.0, ThresholdRule::soft) == 0.9);
  CHECK_THROWS_AS(apply_threshold(0.5, -0.1, ThresholdRule::hard), input_error);
}

TEST_CASE("policy constructors validate their parameters") {
  CHECK_THROWS_AS(ThresholdPolicy::universal(1.0), input_error);
  CHECK_THROWS_AS(ThresholdPolicy::individual(0.5), input_error);
  CHECK_THROWS_AS(ThresholdPolicy::fixed(-0.1), input_error);
  CHECK_NOTHROW(ThresholdPolicy::fixed(0.0));
  CHECK_THROWS_AS(ThresholdPolicy::optimal_grid({}), input_error);
  CHECK_THROWS_AS(ThresholdPolicy::optimal_grid({0.2, 0.1}), input_error);
  CHECK_THROWS_AS(ThresholdPolicy::optimal_grid({0.1, 0.1}), input_error);
  CHECK_THROWS_AS(ThresholdPolicy::optimal_grid({-0.1, 0.2}), input_error);
  CHECK_NOTHROW(ThresholdPolicy::optimal_grid({0.0, 0.1, 0.2}));
}

TEST_CASE("estimate of a balanced record is maximally mixed") {
  // Every count at shots/2 gives N = 0 everywhere, so nothing survives.
  std::vector<std::pair<uint64_t, uint64_t>> counts;
  for (uint64_t code = 1; code < 16; ++code) counts.push_back({code, 100});
  MeasurementRecord rec(2, 200, std::move(counts));
  for (ThresholdRule rule : {ThresholdRule::hard, ThresholdRule::soft}) {
    EstimateReport rep = estimate(rec, ThresholdPolicy::universal(), rule);
    CHECK(rep.survivors == 0);
    CHECK(rep.estimate.expansion().size() == 0);
    CHECK(rep.thresholds_used.size() == 15);
  }
  // Hard rule with varpi = 0 keeps ties at zero magnitude, but a zero
  // coefficient is never stored, so the estimate is still maximally mixed.
  EstimateReport rep = estimate(rec, ThresholdPolicy::fixed(0.0), ThresholdRule::hard);
  CHECK(rep.survivors == 0);
}

TEST_CASE("fixed zero threshold reproduces the raw averages") {
  MeasurementRecord rec = record_with_averages(
      3, 200, {{1, 0.37}, {5, -0.52}, {17, 0.08}, {63, -0.99}});
  EstimateReport rep = estimate(rec, ThresholdPolicy::fixed(0.0), ThresholdRule::hard);
  CHECK(rep.survivors == 4);
  AverageOutcomes avg = averages(rec);
  for (const auto& [code, N] : avg.values)
    CHECK(rep.estimate.expansion().coefficient(code) == doctest::Approx(N).epsilon(1e-15));
}

TEST_CASE("estimate applies the rule to every measured average") {
  // 256 shots make every average an exact dyadic rational, so the tie at the
  // threshold 0.25 is exact and the shrunken values are exact too.
  MeasurementRecord rec = record_with_averages(
      3, 256, {{2, 0.5}, {7, -0.375}, {11, 0.25}, {19, 0.2421875}, {40, -0.09375}});
  EstimateReport hard = estimate(rec, ThresholdPolicy::fixed(0.25), ThresholdRule::hard);
  CHECK(hard.survivors == 3);
  CHECK(hard.estimate.expansion().coefficient(2) == 0.5);
  CHECK(hard.estimate.expansion().coefficient(7) == -0.375);
  CHECK(hard.estimate.expansion().coefficient(11) == 0.25); // tie survives unshrunk
  CHECK(hard.estimate.expansion().coefficient(19) == 0.0);
  CHECK(hard.estimate.expansion().coefficient(40) == 0.0);

  EstimateReport soft = estimate(rec, ThresholdPolicy::fixed(0.25), ThresholdRule::soft);
  CHECK(soft.survivors == 2);
  CHECK(soft.estimate.expansion().coefficient(2) == 0.25);
  CHECK(soft.estimate.expansion().coefficient(7) == -0.125);
  CHECK(soft.estimate.expansion().coefficient(11) == 0.0); // tie shrinks to nothing

  // Reported thresholds cover exactly the measured codes, in order.
  REQUIRE(hard.thresholds_used.size() == 5);
  std::vector<uint64_t> codes;
  for (const auto& [code, w] : hard.thresholds_used) {
    codes.push_back(code);
    CHECK(w == 0.25);
  }
  CHECK(codes == std::vector<uint64_t>{2, 7, 11, 19, 40});
}

TEST_CASE("individual policy spares strong signals that universal would keep shrunken") {
  // n = 100, d = 8, natural log: universal varpi = 1.01 * sqrt(4 ln 8 / 100) = 0.2945.
  // An average of 0.98 has individual varpi = universal * sqrt(1 - 0.9604) = 0.0586.
  const uint64_t n = 100;
  MeasurementRecord rec = record_with_averages(3, n, {{3, 0.98}, {12, 0.20}});
  EstimateReport uni =
      estimate(rec, ThresholdPolicy::universal(1.01, LogBase::natural), ThresholdRule::soft);
  EstimateReport ind =
      estimate(rec, ThresholdPolicy::individual(1.01, LogBase::natural), ThresholdRule::soft);
  double w_uni = universal_threshold(n, 8, 1.01, LogBase::natural);
  CHECK(uni.estimate.expansion().coefficient(3) == doctest::Approx(0.98 - w_uni).epsilon(1e-12));
  double w_ind = individual_threshold(0.98, n, 8, 1.01, LogBase::natural);
  CHECK(ind.estimate.expansion().coefficient(3) == doctest::Approx(0.98 - w_ind).epsilon(1e-12));
  CHECK(ind.estimate.expansion().coefficient(3) > uni.estimate.expansion().coefficient(3));
  // The weak signal dies under both policies: its individual varpi is near universal.
  CHECK(uni.estimate.expansion().coefficient(12) == 0.0);
  CHECK(ind.estimate.expansion().coefficient(12) == 0.0);
  // Reported per-label thresholds match the closed forms.
  REQUIRE(ind.thresholds_used.size() == 2);
  CHECK(ind.thresholds_used[0].second == doctest::Approx(w_ind).epsilon(1e-15));
  CHECK(ind.thresholds_used[1].second ==
        doctest::Approx(individual_threshold(0.20, n, 8, 1.01, LogBase::natural)).epsilon(1e-15));
}

TEST_CASE("estimate keeps unit trace and ignores unmeasured labels") {
  MeasurementRecord rec = record_with_averages(2, 100, {{4, 0.88}, {9, -0.66}});
  EstimateReport rep = estimate(rec, ThresholdPolicy::fixed(0.1), ThresholdRule::hard);
  CHECK(rep.survivors == 2);
  DenseHermitian m = to_dense(rep.estimate);
  CHECK(std::abs(m.trace().real() - 1.0) < 1e-14);
  CHECK(std::abs(m.trace().imag()) < 1e-14);
  // Labels absent from the record stay at zero.
  CHECK(rep.estimate.expansion().coefficient(1) == 0.0);
  CHECK(rep.estimate.expansion().coefficient(15) == 0.0);
}

TEST_CASE("estimate rejects the optimal-grid policy") {
  MeasurementRecord rec = record_with_averages(2, 100, {{4, 0.5}});
  std::string msg = message_of([&] {
    estimate(rec, ThresholdPolicy::optimal_grid({0.0, 0.1}), ThresholdRule::hard);
  });
  CHECK(msg.find("optimal") != std::string::npos);
}

TEST_CASE("parsers for rule and log base round-trip and reject junk") {
  CHECK(parse_rule("hard") == ThresholdRule::hard);
  CHECK(parse_rule("soft") == ThresholdRule::soft);
  CHECK(rule_name(ThresholdRule::hard) == "hard");
  CHECK(rule_name(ThresholdRule::soft) == "soft");
  CHECK_THROWS_AS(parse_rule("HARD"), input_error);
  CHECK_THROWS_AS(parse_rule(""), input_error);
  CHECK(parse_log_base("natural") == LogBase::natural);
  CHECK(parse_log_base("ten") == LogBase::ten);
  CHECK(log_base_name(LogBase::natural) == "natural");
  CHECK(log_base_name(LogBase::ten) == "ten");
  CHECK_THROWS_AS(parse_log_base("2"), input_error);
}

TEST_CASE("default optimal grid spans zero to twice the universal threshold") {
  std::vector<double> grid = default_optimal_grid(100, 32, 1.01, LogBase::natural);
  REQUIRE(grid.size() == 200);
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() ==
        doctest::Approx(2.0 * universal_threshold(100, 32, 1.01, LogBase::natural)).epsilon(1e-15));
  CHECK(std::is_sorted(grid.begin(), grid.end()));
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);
  std::vector<double> small = default_optimal_grid(100, 32, 1.01, LogBase::natural, 5);
  CHECK(small.size() == 5);
  CHECK(small[2] == doctest::Approx(0.5 * small.back()).epsilon(1e-15));
  CHECK_THROWS_AS(default_optimal_grid(100, 32, 1.01, LogBase::natural, 1), input_error);
}

TEST_CASE("optimal search breaks ties toward the smaller threshold") {
  // Both grid values exceed every |N|, so both estimates are maximally mixed
  // and the errors agree exactly; the smaller varpi must win.
  DensityState truth(PauliExpansion(2, {{1, 0.15}, {6, -0.10}}));
  std::vector<MeasurementRecord> recs = {record_with_averages(2, 100, {{1, 0.20}, {6, -0.14}})};
  OptimalSearchResult r =
      optimal_threshold_search(truth, recs, ThresholdRule::hard, {0.5, 0.9, 1.3}, ErrorNorm::frobenius);
  CHECK(r.varpi_star == 0.5);
  OptimalSearchResult rs =
      optimal_threshold_search(truth, recs, ThresholdRule::soft, {0.5, 0.9, 1.3}, ErrorNorm::spectral);
  CHECK(rs.varpi_star == 0.5);
}

TEST_CASE("optimal search returns the grid minimizer of the replicate-averaged error") {
  // One strong true signal plus one pure-noise average: thresholds between
  // 0.14 and 0.60 kill the noise while keeping the signal, so any grid value
  // in that window beats both extremes.
  DensityState truth(PauliExpansion(3, {{5, 0.60}}));
  std::vector<MeasurementRecord> recs = {
      record_with_averages(3, 200, {{5, 0.60}, {22, 0.13}}),
      record_with_averages(3, 200, {{5, 0.58}, {22, -0.12}}),
  };
  std::vector<double> grid = {0.0, 0.3, 2.0};
  for (ErrorNorm norm : {ErrorNorm::frobenius, ErrorNorm::spectral}) {
    OptimalSearchResult r = optimal_threshold_search(truth, recs, ThresholdRule::hard, grid, norm);
    CHECK(r.varpi_star == 0.3);
    // The reported minimum matches a direct recomputation at the winner.
    double total = 0.0;
    for (const auto& rec : recs) {
      EstimateReport rep = estimate(rec, ThresholdPolicy::fixed(r.varpi_star), ThresholdRule::hard);
      if (norm == ErrorNorm::frobenius) {
        total += frobenius_error_sq(rep.estimate, truth);
      } else {
        double s = spectral_error(rep.estimate, truth);
        total += s * s;
      }
    }
    CHECK(r.mse_star == doctest::Approx(total / 2.0).epsilon(1e-12));
  }
}

TEST_CASE("optimal search validates its inputs") {
  DensityState truth(PauliExpansion(2, {{1, 0.1}}));
  std::vector<MeasurementRecord> recs = {record_with_averages(2, 100, {{1, 0.1}})};
  CHECK_THROWS_AS(
      optimal_threshold_search(truth, {}, ThresholdRule::hard, {0.0, 0.1}, ErrorNorm::frobenius),
      input_error);
  CHECK_THROWS_AS(
      optimal_threshold_search(truth, recs, ThresholdRule::hard, {0.1, 0.1}, ErrorNorm::frobenius),
      input_error);
  DensityState truth3(PauliExpansion(3, {{1, 0.1}}));
  CHECK_THROWS_AS(
      optimal_threshold_search(truth3, recs, ThresholdRule::hard, {0.0, 0.1}, ErrorNorm::frobenius),
      input_error);
}

TEST_CASE("simplex projection matches hand-checked cases") {
  std::vector<double> p = project_to_simplex({1.2, -0.2});
  REQUIRE(p.size() == 2);
  CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(p[1] == 0.0);
  // Interior case keeps the ordering and just recenters.
  std::vector<double> q = project_to_simplex({0.5, 0.3, 0.1});
  CHECK(q[0] == doctest::Approx(0.5 + 0.1 / 3.0).epsilon(1e-14));
  CHECK(q[1] == doctest::Approx(0.3 + 0.1 / 3.0).epsilon(1e-14));
  CHECK(q[2] == doctest::Approx(0.1 + 0.1 / 3.0).epsilon(1e-14));
  // A point already on the simplex is a fixed point.
  std::vector<double> fixed = {0.25, 0.5, 0.25};
  std::vector<double> f = project_to_simplex(fixed);
  for (std::size_t i = 0; i < fixed.size(); ++i)
    CHECK(f[i] == doctest::Approx(fixed[i]).epsilon(1e-14));
  CHECK_THROWS_AS(project_to_simplex({}), input_error);
}

TEST_CASE("simplex projection agrees with the exhaustive active-set oracle") {
  Rng rng(414243);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t dim = 1 + static_cast<std::size_t>(rng.next_below(6));
    std::vector<double> v(dim);
    for (double& x : v) x = rng.next_uniform(-2.0, 2.0);
    std::vector<double> fast = project_to_simplex(v);
    std::vector<double> slow = simplex_oracle(v);
    double sum = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      CHECK(fast[i] >= 0.0);
      CHECK(std::abs(fast[i] - slow[i]) < 1e-10);
      sum += fast[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("psd projection fixes an indefinite single-qubit state to the nearest pure state") {
  // Bloch vector (0.9, 0.9, 0.9) has length 1.5588 > 1, eigenvalues
  // (1 +- 1.5588)/2; projection lands on the unit Bloch sphere along the
  // same direction, i.e. all coefficients 1/sqrt(3).
  DensityState bad(PauliExpansion(1, {{1, 0.9}, {2, 0.9}, {3, 0.9}}));
  CHECK(min_eigenvalue(bad) < -0.2);
  DensityState fixed = psd_project(bad);
  double c = 1.0 / std::sqrt(3.0);
  CHECK(fixed.expansion().coefficient(1) == doctest::Approx(c).epsilon(1e-12));
  CHECK(fixed.expansion().coefficient(2) == doctest::Approx(c).epsilon(1e-12));
  CHECK(fixed.expansion().coefficient(3) == doctest::Approx(c).epsilon(1e-12));
  CHECK(min_eigenvalue(fixed) >= -1e-12);
}

TEST_CASE("psd projection is idempotent and leaves valid states alone") {
  Rng rng(99173);
  for (int trial = 0; trial < 10; ++trial) {
    uint32_t b = 2 + static_cast<uint32_t>(trial % 3);
    // Overdrawn random coefficients to force indefiniteness most of the time.
    std::vector<std::pair<uint64_t, double>> terms;
    uint64_t span = (1ull << (2 * b)) - 1;
    for (uint64_t code = 1; code <= span; code += 1 + rng.next_below(3))
      terms.push_back({code, rng.next_uniform(-0.8, 0.8)});
    DensityState raw(PauliExpansion(b, std::move(terms)));
    DensityState once = psd_project(raw);
    CHECK(min_eigenvalue(once) >= -1e-10);
    CHECK(std::abs(to_dense(once).trace().real() - 1.0) < 1e-12);
    DensityState twice = psd_project(once);
    // Idempotence, coefficient by coefficient.
    uint64_t codes = (1ull << (2 * b)) - 1;
    for (uint64_t code = 1; code <= codes; ++code)
      CHECK(std::abs(once.expansion().coefficient(code) -
                     twice.expansion().coefficient(code)) < 1e-10);
  }
  // A state that is already PSD projects to itself.
  Rng gen(31);
  DensityState valid = random_sparse_state(4, gen, 6, 0.2);
  DensityState same = psd_project(valid);
  for (const auto& [code, coeff] : valid.expansion().terms())
    CHECK(same.expansion().coefficient(code) == doctest::Approx(coeff).epsilon(1e-10));
}

TEST_CASE("psd projection never increases the frobenius distance to a valid state") {
  // Projection onto a convex set containing the truth is a contraction.
  Rng gen(77);
  DensityState truth = random_sparse_state(3, gen, 5, 0.2);
  std::vector<PauliLabel> labels = all_nonidentity_labels(3);
  for (uint64_t seed : {11ull, 12ull, 13ull}) {
    MeasurementRecord rec = sample_measurements(truth, 60, labels, seed);
    EstimateReport rep = estimate(rec, ThresholdPolicy::fixed(0.0), ThresholdRule::hard);
    if (min_eigenvalue(rep.estimate) >= 0.0) continue;
    DensityState projected = psd_project(rep.estimate);
    CHECK(frobenius_error_sq(projected, truth) <= frobenius_error_sq(rep.estimate, truth) + 1e-12);
  }
}

} // TEST_SUITE
