#include <doctest.h>

#include <cmath>
#include <limits>

#include "sem/classify.hpp"
#include "sem/dynamics.hpp"
#include "sem/exact.hpp"
#include "sem/verify.hpp"
#include "support.hpp"

using namespace sem;

namespace {

EmpiricalPmf counts_over(const std::vector<PairTypeMatrix>& tables, std::vector<std::uint64_t> counts) {
  EmpiricalPmf e;
  std::uint64_t runs = 0;
  for (auto c : counts) runs += c;
  e.pmf.support = tables;
  for (auto c : counts) e.pmf.probabilities.push_back(runs ? double(c) / double(runs) : 0.0);
  e.counts = std::move(counts);
  e.runs = runs;
  return e;
}

const std::vector<PairTypeMatrix> kTwoTables{{{0, 1}, {1, 0}}, {{1, 0}, {0, 1}}};

}  // namespace

TEST_CASE("chi-square comparison") {
  const PmfOverTables half{kTwoTables, {0.5, 0.5}};
  const auto exact = gof_compare(counts_over(kTwoTables, {50000, 50000}), half);
  CHECK(exact.statistic == 0.0);
  CHECK(exact.p_value == 1.0);
  CHECK(exact.degrees_of_freedom == 1);
  CHECK(exact.tv_distance == 0.0);

  const auto skewed = gof_compare(counts_over(kTwoTables, {40000, 60000}), half);
  CHECK(skewed.statistic == doctest::Approx(4000.0));
  CHECK(skewed.p_value < 1e-300);
  CHECK_FALSE(skewed.passes(1e-3));
  CHECK(skewed.tv_distance == doctest::Approx(0.1));

  CHECK_THROWS_AS(gof_compare(counts_over(kTwoTables, {0, 0}), half), Error);

  // Rare cells are pooled rather than dominating the statistic.
  const std::vector<PairTypeMatrix> three{{{0, 1}, {1, 0}}, {{1, 0}, {0, 1}}, {{2, 0}, {0, 0}}};
  const PmfOverTables skew{three, {0.49999, 0.49999, 0.00002}};
  const auto pooled = gof_compare(counts_over(three, {500, 500, 0}), skew);
  CHECK(pooled.cells.size() == 2);
  CHECK(pooled.degrees_of_freedom == 1);

  const PmfOverTables impossible{kTwoTables, {1.0, 0.0}};
  CHECK(std::isinf(gof_compare(counts_over(kTwoTables, {100, 1}), impossible).statistic));
}

TEST_CASE("chi-square tail") {
  CHECK(chi_square_tail(0.0, 3) == 1.0);
  CHECK(chi_square_tail(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(chi_square_tail(9.487729036781154, 4) == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("two-sample homogeneity") {
  const auto a = counts_over(kTwoTables, {5000, 5000});
  CHECK(gof_two_sample(a, a).statistic == 0.0);
  CHECK(gof_two_sample(a, counts_over(kTwoTables, {4000, 6000})).p_value < 1e-10);
}

TEST_CASE("permutation oracle") {
  const auto pop = validate_population({1, 1}, {1, 1});
  const auto roster = AnimalRoster::canonical(pop);
  const auto two = permutation_oracle_definite(pop, roster);
  CHECK(two.probability_of({{1, 0}, {0, 1}}) == 0.5);
  CHECK(two.probability_of({{0, 1}, {1, 0}}) == 0.5);

  const auto pop21 = validate_population({2, 1}, {2, 1});
  const auto three = permutation_oracle_definite(pop21, AnimalRoster::canonical(pop21));
  CHECK(three.probability_of({{2, 0}, {0, 1}}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(three.probability_of({{1, 1}, {1, 0}}) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  const auto big = validate_population({5, 4}, {4, 5});
  CHECK_THROWS_AS(permutation_oracle_definite(big, AnimalRoster::canonical(big)), Error);

  FiringSchedule late;
  late.female = {{5.0}, {6.0}};
  late.male = {{7.0}, {}};
  const auto at_t = permutation_oracle_definite(pop, roster, late, 1.0);
  REQUIRE(at_t.size() == 1);
  CHECK(at_t.support[0] == PairTypeMatrix(2));
  CHECK(at_t.probabilities[0] == 1.0);
}

TEST_CASE("oracle matches the hypergeometric law on every small population") {
  for (std::size_t k : {2u, 3u}) {
    for (std::int64_t n = 1; n <= 5; ++n) {
      std::mt19937_64 rng(100 * k + n);
      for (int rep = 0; rep < 3; ++rep) {
        const auto pop = testing::random_population(k, n, rng);
        const auto oracle = permutation_oracle_definite(pop, AnimalRoster::canonical(pop));
        CHECK(oracle.max_abs_difference(terminal_distribution_definite(pop)) < 1e-12);
      }
    }
  }
}

TEST_CASE("time-t oracle agrees with binomial thinning on average") {
  // Averaging the oracle over sampled schedules estimates the qt law.
  const auto pop = validate_population({2, 1}, {1, 2});
  const auto roster = AnimalRoster::canonical(pop);
  const RateVector rates(Flavor::Poisson, {0.4, 1.1}, {0.7, 0.2});
  const auto spec = FiringProcessSpec::poisson(rates);
  const double t = 0.8;
  const auto want = qt_distribution_definite(pop, FirstFiringCDF::from_rates(rates), t);
  std::vector<double> acc(want.size(), 0.0);
  const int reps = 20000;
  for (int r = 0; r < reps; ++r) {
    const auto s = sample_firing_schedule(spec, roster, t, derive_seed(31, r));
    const auto got = permutation_oracle_definite(pop, roster, s, t);
    for (std::size_t i = 0; i < want.size(); ++i) acc[i] += got.probability_of(want.support[i]);
  }
  for (std::size_t i = 0; i < want.size(); ++i) {
    const double p = want.probabilities[i];
    CHECK(std::abs(acc[i] / reps - p) < 4.0 * std::sqrt(p * (1 - p) / reps) + 1e-12);
  }
}

TEST_CASE("empirical pmf is reproducible across thread counts") {
  std::mt19937_64 rng(8);
  const auto pop = validate_population({2, 1}, {1, 2});
  const auto law = testing::random_law(Flavor::Bernoulli, 2, rng);
  const auto inputs = ModelInputs::from_law(pop, law);
  const auto one = empirical_terminal_pmf(inputs, 3000, 55, {Simulator::TwoStage, FiringOrder::FemalesFirst, 1});
  const auto many = empirical_terminal_pmf(inputs, 3000, 55, {Simulator::TwoStage, FiringOrder::FemalesFirst, 7});
  CHECK(one.counts == many.counts);
  CHECK(one.runs == 3000);

  const auto single = empirical_terminal_pmf(inputs, 1, 3);
  int ones = 0;
  for (double p : single.pmf.probabilities) ones += p == 1.0;
  CHECK(ones == 1);

  const auto exact = terminal_pmf_absorbing(pop, law);
  CHECK(gof_compare(one, exact).statistic == gof_compare(many, exact).statistic);
}

TEST_CASE("Monte Carlo expectations") {
  const auto q11 = [](const SimulationRecord& r) { return double(r.terminal_pattern(0, 0)); };

  std::mt19937_64 rng(21);
  const auto pop = validate_population({2, 2}, {3, 1});
  const auto fb = ModelInputs::from_law(pop, testing::random_fine_balanced_law(Flavor::Poisson, 2, rng));
  const auto est = mc_expectation(fb, q11, 100000, 4);
  CHECK(std::abs(est.mean - 1.5) < 3.0 * est.std_error);
  CHECK(est.std_error > 0.0);
  CHECK(est.runs == 100000);

  const auto finite = mc_expectation(fb, [](const SimulationRecord& r) { return std::isfinite(r.terminal_time) ? 1.0 : 0.0; },
                                     1000, 5);
  CHECK(finite.mean == 1.0);
  CHECK(finite.std_error == 0.0);

  const auto pop11 = validate_population({1, 1}, {1, 1});
  const PreferenceMatrix mixed(RealMatrix{{0.5, 1}, {1, 0.5}});
  const auto inputs = ModelInputs::from_rates(pop11, mixed, RateVector(Flavor::Poisson, {0, 0}, {1, 1}));
  const auto third = mc_expectation(inputs, q11, 100000, 6);
  CHECK(std::abs(third.mean - 1.0 / 3.0) < 3.0 * third.std_error);

  CHECK_THROWS_AS(mc_expectation(inputs, q11, 1, 6), Error);
}
