#include <doctest.h>

#include <cmath>

#include "sem/classify.hpp"
#include "sem/dynamics.hpp"
#include "sem/exact.hpp"
#include "support.hpp"

using namespace sem;

namespace {

const PairTypeMatrix kZero(2);

double u11_poisson_11(const EMLaw& l) { return (l(0, 0) + l(1, 1)) / (l(0, 0) + l(0, 1) + l(1, 0) + l(1, 1)); }

double u11_bernoulli_11(const EMLaw& l) {
  const double same = l(0, 0) + l(1, 1) - l(0, 0) * l(1, 1);
  const double mixed = l(0, 1) + l(1, 0) - l(0, 1) * l(1, 0);
  return same / (same + mixed);
}

}  // namespace

TEST_CASE("Poisson generator") {
  const auto pop = validate_population({1, 1}, {1, 1});
  const auto gen = generator_poisson(pop, EMLaw(Flavor::Poisson, RealMatrix{{4, 5}, {5, 6}}));
  CHECK(gen.size() == 7);
  CHECK(gen.at(kZero, PairTypeMatrix{{1, 0}, {0, 0}}) == doctest::Approx(2.0));
  CHECK(gen.at(kZero, PairTypeMatrix{{0, 0}, {0, 1}}) == doctest::Approx(3.0));
  CHECK(gen.at(kZero, kZero) == doctest::Approx(-10.0));
  CHECK(gen.at(kZero, PairTypeMatrix{{1, 0}, {0, 1}}) == 0.0);
  CHECK(gen.row_sum(gen.index_of(PairTypeMatrix{{1, 0}, {0, 1}})) == 0.0);
  CHECK(gen.at(PairTypeMatrix{{0, 1}, {1, 0}}, PairTypeMatrix{{0, 1}, {1, 0}}) == 0.0);
}

TEST_CASE("generator structure on random laws") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pop = testing::random_population(2 + trial % 2, 2 + trial % 3, rng);
    const auto gen = generator_poisson(pop, testing::random_law(Flavor::Poisson, pop.k(), rng));
    const auto& e = gen.entries();
    for (std::size_t s = 0; s < gen.size(); ++s) {
      CHECK(std::abs(gen.row_sum(s)) < 1e-12);
      const auto& from = gen.states()[s];
      if (from.is_table_of(pop)) CHECK(e.row_ptr[s] == e.row_ptr[s + 1]);
      for (std::size_t p = e.row_ptr[s]; p < e.row_ptr[s + 1]; ++p) {
        const auto& to = gen.states()[static_cast<std::size_t>(e.col[p])];
        if (to == from) continue;
        CHECK(e.val[p] > 0.0);
        CHECK(from.leq(to));
        CHECK(to.total() == from.total() + 1);
      }
    }
  }
}

TEST_CASE("Bernoulli kernel") {
  const auto pop = validate_population({1, 1}, {1, 1});
  const auto mass = kernel_bernoulli(pop, EMLaw(Flavor::Bernoulli, RealMatrix(2, 1.0)));
  CHECK(mass.at(kZero, PairTypeMatrix{{1, 0}, {0, 1}}) == doctest::Approx(0.5));
  CHECK(mass.at(kZero, PairTypeMatrix{{0, 1}, {1, 0}}) == doctest::Approx(0.5));
  CHECK(mass.at(kZero, kZero) == 0.0);

  const EMLaw law(Flavor::Bernoulli, RealMatrix{{0.3, 0.6}, {0.45, 0.8}});
  const auto ker = kernel_bernoulli(pop, law);
  CHECK(ker.at(kZero, PairTypeMatrix{{1, 0}, {0, 1}}) == doctest::Approx(0.5 * 0.3 * 0.8));
  CHECK(ker.at(kZero, PairTypeMatrix{{1, 0}, {0, 0}}) == doctest::Approx(0.5 * 0.3 * 0.2));
  CHECK(ker.at(kZero, kZero) == doctest::Approx(0.5 * 0.7 * 0.2 + 0.5 * 0.4 * 0.55));
  const auto full = PairTypeMatrix{{0, 1}, {1, 0}};
  CHECK(ker.at(full, full) == 1.0);
}

TEST_CASE("kernel rows are probability vectors") {
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pop = trial == 0 ? validate_population({2, 1}, {1, 2}) : testing::random_population(2 + trial % 2, 3, rng);
    const auto ker = kernel_bernoulli(pop, testing::random_law(Flavor::Bernoulli, pop.k(), rng));
    const auto& e = ker.entries();
    for (std::size_t s = 0; s < ker.size(); ++s) {
      CHECK(std::abs(ker.row_sum(s) - 1.0) < 1e-12);
      for (std::size_t p = e.row_ptr[s]; p < e.row_ptr[s + 1]; ++p) {
        CHECK(e.val[p] >= 0.0);
        CHECK(ker.states()[s].leq(ker.states()[static_cast<std::size_t>(e.col[p])]));
      }
    }
  }
}

TEST_CASE("transient distributions") {
  std::mt19937_64 rng(79);
  const auto pop = validate_population({2, 1}, {1, 2});
  for (Flavor f : {Flavor::Poisson, Flavor::Bernoulli}) {
    const auto law = testing::random_law(f, 2, rng);
    const auto start = transient_distribution(pop, law, 0.0);
    CHECK(start.probability_of(kZero) == 1.0);
    CHECK(start.total() == 1.0);
  }
  CHECK_THROWS_AS(transient_distribution(pop, testing::random_law(Flavor::Bernoulli, 2, rng), 1.5), Error);

  // Off fine balance: uniformization against a dense matrix exponential.
  for (int trial = 0; trial < 5; ++trial) {
    const auto law = testing::random_law(Flavor::Poisson, 2, rng);
    const auto gen = generator_poisson(pop, law);
    std::vector<std::vector<double>> dense(gen.size(), std::vector<double>(gen.size(), 0.0));
    for (std::size_t a = 0; a < gen.size(); ++a) {
      for (std::size_t b = 0; b < gen.size(); ++b) dense[a][b] = gen.at(a, b);
    }
    for (double t : {0.05, 0.7, 3.0}) {
      const auto want = testing::dense_transient(dense, gen.index_of(kZero), t);
      const auto got = transient_distribution(pop, law, t);
      for (std::size_t s = 0; s < gen.size(); ++s) CHECK(std::abs(got.probabilities[s] - want[s]) < 1e-10);
    }
  }
}

TEST_CASE("transient laws match the fine-balanced closed form") {
  std::mt19937_64 rng(83);
  for (Flavor f : {Flavor::Poisson, Flavor::Bernoulli}) {
    for (int trial = 0; trial < 4; ++trial) {
      const auto pop = testing::random_population(2 + trial % 2, 3, rng);
      const auto law = testing::random_fine_balanced_law(f, pop.k(), rng);
      for (double t : {1.0, 2.0, 5.0}) {
        CHECK(transient_distribution(pop, law, t).max_abs_difference(qt_distribution_finebalanced(pop, law, t)) < 1e-8);
      }
    }
  }
}

TEST_CASE("long-run Poisson mass sits on complete tables") {
  std::mt19937_64 rng(89);
  const auto pop = validate_population({2, 1}, {2, 1});
  const auto law = testing::random_law(Flavor::Poisson, 2, rng);
  const auto late = transient_distribution(pop, law, 50.0 / law.min_entry());
  double complete = 0.0;
  for (std::size_t s = 0; s < late.size(); ++s) {
    if (late.support[s].is_table_of(pop)) complete += late.probabilities[s];
  }
  CHECK(std::abs(complete - 1.0) < 1e-6);
}

TEST_CASE("terminal expectation recursions") {
  const auto pop = validate_population({1, 1}, {1, 1});
  const EMLaw simple(Flavor::Poisson, RealMatrix{{1, 1}, {1, 2}});
  CHECK(terminal_expectation_poisson(pop, simple)(0, 0) == doctest::Approx(0.6));

  std::mt19937_64 rng(97);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pl = testing::random_law(Flavor::Poisson, 2, rng);
    CHECK(terminal_expectation_poisson(pop, pl)(0, 0) == doctest::Approx(u11_poisson_11(pl)).epsilon(1e-13));
    const auto bl = testing::random_law(Flavor::Bernoulli, 2, rng);
    CHECK(terminal_expectation_bernoulli(pop, bl)(0, 0) == doctest::Approx(u11_bernoulli_11(bl)).epsilon(1e-13));
  }

  // Mixed pairs always mate, same-type ones with probability c.
  for (double c : {0.1, 0.5, 0.9}) {
    const auto law = em_law(PreferenceMatrix(RealMatrix{{c, 1}, {1, c}}), RateVector(Flavor::Poisson, {0, 0}, {1, 1}));
    CHECK(terminal_expectation_poisson(pop, law)(0, 0) == doctest::Approx(c / (1 + c)));
  }

  const auto bigger = validate_population({2, 2}, {3, 1});
  const auto hyper = terminal_distribution_definite(bigger).mean();
  const auto ones = terminal_expectation_bernoulli(bigger, EMLaw(Flavor::Bernoulli, RealMatrix(2, 1.0)));
  for (std::size_t c = 0; c < 4; ++c) CHECK(ones.data()[c] == doctest::Approx(hyper.data()[c]).epsilon(1e-12));
  CHECK(terminal_expectation(validate_population({0, 0}, {0, 0}), simple).data()[0] == 0.0);
}

TEST_CASE("fine balance gives panmixia for every population") {
  std::mt19937_64 rng(101);
  for (Flavor f : {Flavor::Poisson, Flavor::Bernoulli}) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto pop = testing::random_population(2 + trial % 2, 1 + trial % 5, rng);
      const auto u = terminal_expectation(pop, testing::random_fine_balanced_law(f, pop.k(), rng));
      for (std::size_t i = 0; i < pop.k(); ++i) {
        for (std::size_t j = 0; j < pop.k(); ++j) {
          CHECK(std::abs(u(i, j) - static_cast<double>(pop.x(i) * pop.y(j)) / pop.n()) < 1e-10);
        }
      }
    }
  }
}

TEST_CASE("mixed-only definite mating lowers same-type pairs") {
  std::mt19937_64 rng(103);
  for (Flavor f : {Flavor::Poisson, Flavor::Bernoulli}) {
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t k = 2 + trial % 2;
      const auto pop = testing::random_population(k, 2 + trial % 4, rng);
      RealMatrix p(k, 1.0);
      for (std::size_t i = 0; i < k; ++i) p(i, i) = testing::uniform(rng, 0.1, 0.95);
      std::vector<double> a(k), b(k);
      for (auto& v : a) v = testing::uniform(rng, 0.0, 0.9);
      for (auto& v : b) v = testing::uniform(rng, 0.1, 0.9);
      const auto u = terminal_expectation(pop, em_law(PreferenceMatrix(p), RateVector(f, a, b)));
      for (std::size_t i = 0; i < k; ++i) {
        const double bound = static_cast<double>(pop.x(i) * pop.y(i)) / pop.n();
        bool strict = false;
        for (std::size_t i2 = 0; i2 < k; ++i2) {
          strict = strict || (i2 != i && pop.x(i) * pop.x(i2) * pop.y(i) * pop.y(i2) != 0);
        }
        CHECK(u(i, i) <= bound + 1e-12);
        if (strict) CHECK(u(i, i) < bound - 1e-12);
      }
    }
  }
}

TEST_CASE("absorbing-chain terminal law") {
  const auto pop = validate_population({2, 1}, {1, 2});
  const auto constant = terminal_pmf_absorbing(pop, EMLaw(Flavor::Poisson, RealMatrix(2, 1.7)));
  CHECK(constant.max_abs_difference(terminal_distribution_definite(pop)) < 1e-10);

  std::mt19937_64 rng(107);
  const auto pop11 = validate_population({1, 1}, {1, 1});
  for (Flavor f : {Flavor::Poisson, Flavor::Bernoulli}) {
    const auto law = testing::random_law(f, 2, rng);
    CHECK(terminal_pmf_absorbing(pop11, law).probability_of(PairTypeMatrix{{1, 0}, {0, 1}}) ==
          doctest::Approx(terminal_expectation(pop11, law)(0, 0)).epsilon(1e-13));
    for (int trial = 0; trial < 10; ++trial) {
      const auto p = testing::random_population(2 + trial % 2, 1 + trial % 4, rng);
      const auto l = testing::random_law(f, p.k(), rng);
      const auto pmf = terminal_pmf_absorbing(p, l);
      CHECK(pmf.total() == doctest::Approx(1.0).epsilon(1e-12));
      const auto mean = pmf.mean();
      const auto u = terminal_expectation(p, l);
      for (std::size_t c = 0; c < u.data().size(); ++c) CHECK(std::abs(mean.data()[c] - u.data()[c]) < 1e-10);
    }
  }
}
