#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "sem/engine.hpp"
#include "sem/exact.hpp"
#include "sem/verify.hpp"
#include "support.hpp"

using namespace sem;

namespace {

const RateVector kUnitPoisson(Flavor::Poisson, {1.0, 1.0}, {1.0, 1.0});

double three_se(double p, double runs) { return 3.0 * std::sqrt(p * (1.0 - p) / runs); }

void check_record(const SimulationRecord& rec, const PopulationCounts& pop) {
  double last = 0.0;
  PairTypeMatrix prev(pop.k());
  for (const auto& j : rec.jumps) {
    CHECK(j.time > last);
    CHECK(prev.leq(j.q_after));
    CHECK(j.q_after.total() == prev.total() + static_cast<std::int64_t>(j.new_pairs.size()));
    last = j.time;
    prev = j.q_after;
  }
  CHECK(rec.terminal_pattern.is_table_of(pop));
  CHECK(rec.terminal_pairlist.size() == static_cast<std::size_t>(pop.n()));
  CHECK(rec.terminal_pairlist.admissible());
  CHECK(rec.terminal_time == last);
  CHECK(pattern_from_pairlist(rec.terminal_pairlist, AnimalRoster::canonical(pop)) == rec.terminal_pattern);
}

}  // namespace

TEST_CASE("sampled firing schedules") {
  const auto pop = validate_population({1, 1}, {1, 1});
  const auto roster = AnimalRoster::canonical(pop);
  const auto always = FiringProcessSpec::bernoulli(RateVector(Flavor::Bernoulli, {0.5, 0.5}, {1.0, 1.0}));
  const auto s = sample_firing_schedule(always, roster, 5.0, 9);
  for (const auto& m : s.male) CHECK(m == std::vector<double>{1, 2, 3, 4, 5});
  for (const auto& f : s.female) {
    for (double t : f) CHECK(t == std::floor(t));
  }

  const auto silent = FiringProcessSpec::poisson(RateVector(Flavor::Poisson, {0.0, 0.0}, {1.0, 2.0}));
  for (const auto& f : sample_firing_schedule(silent, roster, 10.0, 1).female) CHECK(f.empty());

  CHECK_THROWS_AS(sample_firing_schedule(always, roster, 2.5, 1), Error);
  CHECK_THROWS_AS(sample_firing_schedule(silent, roster, 0.0, 1), Error);
}

TEST_CASE("Poisson firing counts have the right mean") {
  const auto pop = validate_population({1, 0}, {1, 0});
  const auto roster = AnimalRoster::canonical(pop);
  const auto spec = FiringProcessSpec::poisson(RateVector(Flavor::Poisson, {1.0, 1.0}, {1.0, 1.0}));
  const int reps = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    const double c = static_cast<double>(sample_firing_schedule(spec, roster, 10.0, derive_seed(5, r)).female[0].size());
    sum += c;
    sum2 += c * c;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sum2 / reps - mean * mean) / reps);
  CHECK(std::abs(mean - 10.0) < 3.0 * se);
}

TEST_CASE("schedule text format") {
  std::istringstream in("# two couples\nF1 0.5 1.5\nM2 2\n\nF2 3 4 5\n");
  const auto s = parse_schedule(in, 2);
  CHECK(s.female[0] == std::vector<double>{0.5, 1.5});
  CHECK(s.female[1] == std::vector<double>{3, 4, 5});
  CHECK(s.male[0].empty());
  CHECK(s.male[1] == std::vector<double>{2});

  std::ostringstream out;
  write_schedule(out, s);
  std::istringstream again(out.str());
  const auto back = parse_schedule(again, 2);
  CHECK(back.female == s.female);
  CHECK(back.male == s.male);

  for (const char* bad : {"F1 2 1\n", "F3 1\n", "X1 1\n", "F1 -1\n", "F1 1\nF1 2\n", "M1 abc\n"}) {
    std::istringstream b(bad);
    CHECK_THROWS_AS(parse_schedule(b, 2), Error);
  }
  std::istringstream lines("F1 1\n\nM1 0\n");
  try {
    parse_schedule(lines, 2);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("single couple") {
  const auto pop = validate_population({0, 1}, {1, 0});
  const auto roster = AnimalRoster::canonical(pop);
  const PreferenceMatrix p(RealMatrix{{1, 1}, {0.3, 1}});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto rec = run_sem(pop, roster, p, FiringProcessSpec::poisson(kUnitPoisson), seed);
    REQUIRE(rec.terminal_pairlist.size() == 1);
    CHECK(rec.terminal_pairlist.pairs[0] == std::pair<std::size_t, std::size_t>{0, 0});
    REQUIRE(rec.jumps.size() == 1);
    CHECK(rec.terminal_time == rec.jumps[0].time);
    CHECK(rec.rounds_elapsed >= 1);
  }
}

TEST_CASE("explicit schedules drive the rounds") {
  const auto pop = validate_population({1, 0}, {1, 0});
  const auto roster = AnimalRoster::canonical(pop);
  FiringSchedule s;
  s.female = {{2.0, 7.0}};
  s.male = {{3.0}};
  const auto rec = run_sem(pop, roster, PreferenceMatrix::ones(2), FiringProcessSpec::explicit_schedule(s), 1);
  CHECK(rec.terminal_time == 2.0);
  CHECK(rec.rounds_elapsed == 1);

  // With a reluctant couple the listed times can run out.
  const PreferenceMatrix shy(RealMatrix{{1e-9, 1}, {1, 1}});
  CHECK_THROWS_AS(run_sem(pop, roster, shy, FiringProcessSpec::explicit_schedule(s), 1), Error);
  try {
    run_sem(pop, roster, shy, FiringProcessSpec::explicit_schedule(s), 1);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::HorizonExhausted);
  }
}

TEST_CASE("trajectories are consistent and reproducible") {
  std::mt19937_64 rng(113);
  for (int trial = 0; trial < 40; ++trial) {
    const Flavor f = trial % 2 ? Flavor::Poisson : Flavor::Bernoulli;
    const auto pop = testing::random_population(2 + trial % 2, 1 + trial % 6, rng);
    const auto inputs = ModelInputs::from_law(pop, testing::random_law(f, pop.k(), rng));
    const auto a = run_sem(inputs.pop, inputs.roster, inputs.p, inputs.spec, 1000 + trial);
    const auto b = run_sem(inputs.pop, inputs.roster, inputs.p, inputs.spec, 1000 + trial);
    check_record(a, pop);
    check_record(run_sem_alternative(inputs.pop, inputs.roster, inputs.p, inputs.spec, trial), pop);
    CHECK(a.terminal_pairlist.pairs == b.terminal_pairlist.pairs);
    CHECK(a.terminal_time == b.terminal_time);
    CHECK(a.rounds_elapsed == b.rounds_elapsed);
    REQUIRE(a.jumps.size() == b.jumps.size());
    for (std::size_t j = 0; j < a.jumps.size(); ++j) CHECK(a.jumps[j].new_pairs.pairs == b.jumps[j].new_pairs.pairs);
    if (f == Flavor::Poisson) CHECK(a.tie_anomalies == 0);

    const auto quick = run_sem(inputs.pop, inputs.roster, inputs.p, inputs.spec, 1000 + trial, {FiringOrder::FemalesFirst, false});
    CHECK(quick.jumps.empty());
    CHECK(quick.terminal_pattern == a.terminal_pattern);
  }
}

TEST_CASE("everyone firing with definite mating absorbs in one round") {
  const auto pop = validate_population({2, 2}, {1, 3});
  const auto roster = AnimalRoster::canonical(pop);
  const auto spec = FiringProcessSpec::bernoulli(RateVector(Flavor::Bernoulli, {1, 1}, {1, 1}));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (auto run : {run_sem, run_sem_alternative}) {
      const auto rec = run(pop, roster, PreferenceMatrix::ones(2), spec, seed, {});
      CHECK(rec.rounds_elapsed == 1);
      CHECK(rec.jumps.size() == 1);
      CHECK(rec.jumps[0].q_after.is_table_of(pop));
    }
  }
}

TEST_CASE("definite mating gives uniform pair lists") {
  const int runs = 100000;
  for (Simulator sim : {Simulator::TwoStage, Simulator::RandomMatching}) {
    const auto pop = validate_population({1, 1}, {1, 1});
    const auto inputs = ModelInputs::from_rates(pop, PreferenceMatrix::ones(2), kUnitPoisson);
    const auto emp = empirical_terminal_pmf(inputs, runs, 2024, {sim});
    CHECK(std::abs(emp.pmf.probability_of({{1, 0}, {0, 1}}) - 0.5) < three_se(0.5, runs));

    const auto pop21 = validate_population({2, 1}, {2, 1});
    const auto in21 = ModelInputs::from_rates(pop21, PreferenceMatrix::ones(2),
                                              RateVector(Flavor::Bernoulli, {0.3, 0.6}, {0.2, 0.9}));
    const auto emp21 = empirical_terminal_pmf(in21, runs, 77, {sim});
    PmfOverTables want{{PairTypeMatrix{{2, 0}, {0, 1}}, PairTypeMatrix{{1, 1}, {1, 0}}}, {1.0 / 3.0, 2.0 / 3.0}};
    CHECK(emp21.pmf.tv_distance(want) < 0.02);
  }
}

TEST_CASE("one firer picks uniformly") {
  for (std::size_t ns : {2u, 3u}) {
    std::map<std::size_t, int> seen;
    CounterRng rng(ns);
    const int reps = 100000;
    for (int r = 0; r < reps; ++r) {
      SinglesPool pool(ns);
      const auto pairs = encounter_round(pool, {{Sex::Female, 0}}, rng);
      REQUIRE(pairs.size() == 1);
      CHECK(pairs.pairs[0].first == 0);
      ++seen[pairs.pairs[0].second];
      CHECK(pool.size() == ns);
    }
    REQUIRE(seen.size() == ns);
    const double p = 1.0 / static_cast<double>(ns);
    for (const auto& [m, c] : seen) CHECK(std::abs(c / double(reps) - p) < three_se(p, reps));
  }
}

TEST_CASE("covering collections have the stated probability") {
  // Three singles per sex, firers F1 and M3: every admissible set of pairs
  // covering both firers, each pair containing one of them.
  const std::size_t ns = 3;
  const std::vector<AnimalRef> firers{{Sex::Female, 0}, {Sex::Male, 2}};
  std::map<std::set<std::pair<std::size_t, std::size_t>>, int> seen;
  CounterRng rng(99);
  const int reps = 200000;
  for (int r = 0; r < reps; ++r) {
    SinglesPool pool(ns);
    const auto pairs = encounter_round(pool, firers, rng);
    CHECK(pairs.admissible());
    ++seen[{pairs.pairs.begin(), pairs.pairs.end()}];
  }
  // Oracle: (ns - |C|)! / ns! for each covering collection.
  const double one_pair = 2.0 / 6.0;  // (3-1)!/3!
  const double two_pairs = 1.0 / 6.0;
  double total = 0.0;
  for (const auto& [c, count] : seen) {
    const double want = c.size() == 1 ? one_pair : two_pairs;
    total += want;
    CHECK(std::abs(count / double(reps) - want) < three_se(want, reps));
  }
  // {(F1,M3)} plus the four two-pair collections.
  CHECK(seen.size() == 5);
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("all singles firing gives a uniform perfect matching") {
  const std::size_t ns = 3;
  std::vector<AnimalRef> firers;
  for (std::size_t a = 0; a < ns; ++a) firers.push_back({Sex::Female, a});
  for (std::size_t b = 0; b < ns; ++b) firers.push_back({Sex::Male, b});
  std::map<std::vector<std::size_t>, int> seen;
  CounterRng rng(5);
  const int reps = 60000;
  for (int r = 0; r < reps; ++r) {
    SinglesPool pool(ns);
    const auto pairs = encounter_round(pool, firers, rng);
    REQUIRE(pairs.size() == ns);
    ++seen[pairs.as_permutation(ns)];
  }
  CHECK(seen.size() == 6);
  for (const auto& [perm, c] : seen) CHECK(std::abs(c / double(reps) - 1.0 / 6.0) < three_se(1.0 / 6.0, reps));
}

TEST_CASE("singles pool bookkeeping") {
  SinglesPool pool(3);
  pool.remove_pair(1, 2);
  CHECK(pool.size() == 2);
  CHECK_FALSE(pool.contains({Sex::Female, 1}));
  CHECK_FALSE(pool.contains({Sex::Male, 2}));
  CHECK(pool.contains({Sex::Male, 1}));
  CHECK_THROWS_AS(pool.remove_pair(1, 0), Error);
}
