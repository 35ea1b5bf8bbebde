#include "sem/verify.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <thread>
#include <unordered_map>

namespace sem {

ModelInputs ModelInputs::from_law(const PopulationCounts& pop, const EMLaw& law) {
  auto [p, rates] = canonical_parameters(law);
  return from_rates(pop, p, rates);
}

ModelInputs ModelInputs::from_rates(const PopulationCounts& pop, const PreferenceMatrix& p, const RateVector& rates) {
  return {pop, AnimalRoster::canonical(pop), p,
          rates.flavor() == Flavor::Poisson ? FiringProcessSpec::poisson(rates) : FiringProcessSpec::bernoulli(rates)};
}

SimulationRecord simulate_replication(const ModelInputs& inputs, std::uint64_t seed, std::size_t r,
                                      const McOptions& options, bool record_trajectory) {
  const RunOptions run{options.order, record_trajectory};
  const std::uint64_t s = derive_seed(seed, r);
  return options.simulator == Simulator::TwoStage
             ? run_sem(inputs.pop, inputs.roster, inputs.p, inputs.spec, s, run)
             : run_sem_alternative(inputs.pop, inputs.roster, inputs.p, inputs.spec, s, run);
}

namespace {

// Calls body(r) for every replication, split into contiguous chunks across
// threads. The first exception is rethrown after all workers finish.
template <class Body>
void parallel_replications(std::size_t runs, unsigned threads, Body&& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(runs, 1)));
  if (threads <= 1) {
    for (std::size_t r = 0; r < runs; ++r) body(r, 0u);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t lo = runs * w / threads;
      const std::size_t hi = runs * (w + 1) / threads;
      try {
        for (std::size_t r = lo; r < hi; ++r) body(r, w);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

unsigned worker_count(std::size_t runs, unsigned threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(runs, 1)));
}

std::uint64_t factorial(std::size_t n) {
  std::uint64_t f = 1;
  for (std::size_t i = 2; i <= n; ++i) f *= i;
  return f;
}

template <class Keep>
PmfOverTables permutation_oracle(const PopulationCounts& pop, const AnimalRoster& roster, Keep&& keep) {
  const std::size_t n = roster.n();
  if (n > kOracleMaxAnimals) {
    throw Error(ErrorCode::TooLargeForOracle, "permutation oracle limited to n <= " +
                                                  std::to_string(kOracleMaxAnimals) + ", got " + std::to_string(n));
  }
  if (roster.k() != pop.k() || n != static_cast<std::size_t>(pop.n())) {
    throw Error(ErrorCode::InvalidArgument, "roster does not match the population");
  }
  std::map<PairTypeMatrix, std::uint64_t> counts;
  std::vector<std::size_t> sigma(n);
  std::iota(sigma.begin(), sigma.end(), std::size_t{0});
  do {
    PairTypeMatrix m(pop.k());
    for (std::size_t a = 0; a < n; ++a) {
      if (keep(a, sigma[a])) m.add(roster.female_type(a), roster.male_type(sigma[a]), 1);
    }
    ++counts[m];
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  const double total = static_cast<double>(factorial(n));
  PmfOverTables out;
  for (const auto& [m, c] : counts) {
    out.support.push_back(m);
    out.probabilities.push_back(static_cast<double>(c) / total);
  }
  return out;
}

void pool_small_cells(std::vector<GofCell>& cells, double min_expected) {
  std::vector<GofCell> kept;
  GofCell tail;
  for (auto& c : cells) {
    if (c.expected >= min_expected) {
      kept.push_back(std::move(c));
    } else {
      tail.tables.insert(tail.tables.end(), c.tables.begin(), c.tables.end());
      tail.observed += c.observed;
      tail.expected += c.expected;
    }
  }
  if (!tail.tables.empty()) {
    if (tail.expected < min_expected && !kept.empty()) {
      auto smallest = std::min_element(kept.begin(), kept.end(),
                                       [](const GofCell& a, const GofCell& b) { return a.expected < b.expected; });
      smallest->tables.insert(smallest->tables.end(), tail.tables.begin(), tail.tables.end());
      smallest->observed += tail.observed;
      smallest->expected += tail.expected;
    } else {
      kept.push_back(std::move(tail));
    }
  }
  cells = std::move(kept);
}

constexpr double kMinExpected = 5.0;

}  // namespace

EmpiricalPmf empirical_terminal_pmf(const ModelInputs& inputs, std::size_t runs, std::uint64_t seed,
                                    const McOptions& options) {
  if (runs == 0) throw Error(ErrorCode::EmptySample, "need at least one run");
  EmpiricalPmf out;
  out.runs = runs;
  out.pmf.support = enumerate_tables(inputs.pop);
  std::unordered_map<PairTypeMatrix, std::size_t, PairTypeMatrixHash> index;
  for (std::size_t s = 0; s < out.pmf.support.size(); ++s) index.emplace(out.pmf.support[s], s);

  const unsigned workers = worker_count(runs, options.threads);
  std::vector<std::vector<std::uint64_t>> partial(workers, std::vector<std::uint64_t>(index.size(), 0));
  parallel_replications(runs, workers, [&](std::size_t r, unsigned w) {
    ++partial[w][index.at(simulate_replication(inputs, seed, r, options).terminal_pattern)];
  });
  out.counts.assign(index.size(), 0);
  for (const auto& part : partial) {
    for (std::size_t s = 0; s < part.size(); ++s) out.counts[s] += part[s];
  }
  for (auto c : out.counts) out.pmf.probabilities.push_back(static_cast<double>(c) / static_cast<double>(runs));
  return out;
}

McEstimate mc_expectation(const ModelInputs& inputs, const std::function<double(const SimulationRecord&)>& statistic,
                          std::size_t runs, std::uint64_t seed, const McOptions& options) {
  if (runs < 2) throw Error(ErrorCode::EmptySample, "need at least two runs for a standard error");
  std::vector<double> values(runs);
  parallel_replications(runs, options.threads, [&](std::size_t r, unsigned) {
    values[r] = statistic(simulate_replication(inputs, seed, r, options, true));
  });
  McEstimate est;
  est.runs = runs;
  est.seed = seed;
  double sum = 0.0;
  for (double v : values) sum += v;
  est.mean = sum / static_cast<double>(runs);
  double ss = 0.0;
  for (double v : values) ss += (v - est.mean) * (v - est.mean);
  est.std_error = std::sqrt(ss / static_cast<double>(runs - 1) / static_cast<double>(runs));
  return est;
}

double chi_square_tail(double statistic, std::size_t degrees_of_freedom) {
  if (degrees_of_freedom == 0) return 1.0;
  if (std::isinf(statistic)) return 0.0;
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(static_cast<double>(degrees_of_freedom) / 2.0, statistic / 2.0);
}

GofReport gof_compare(const EmpiricalPmf& observed, const PmfOverTables& expected) {
  if (observed.runs == 0) throw Error(ErrorCode::EmptySample, "no observations");
  const double runs = static_cast<double>(observed.runs);
  std::map<PairTypeMatrix, GofCell> by_table;
  for (std::size_t s = 0; s < expected.size(); ++s) {
    auto& c = by_table[expected.support[s]];
    c.expected += runs * expected.probabilities[s];
  }
  for (std::size_t s = 0; s < observed.pmf.size(); ++s) {
    auto& c = by_table[observed.pmf.support[s]];
    c.observed += static_cast<double>(observed.counts[s]);
  }
  GofReport rep;
  std::vector<GofCell> cells;
  bool impossible = false;
  for (auto& [m, c] : by_table) {
    rep.tv_distance += std::abs(c.observed - c.expected) / runs;
    if (c.expected <= 0.0) {
      if (c.observed > 0.0) impossible = true;
      continue;
    }
    c.tables.push_back(m);
    cells.push_back(std::move(c));
  }
  rep.tv_distance = std::min(1.0, 0.5 * rep.tv_distance);
  pool_small_cells(cells, kMinExpected);
  rep.degrees_of_freedom = cells.empty() ? 0 : cells.size() - 1;
  for (const auto& c : cells) rep.statistic += (c.observed - c.expected) * (c.observed - c.expected) / c.expected;
  if (impossible) rep.statistic = std::numeric_limits<double>::infinity();
  rep.p_value = chi_square_tail(rep.statistic, rep.degrees_of_freedom);
  rep.cells = std::move(cells);
  return rep;
}

GofReport gof_two_sample(const EmpiricalPmf& a, const EmpiricalPmf& b) {
  if (a.runs == 0 || b.runs == 0) throw Error(ErrorCode::EmptySample, "no observations");
  std::map<PairTypeMatrix, std::pair<double, double>> by_table;
  for (std::size_t s = 0; s < a.pmf.size(); ++s) by_table[a.pmf.support[s]].first += static_cast<double>(a.counts[s]);
  for (std::size_t s = 0; s < b.pmf.size(); ++s) by_table[b.pmf.support[s]].second += static_cast<double>(b.counts[s]);
  const double na = static_cast<double>(a.runs);
  const double nb = static_cast<double>(b.runs);
  const double share_a = na / (na + nb);

  // Cells are pooled on the smaller expected count of the two rows; each
  // cell records sample a as observed and its expectation under homogeneity.
  std::vector<GofCell> cells;
  std::vector<double> totals;
  GofReport rep;
  for (const auto& [m, ab] : by_table) {
    rep.tv_distance += std::abs(ab.first / na - ab.second / nb);
    const double total = ab.first + ab.second;
    if (total == 0.0) continue;
    cells.push_back({{m}, ab.first, total * share_a});
  }
  rep.tv_distance *= 0.5;
  const double min_share = std::min(share_a, 1.0 - share_a);
  // Pooling uses the smaller of the two expectations, scaled into units of
  // sample a.
  pool_small_cells(cells, kMinExpected * share_a / min_share);
  rep.degrees_of_freedom = cells.empty() ? 0 : cells.size() - 1;
  for (const auto& c : cells) {
    const double total = c.expected / share_a;
    const double ea = c.expected;
    const double eb = total - ea;
    const double ob = total - c.observed;
    rep.statistic += (c.observed - ea) * (c.observed - ea) / ea + (ob - eb) * (ob - eb) / eb;
  }
  rep.p_value = chi_square_tail(rep.statistic, rep.degrees_of_freedom);
  rep.cells = std::move(cells);
  return rep;
}

PmfOverTables permutation_oracle_definite(const PopulationCounts& pop, const AnimalRoster& roster) {
  return permutation_oracle(pop, roster, [](std::size_t, std::size_t) { return true; });
}

PmfOverTables permutation_oracle_definite(const PopulationCounts& pop, const AnimalRoster& roster,
                                          const FiringSchedule& schedule, double t) {
  if (schedule.n() != roster.n()) throw Error(ErrorCode::InvalidSchedule, "schedule does not match the roster");
  auto first = [](const std::vector<double>& times) {
    return times.empty() ? std::numeric_limits<double>::infinity() : times.front();
  };
  return permutation_oracle(pop, roster, [&](std::size_t a, std::size_t b) {
    return std::min(first(schedule.female[a]), first(schedule.male[b])) <= t;
  });
}

}  // namespace sem
