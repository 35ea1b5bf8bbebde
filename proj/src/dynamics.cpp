#include "sem/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <tuple>

#include "sem/exact.hpp"

namespace sem {

using kernels::CsrMatrix;

namespace {

using Triplets = std::vector<std::tuple<std::size_t, std::size_t, double>>;

void require_flavor(const PopulationCounts& pop, const EMLaw& law, Flavor flavor) {
  if (law.flavor() != flavor) {
    throw Error(ErrorCode::InvalidLaw, std::string("expected a ") + std::string(to_string(flavor)) + " law");
  }
  if (law.k() != pop.k()) throw Error(ErrorCode::WrongDimension, "law and population have different k");
}

std::vector<std::int64_t> counts_key(const PopulationCounts& pop) {
  std::vector<std::int64_t> key(pop.x().begin(), pop.x().end());
  key.insert(key.end(), pop.y().begin(), pop.y().end());
  return key;
}

PairTypeMatrix unit(std::size_t k, std::size_t i, std::size_t j) {
  PairTypeMatrix m(k);
  m.add(i, j, 1);
  return m;
}

void add_scaled(RealMatrix& acc, const RealMatrix& m, double w) {
  for (std::size_t i = 0; i < acc.k(); ++i) {
    for (std::size_t j = 0; j < acc.k(); ++j) acc(i, j) += w * m(i, j);
  }
}

// Poisson exit rates out of the state whose singles are `rest`.
struct Exits {
  std::vector<std::pair<std::size_t, std::size_t>> types;
  std::vector<double> rates;
  double total = 0.0;
};

Exits poisson_exits(const PopulationCounts& rest, const EMLaw& law) {
  Exits e;
  if (rest.n() == 0) return e;
  const double singles = static_cast<double>(rest.n());
  for (std::size_t i = 0; i < rest.k(); ++i) {
    for (std::size_t j = 0; j < rest.k(); ++j) {
      if (rest.x(i) == 0 || rest.y(j) == 0) continue;
      const double r = law(i, j) * static_cast<double>(rest.x(i)) * static_cast<double>(rest.y(j)) / singles;
      e.types.emplace_back(i, j);
      e.rates.push_back(r);
      e.total += r;
    }
  }
  return e;
}

// Round laws keyed on the singles' counts; reused across states and calls
// within one invocation.
class RoundLawCache {
 public:
  explicit RoundLawCache(const EMLaw& law) : law_(law) {}

  const std::vector<std::pair<PairTypeMatrix, double>>& get(const PopulationCounts& rest) {
    auto key = counts_key(rest);
    auto it = cache_.find(key);
    if (it == cache_.end()) it = cache_.emplace(std::move(key), bernoulli_round_law(rest, law_)).first;
    return it->second;
  }

 private:
  const EMLaw& law_;
  std::map<std::vector<std::int64_t>, std::vector<std::pair<PairTypeMatrix, double>>> cache_;
};

std::vector<std::size_t> sweep_order(const std::vector<PairTypeMatrix>& states) {
  std::vector<std::size_t> order(states.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return states[a].total() < states[b].total(); });
  return order;
}

}  // namespace

// ---- chain matrices ----------------------------------------------------------

ChainMatrix::ChainMatrix(std::vector<PairTypeMatrix> states, CsrMatrix entries)
    : states_(std::move(states)), entries_(std::move(entries)) {
  if (entries_.rows != states_.size() || entries_.cols != states_.size()) {
    throw Error(ErrorCode::WrongDimension, "chain matrix must be square over the state list");
  }
  index_.reserve(states_.size());
  for (std::size_t s = 0; s < states_.size(); ++s) index_.emplace(states_[s], s);
}

std::size_t ChainMatrix::index_of(const PairTypeMatrix& m) const {
  auto it = index_.find(m);
  if (it == index_.end()) throw Error(ErrorCode::InvalidArgument, m.to_string() + " is not a state of this chain");
  return it->second;
}

double ChainMatrix::at(std::size_t from, std::size_t to) const {
  for (std::size_t p = entries_.row_ptr[from]; p < entries_.row_ptr[from + 1]; ++p) {
    if (static_cast<std::size_t>(entries_.col[p]) == to) return entries_.val[p];
  }
  return 0.0;
}

double ChainMatrix::row_sum(std::size_t from) const {
  double s = 0.0;
  for (std::size_t p = entries_.row_ptr[from]; p < entries_.row_ptr[from + 1]; ++p) s += entries_.val[p];
  return s;
}

double GeneratorMatrix::max_exit_rate() const {
  double worst = 0.0;
  for (std::size_t s = 0; s < size(); ++s) worst = std::max(worst, -at(s, s));
  return worst;
}

GeneratorMatrix generator_poisson(const PopulationCounts& pop, const EMLaw& law) {
  require_flavor(pop, law, Flavor::Poisson);
  auto states = enumerate_states(pop);
  std::unordered_map<PairTypeMatrix, std::size_t, PairTypeMatrixHash> index;
  for (std::size_t s = 0; s < states.size(); ++s) index.emplace(states[s], s);

  Triplets triplets;
  for (std::size_t s = 0; s < states.size(); ++s) {
    const auto exits = poisson_exits(residual_population(pop, states[s]), law);
    for (std::size_t e = 0; e < exits.types.size(); ++e) {
      auto next = states[s];
      next.add(exits.types[e].first, exits.types[e].second, 1);
      triplets.emplace_back(s, index.at(next), exits.rates[e]);
    }
    if (exits.total > 0.0) triplets.emplace_back(s, s, -exits.total);
  }
  const std::size_t size = states.size();
  return GeneratorMatrix(std::move(states), CsrMatrix::from_triplets(size, size, std::move(triplets)));
}

std::vector<std::pair<PairTypeMatrix, double>> bernoulli_round_law(const PopulationCounts& singles,
                                                                    const EMLaw& law) {
  if (law.flavor() != Flavor::Bernoulli) throw Error(ErrorCode::InvalidLaw, "expected a bernoulli law");
  if (law.k() != singles.k()) throw Error(ErrorCode::WrongDimension, "law and population have different k");
  const std::size_t k = singles.k();
  const std::size_t cells = k * k;
  std::map<PairTypeMatrix, double> mass;
  for (const auto& matching : enumerate_tables(singles)) {
    const double w = terminal_pmf_definite(singles, matching);
    std::vector<std::int64_t> kept(cells, 0);
    while (true) {
      double p = w;
      for (std::size_t c = 0; c < cells && p > 0.0; ++c) {
        const double pi = law.matrix().data()[c];
        const auto top = matching.entries()[c];
        p *= std::exp(log_factorial(top) - log_factorial(kept[c]) - log_factorial(top - kept[c])) *
             std::pow(pi, static_cast<double>(kept[c])) * std::pow(1.0 - pi, static_cast<double>(top - kept[c]));
      }
      if (p > 0.0) mass[PairTypeMatrix(k, kept)] += p;
      std::size_t c = 0;
      while (c < cells && kept[c] == matching.entries()[c]) kept[c++] = 0;
      if (c == cells) break;
      ++kept[c];
    }
  }
  return {mass.begin(), mass.end()};
}

KernelMatrix kernel_bernoulli(const PopulationCounts& pop, const EMLaw& law) {
  require_flavor(pop, law, Flavor::Bernoulli);
  auto states = enumerate_states(pop);
  std::unordered_map<PairTypeMatrix, std::size_t, PairTypeMatrixHash> index;
  for (std::size_t s = 0; s < states.size(); ++s) index.emplace(states[s], s);

  RoundLawCache rounds(law);
  Triplets triplets;
  for (std::size_t s = 0; s < states.size(); ++s) {
    for (const auto& [step, p] : rounds.get(residual_population(pop, states[s]))) {
      triplets.emplace_back(s, index.at(states[s] + step), p);
    }
  }
  const std::size_t size = states.size();
  return KernelMatrix(std::move(states), CsrMatrix::from_triplets(size, size, std::move(triplets)));
}

// ---- transient laws ----------------------------------------------------------

namespace {

constexpr double kUniformizationTolerance = 1e-12;
// Poisson weights e^{-tau} tau^j / j! are formed recursively; keeping tau
// moderate avoids underflow of the first weight.
constexpr double kMaxStepMass = 50.0;

PmfOverTables as_pmf(const std::vector<PairTypeMatrix>& states, std::vector<double> v) {
  PmfOverTables out;
  out.support = states;
  out.probabilities = std::move(v);
  return out;
}

PmfOverTables poisson_transient(const PopulationCounts& pop, const EMLaw& law, double t) {
  const auto gen = generator_poisson(pop, law);
  const std::size_t size = gen.size();
  std::vector<double> v(size, 0.0);
  v[gen.index_of(PairTypeMatrix(pop.k()))] = 1.0;
  const double rate = gen.max_exit_rate();
  if (t == 0.0 || rate == 0.0) return as_pmf(gen.states(), std::move(v));

  // Transposed uniformized chain, so one step is a gather-dot per state.
  Triplets triplets;
  const auto& g = gen.entries();
  for (std::size_t s = 0; s < size; ++s) {
    triplets.emplace_back(s, s, 1.0);
    for (std::size_t p = g.row_ptr[s]; p < g.row_ptr[s + 1]; ++p) {
      triplets.emplace_back(static_cast<std::size_t>(g.col[p]), s, g.val[p] / rate);
    }
  }
  const auto step = CsrMatrix::from_triplets(size, size, std::move(triplets));

  const double total_mass = rate * t;
  const auto substeps = static_cast<std::size_t>(std::ceil(total_mass / kMaxStepMass));
  const double tau = total_mass / static_cast<double>(substeps);
  const double tolerance = kUniformizationTolerance / static_cast<double>(substeps);
  std::vector<double> term(size), next(size), acc(size);
  for (std::size_t sub = 0; sub < substeps; ++sub) {
    term = v;
    std::fill(acc.begin(), acc.end(), 0.0);
    double weight = std::exp(-tau);
    double covered = weight;
    kernels::axpy(weight, term, acc);
    for (std::size_t j = 1; 1.0 - covered > tolerance; ++j) {
      kernels::spmv(step, term, next);
      std::swap(term, next);
      weight *= tau / static_cast<double>(j);
      covered += weight;
      kernels::axpy(weight, term, acc);
      // Rounding can stall `covered` just short of 1; the tail is negligible
      // far beyond the mean.
      if (static_cast<double>(j) > tau + 40.0 * std::sqrt(tau) + 40.0) break;
    }
    std::swap(v, acc);
  }
  return as_pmf(gen.states(), std::move(v));
}

PmfOverTables bernoulli_transient(const PopulationCounts& pop, const EMLaw& law, double t) {
  if (t != std::floor(t)) {
    throw Error(ErrorCode::InvalidArgument, "Bernoulli time must be an integer; got t = " + std::to_string(t));
  }
  const auto ker = kernel_bernoulli(pop, law);
  const auto step = ker.entries().transposed();
  std::vector<double> v(ker.size(), 0.0), next(ker.size());
  v[ker.index_of(PairTypeMatrix(pop.k()))] = 1.0;
  for (double r = 0; r < t; r += 1.0) {
    kernels::spmv(step, v, next);
    std::swap(v, next);
  }
  return as_pmf(ker.states(), std::move(v));
}

}  // namespace

PmfOverTables transient_distribution(const PopulationCounts& pop, const EMLaw& law, double t) {
  if (!std::isfinite(t) || t < 0.0) throw Error(ErrorCode::InvalidArgument, "time must be finite and nonnegative");
  if (law.k() != pop.k()) throw Error(ErrorCode::WrongDimension, "law and population have different k");
  return law.flavor() == Flavor::Poisson ? poisson_transient(pop, law, t) : bernoulli_transient(pop, law, t);
}

// ---- terminal expectations ---------------------------------------------------

namespace {

class PoissonRecursion {
 public:
  explicit PoissonRecursion(const EMLaw& law) : law_(law) {}

  RealMatrix solve(const PopulationCounts& pop) {
    if (pop.n() == 0) return RealMatrix(pop.k(), 0.0);
    auto key = counts_key(pop);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    const auto exits = poisson_exits(pop, law_);
    RealMatrix u(pop.k(), 0.0);
    for (std::size_t e = 0; e < exits.types.size(); ++e) {
      const auto [i, j] = exits.types[e];
      const double w = exits.rates[e] / exits.total;
      add_scaled(u, solve(residual_population(pop, unit(pop.k(), i, j))), w);
      u(i, j) += w;
    }
    memo_.emplace(std::move(key), u);
    return u;
  }

 private:
  const EMLaw& law_;
  std::map<std::vector<std::int64_t>, RealMatrix> memo_;
};

class BernoulliRecursion {
 public:
  explicit BernoulliRecursion(const EMLaw& law) : law_(law), rounds_(law) {}

  RealMatrix solve(const PopulationCounts& pop) {
    if (pop.n() == 0) return RealMatrix(pop.k(), 0.0);
    auto key = counts_key(pop);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    const auto& moves = rounds_.get(pop);
    // The escape probability is summed from the moves rather than taken as
    // 1 - rho(0, 0), which would cancel when pi is small.
    double escape = 0.0;
    for (const auto& [step, p] : moves) {
      if (!step.is_zero()) escape += p;
    }
    if (!(escape > 0.0)) {
      throw Error(ErrorCode::DegenerateKernel, "no pair can ever form from counts " + std::to_string(pop.n()));
    }
    RealMatrix u(pop.k(), 0.0);
    for (const auto& [step, p] : moves) {
      if (step.is_zero()) continue;
      const double w = p / escape;
      add_scaled(u, solve(residual_population(pop, step)), w);
      for (std::size_t i = 0; i < pop.k(); ++i) {
        for (std::size_t j = 0; j < pop.k(); ++j) u(i, j) += w * static_cast<double>(step(i, j));
      }
    }
    memo_.emplace(std::move(key), u);
    return u;
  }

 private:
  const EMLaw& law_;
  RoundLawCache rounds_;
  std::map<std::vector<std::int64_t>, RealMatrix> memo_;
};

}  // namespace

RealMatrix terminal_expectation_poisson(const PopulationCounts& pop, const EMLaw& law) {
  require_flavor(pop, law, Flavor::Poisson);
  return PoissonRecursion(law).solve(pop);
}

RealMatrix terminal_expectation_bernoulli(const PopulationCounts& pop, const EMLaw& law) {
  require_flavor(pop, law, Flavor::Bernoulli);
  return BernoulliRecursion(law).solve(pop);
}

RealMatrix terminal_expectation(const PopulationCounts& pop, const EMLaw& law) {
  return law.flavor() == Flavor::Poisson ? terminal_expectation_poisson(pop, law)
                                         : terminal_expectation_bernoulli(pop, law);
}

// ---- terminal law ------------------------------------------------------------

PmfOverTables terminal_pmf_absorbing(const PopulationCounts& pop, const EMLaw& law) {
  if (law.k() != pop.k()) throw Error(ErrorCode::WrongDimension, "law and population have different k");
  const auto states = enumerate_states(pop);
  std::unordered_map<PairTypeMatrix, std::size_t, PairTypeMatrixHash> index;
  for (std::size_t s = 0; s < states.size(); ++s) index.emplace(states[s], s);
  std::vector<double> mass(states.size(), 0.0);
  mass[index.at(PairTypeMatrix(pop.k()))] = 1.0;

  RoundLawCache rounds(law);
  PmfOverTables out;
  for (std::size_t s : sweep_order(states)) {
    const auto rest = residual_population(pop, states[s]);
    if (rest.n() == 0) continue;
    if (mass[s] == 0.0) continue;
    if (law.flavor() == Flavor::Poisson) {
      const auto exits = poisson_exits(rest, law);
      for (std::size_t e = 0; e < exits.types.size(); ++e) {
        auto next = states[s];
        next.add(exits.types[e].first, exits.types[e].second, 1);
        mass[index.at(next)] += mass[s] * exits.rates[e] / exits.total;
      }
    } else {
      const auto& moves = rounds.get(rest);
      double escape = 0.0;
      for (const auto& [step, p] : moves) {
        if (!step.is_zero()) escape += p;
      }
      if (!(escape > 0.0)) throw Error(ErrorCode::DegenerateKernel, "state " + states[s].to_string() + " never moves");
      for (const auto& [step, p] : moves) {
        if (!step.is_zero()) mass[index.at(states[s] + step)] += mass[s] * p / escape;
      }
    }
  }
  for (std::size_t s = 0; s < states.size(); ++s) {
    if (states[s].is_table_of(pop)) {
      out.support.push_back(states[s]);
      out.probabilities.push_back(mass[s]);
    }
  }
  return out;
}

}  // namespace sem
