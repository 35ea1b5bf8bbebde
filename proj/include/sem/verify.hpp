#pragma once

// Monte Carlo estimation, goodness-of-fit comparison and brute-force
// permutation oracles for small populations.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "sem/core.hpp"
#include "sem/engine.hpp"
#include "sem/pmf.hpp"

namespace sem {

/// Everything a simulation needs.
struct ModelInputs {
  PopulationCounts pop;
  AnimalRoster roster;
  PreferenceMatrix p;
  FiringProcessSpec spec;

  /// Canonical roster, and preferences and rates realising `law`.
  static ModelInputs from_law(const PopulationCounts& pop, const EMLaw& law);
  /// Canonical roster with the given preferences and memoryless rates.
  static ModelInputs from_rates(const PopulationCounts& pop, const PreferenceMatrix& p, const RateVector& rates);
};

enum class Simulator { TwoStage, RandomMatching };

struct McOptions {
  Simulator simulator = Simulator::TwoStage;
  FiringOrder order = FiringOrder::FemalesFirst;
  /// 0 picks the hardware concurrency.
  unsigned threads = 0;
};

/// Runs replication r with seed derive_seed(seed, r), whatever the thread count.
SimulationRecord simulate_replication(const ModelInputs& inputs, std::uint64_t seed, std::size_t r,
                                      const McOptions& options = {}, bool record_trajectory = false);

struct EmpiricalPmf {
  /// Normalised frequencies over every complete table, enumeration order.
  PmfOverTables pmf;
  std::vector<std::uint64_t> counts;
  std::size_t runs = 0;
};

EmpiricalPmf empirical_terminal_pmf(const ModelInputs& inputs, std::size_t runs, std::uint64_t seed,
                                    const McOptions& options = {});

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t runs = 0;
  std::uint64_t seed = 0;
};

McEstimate mc_expectation(const ModelInputs& inputs, const std::function<double(const SimulationRecord&)>& statistic,
                          std::size_t runs, std::uint64_t seed, const McOptions& options = {});

struct GofCell {
  /// Tables merged into this cell (several for the pooled tail).
  std::vector<PairTypeMatrix> tables;
  double observed = 0.0;
  double expected = 0.0;
};

struct GofReport {
  double statistic = 0.0;
  std::size_t degrees_of_freedom = 0;
  double p_value = 1.0;
  double tv_distance = 0.0;
  std::vector<GofCell> cells;

  bool passes(double significance) const { return p_value > significance; }
};

/// Pearson chi-square of observed counts against a pmf. Cells expected to
/// hold fewer than 5 observations are pooled.
GofReport gof_compare(const EmpiricalPmf& observed, const PmfOverTables& expected);

/// Chi-square test of homogeneity between two samples over the same tables.
GofReport gof_two_sample(const EmpiricalPmf& a, const EmpiricalPmf& b);

/// Upper tail of the chi-square distribution.
double chi_square_tail(double statistic, std::size_t degrees_of_freedom);

/// Largest population the permutation oracles accept.
inline constexpr std::size_t kOracleMaxAnimals = 8;

/// Terminal pattern law under definite mating: all n! terminal pair lists,
/// equally likely. Counts are kept as integers and divided once.
PmfOverTables permutation_oracle_definite(const PopulationCounts& pop, const AnimalRoster& roster);

/// Pattern at time t: a destined pair has formed once either member has
/// fired for the first time.
PmfOverTables permutation_oracle_definite(const PopulationCounts& pop, const AnimalRoster& roster,
                                          const FiringSchedule& schedule, double t);

}  // namespace sem
