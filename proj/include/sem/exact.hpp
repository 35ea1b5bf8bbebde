#pragma once

// Closed-form laws of the pair-type process: the multiple hypergeometric
// terminal pattern under definite mating, the time-t law obtained by binomial
// thinning of the terminal pattern, and its fine-balanced specialisations.

#include <cstddef>
#include <functional>
#include <vector>

#include "sem/core.hpp"
#include "sem/pmf.hpp"

namespace sem {

enum class TimeSupport { Continuous, IntegerLattice };

/// CDFs of the first firing time per female type (F) and male type (G).
struct FirstFiringCDF {
  TimeSupport support = TimeSupport::Continuous;
  std::vector<std::function<double(double)>> female;
  std::vector<std::function<double(double)>> male;

  std::size_t k() const noexcept { return female.size(); }

  /// Exponential first firings for Poisson rates, geometric ones for Bernoulli.
  static FirstFiringCDF from_rates(const RateVector& rates);

  /// Rejects negative t, and non-integer t on the integer lattice.
  void check_time(double t) const;
};

double log_factorial(std::int64_t n);

/// Multiple hypergeometric mass of a complete table.
double terminal_pmf_definite(const PopulationCounts& pop, const PairTypeMatrix& m);
PmfOverTables terminal_distribution_definite(const PopulationCounts& pop);

/// Probability that a type-ij pair destined to form has formed by time t.
double lambda_ij(const FirstFiringCDF& cdfs, std::size_t i, std::size_t j, double t);

/// Time-t mass of m given the formation probabilities lambda and their
/// complements (passed separately so callers can supply 1 - lambda without
/// cancellation).
double qt_pmf_given_lambda(const PopulationCounts& pop, const RealMatrix& lambda, const RealMatrix& complement,
                           const PairTypeMatrix& m);

double qt_pmf_definite(const PopulationCounts& pop, const FirstFiringCDF& cdfs, double t, const PairTypeMatrix& m);
PmfOverTables qt_distribution_definite(const PopulationCounts& pop, const FirstFiringCDF& cdfs, double t);

/// x_i y_j lambda_ij(t) / n
double expected_qt_definite(const PopulationCounts& pop, const FirstFiringCDF& cdfs, double t, std::size_t i,
                            std::size_t j);

/// Default tolerance of the fine-balance precondition.
inline constexpr double kFineBalanceTolerance = 1e-9;

/// Time-t mass under a fine-balanced law; throws FineBalanceViolated otherwise.
/// Bernoulli laws require integer t.
double qt_pmf_finebalanced(const PopulationCounts& pop, const EMLaw& law, double t, const PairTypeMatrix& m,
                           double tol = kFineBalanceTolerance);
PmfOverTables qt_distribution_finebalanced(const PopulationCounts& pop, const EMLaw& law, double t,
                                           double tol = kFineBalanceTolerance);
/// x_i y_j (1 - e^{-pi_ij t}) / n, or x_i y_j (1 - (1 - pi_ij)^t) / n.
RealMatrix expected_qt_finebalanced(const PopulationCounts& pop, const EMLaw& law, double t,
                                    double tol = kFineBalanceTolerance);

}  // namespace sem
