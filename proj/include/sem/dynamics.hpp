#pragma once

// Markov-chain machinery for arbitrary encounter-mating laws: the Poisson
// generator, the Bernoulli one-round kernel, transient distributions,
// terminal-expectation recursions and an exact law of the terminal pattern.

#include <cstddef>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sem/core.hpp"
#include "sem/kernels.hpp"
#include "sem/pmf.hpp"

namespace sem {

/// Shared layout of the two chain descriptions: states in enumeration order
/// and a CSR matrix over them.
class ChainMatrix {
 public:
  ChainMatrix(std::vector<PairTypeMatrix> states, kernels::CsrMatrix entries);

  const std::vector<PairTypeMatrix>& states() const noexcept { return states_; }
  const kernels::CsrMatrix& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return states_.size(); }
  /// Throws InvalidArgument for tables outside the state space.
  std::size_t index_of(const PairTypeMatrix& m) const;
  double at(std::size_t from, std::size_t to) const;
  double at(const PairTypeMatrix& from, const PairTypeMatrix& to) const { return at(index_of(from), index_of(to)); }
  double row_sum(std::size_t from) const;

 private:
  std::vector<PairTypeMatrix> states_;
  kernels::CsrMatrix entries_;
  std::unordered_map<PairTypeMatrix, std::size_t, PairTypeMatrixHash> index_;
};

/// Transition rates of the continuous-time chain; the diagonal is derived so
/// rows sum to zero.
class GeneratorMatrix : public ChainMatrix {
 public:
  using ChainMatrix::ChainMatrix;
  /// Largest total exit rate.
  double max_exit_rate() const;
};

/// One-round transition probabilities of the discrete-time chain.
class KernelMatrix : public ChainMatrix {
 public:
  using ChainMatrix::ChainMatrix;
};

/// Rate pi_ij (x_i - m_i.)(y_j - m_.j) / (n - m_tot) from M to M + I^{ij}.
GeneratorMatrix generator_poisson(const PopulationCounts& pop, const EMLaw& law);

/// Law of the pairs formed in one Bernoulli round when `singles` are the
/// animals still unpaired: a uniform matching of the singles, each type-ij
/// couple kept independently with probability pi_ij. Entries are (increment,
/// probability), including the zero increment.
std::vector<std::pair<PairTypeMatrix, double>> bernoulli_round_law(const PopulationCounts& singles,
                                                                    const EMLaw& law);

KernelMatrix kernel_bernoulli(const PopulationCounts& pop, const EMLaw& law);

/// Law of Q(t) from the zero table. Poisson: uniformization with truncation
/// error at most 1e-12. Bernoulli: t-fold kernel application (integer t).
PmfOverTables transient_distribution(const PopulationCounts& pop, const EMLaw& law, double t);

/// Expected terminal pattern by the one-step recursions, memoized on the
/// residual counts.
RealMatrix terminal_expectation_poisson(const PopulationCounts& pop, const EMLaw& law);
RealMatrix terminal_expectation_bernoulli(const PopulationCounts& pop, const EMLaw& law);
/// Dispatches on the law's flavor.
RealMatrix terminal_expectation(const PopulationCounts& pop, const EMLaw& law);

/// Exact law of Q(T) over complete tables, by propagating mass through the
/// jump chain in order of increasing pair count.
PmfOverTables terminal_pmf_absorbing(const PopulationCounts& pop, const EMLaw& law);

}  // namespace sem
