#pragma once

// Domain types of the stochastic encounter-mating model: population counts,
// preference matrices, firing rates, encounter-mating laws, pair-type
// contingency tables and the enumeration of their state spaces.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sem {

enum class ErrorCode {
  InvalidArgument,
  UnequalTotals,
  EmptyPopulation,
  StateSpaceTooLarge,
  InvalidIndex,
  NotAdmissible,
  InvalidPreferences,
  InvalidRates,
  InvalidLaw,
  InvalidHorizon,
  InvalidSchedule,
  HorizonExhausted,
  NotATable,
  FineBalanceViolated,
  NotFineBalanced,
  WrongDimension,
  DegenerateKernel,
  TooLargeForOracle,
  EmptySample,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// front ends can map it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

enum class Flavor { Poisson, Bernoulli };

std::string_view to_string(Flavor flavor) noexcept;

/// Dense k x k matrix, row-major.
template <class T>
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t k, T fill = T{}) : k_(k), data_(k * k, fill) {}
  SquareMatrix(std::initializer_list<std::initializer_list<T>> rows) : k_(rows.size()) {
    data_.reserve(k_ * k_);
    for (const auto& row : rows) {
      if (row.size() != k_) {
        throw Error(ErrorCode::WrongDimension, "matrix rows must all have length k");
      }
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  std::size_t k() const noexcept { return k_; }
  T& operator()(std::size_t i, std::size_t j) { return data_[i * k_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * k_ + j]; }
  std::span<const T> data() const noexcept { return data_; }
  std::span<T> data() noexcept { return data_; }

  bool operator==(const SquareMatrix&) const = default;

 private:
  std::size_t k_ = 0;
  std::vector<T> data_;
};

using RealMatrix = SquareMatrix<double>;

/// Per-type headcounts of a population with equal numbers of females and males.
class PopulationCounts {
 public:
  PopulationCounts() = default;
  /// Validates: k >= 2, nonnegative entries, equal totals.
  PopulationCounts(std::vector<std::int64_t> x, std::vector<std::int64_t> y);

  std::size_t k() const noexcept { return x_.size(); }
  std::span<const std::int64_t> x() const noexcept { return x_; }
  std::span<const std::int64_t> y() const noexcept { return y_; }
  std::int64_t x(std::size_t i) const { return x_[i]; }
  std::int64_t y(std::size_t j) const { return y_[j]; }
  std::int64_t n() const noexcept { return n_; }

  /// Throws EmptyPopulation when n == 0.
  void require_nonempty() const;

  bool operator==(const PopulationCounts&) const = default;

 private:
  std::vector<std::int64_t> x_;
  std::vector<std::int64_t> y_;
  std::int64_t n_ = 0;
};

PopulationCounts validate_population(std::vector<std::int64_t> x, std::vector<std::int64_t> y);

/// Mating probabilities p_ij in (0, 1] upon a type-ij encounter.
class PreferenceMatrix {
 public:
  explicit PreferenceMatrix(RealMatrix p);
  static PreferenceMatrix ones(std::size_t k) { return PreferenceMatrix(RealMatrix(k, 1.0)); }

  std::size_t k() const noexcept { return p_.k(); }
  double operator()(std::size_t i, std::size_t j) const { return p_(i, j); }
  const RealMatrix& matrix() const noexcept { return p_; }
  bool is_definite() const noexcept;

 private:
  RealMatrix p_;
};

/// Firing intensities (Poisson) or per-step firing probabilities (Bernoulli)
/// for each female type (alpha) and male type (beta).
class RateVector {
 public:
  RateVector(Flavor flavor, std::vector<double> alpha, std::vector<double> beta);

  Flavor flavor() const noexcept { return flavor_; }
  std::size_t k() const noexcept { return alpha_.size(); }
  std::span<const double> alpha() const noexcept { return alpha_; }
  std::span<const double> beta() const noexcept { return beta_; }
  double alpha(std::size_t i) const { return alpha_[i]; }
  double beta(std::size_t j) const { return beta_[j]; }

 private:
  Flavor flavor_;
  std::vector<double> alpha_;
  std::vector<double> beta_;
};

/// The matrix Pi that alone determines the law of the pair-type process.
class EMLaw {
 public:
  EMLaw(Flavor flavor, RealMatrix pi);

  Flavor flavor() const noexcept { return flavor_; }
  std::size_t k() const noexcept { return pi_.k(); }
  double operator()(std::size_t i, std::size_t j) const { return pi_(i, j); }
  const RealMatrix& matrix() const noexcept { return pi_; }
  double min_entry() const noexcept;
  double max_entry() const noexcept;

 private:
  Flavor flavor_;
  RealMatrix pi_;
};

/// Poisson: pi_ij = p_ij (alpha_i + beta_j).
/// Bernoulli: pi_ij = p_ij (alpha_i + beta_j - alpha_i beta_j).
EMLaw em_law(const PreferenceMatrix& p, const RateVector& rates);

/// One choice of (P, rates) realising a given law: Poisson uses alpha = 0,
/// beta = max pi and p = pi / max pi; Bernoulli uses alpha = 0, beta = 1, p = pi.
std::pair<PreferenceMatrix, RateVector> canonical_parameters(const EMLaw& law);

/// k x k table of permanent pair types. Margins are cached and kept in sync
/// on every mutation.
class PairTypeMatrix {
 public:
  PairTypeMatrix() = default;
  explicit PairTypeMatrix(std::size_t k);
  PairTypeMatrix(std::size_t k, std::vector<std::int64_t> row_major);
  PairTypeMatrix(std::initializer_list<std::initializer_list<std::int64_t>> rows);

  std::size_t k() const noexcept { return k_; }
  std::int64_t operator()(std::size_t i, std::size_t j) const { return m_[i * k_ + j]; }
  std::span<const std::int64_t> entries() const noexcept { return m_; }
  std::int64_t row_sum(std::size_t i) const { return rows_[i]; }
  std::int64_t col_sum(std::size_t j) const { return cols_[j]; }
  std::int64_t total() const noexcept { return total_; }

  void add(std::size_t i, std::size_t j, std::int64_t delta);

  /// Entrywise partial order.
  bool leq(const PairTypeMatrix& other) const;
  bool is_zero() const noexcept { return total_ == 0; }

  /// Row sums <= x and column sums <= y.
  bool is_state_of(const PopulationCounts& pop) const;
  /// Row sums == x and column sums == y.
  bool is_table_of(const PopulationCounts& pop) const;

  PairTypeMatrix operator+(const PairTypeMatrix& other) const;
  PairTypeMatrix operator-(const PairTypeMatrix& other) const;

  std::string to_string() const;

  bool operator==(const PairTypeMatrix& other) const { return k_ == other.k_ && m_ == other.m_; }
  /// Row-major lexicographic order.
  std::strong_ordering operator<=>(const PairTypeMatrix& other) const;

 private:
  void recompute_margins();

  std::size_t k_ = 0;
  std::vector<std::int64_t> m_;
  std::vector<std::int64_t> rows_;
  std::vector<std::int64_t> cols_;
  std::int64_t total_ = 0;
};

struct PairTypeMatrixHash {
  std::size_t operator()(const PairTypeMatrix& m) const noexcept;
};

/// Female and male type assignments. Types are 0-based.
class AnimalRoster {
 public:
  AnimalRoster(const PopulationCounts& pop, std::vector<std::size_t> female_types,
               std::vector<std::size_t> male_types);
  /// Females and males listed type by type in ascending order.
  static AnimalRoster canonical(const PopulationCounts& pop);

  std::size_t n() const noexcept { return female_types_.size(); }
  std::size_t k() const noexcept { return k_; }
  std::size_t female_type(std::size_t a) const { return female_types_[a]; }
  std::size_t male_type(std::size_t b) const { return male_types_[b]; }
  std::span<const std::size_t> female_types() const noexcept { return female_types_; }
  std::span<const std::size_t> male_types() const noexcept { return male_types_; }

 private:
  std::size_t k_ = 0;
  std::vector<std::size_t> female_types_;
  std::vector<std::size_t> male_types_;
};

/// Unordered collection of (female index, male index) couples.
struct PairList {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;

  std::size_t size() const noexcept { return pairs.size(); }
  bool empty() const noexcept { return pairs.empty(); }
  /// No animal appears in two pairs.
  bool admissible() const;
  /// A perfect pair list on n animals viewed as the permutation a -> sigma(a).
  std::vector<std::size_t> as_permutation(std::size_t n) const;
};

/// Tables built from a pair list by counting pair types.
PairTypeMatrix pattern_from_pairlist(const PairList& list, const AnimalRoster& roster);

/// Default cap on enumerated state-space sizes; SEM_STATE_CAP overrides it.
std::size_t state_cap();

/// All tables with row sums x and column sums y, row-major lexicographic
/// order (smallest entries first).
std::vector<PairTypeMatrix> enumerate_tables(const PopulationCounts& pop, std::size_t cap = state_cap());

/// All tables with row sums <= x and column sums <= y, same order.
std::vector<PairTypeMatrix> enumerate_states(const PopulationCounts& pop, std::size_t cap = state_cap());

/// All complete tables M' >= M.
std::vector<PairTypeMatrix> enumerate_completions(const PairTypeMatrix& m, const PopulationCounts& pop,
                                                  std::size_t cap = state_cap());

/// Population left single once the pairs in m are formed.
PopulationCounts residual_population(const PopulationCounts& pop, const PairTypeMatrix& m);

}  // namespace sem
