#include "sem/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>

namespace sem {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnequalTotals: return "UnequalTotals";
    case ErrorCode::EmptyPopulation: return "EmptyPopulation";
    case ErrorCode::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case ErrorCode::InvalidIndex: return "InvalidIndex";
    case ErrorCode::NotAdmissible: return "NotAdmissible";
    case ErrorCode::InvalidPreferences: return "InvalidPreferences";
    case ErrorCode::InvalidRates: return "InvalidRates";
    case ErrorCode::InvalidLaw: return "InvalidLaw";
    case ErrorCode::InvalidHorizon: return "InvalidHorizon";
    case ErrorCode::InvalidSchedule: return "InvalidSchedule";
    case ErrorCode::HorizonExhausted: return "HorizonExhausted";
    case ErrorCode::NotATable: return "NotATable";
    case ErrorCode::FineBalanceViolated: return "FineBalanceViolated";
    case ErrorCode::NotFineBalanced: return "NotFineBalanced";
    case ErrorCode::WrongDimension: return "WrongDimension";
    case ErrorCode::DegenerateKernel: return "DegenerateKernel";
    case ErrorCode::TooLargeForOracle: return "TooLargeForOracle";
    case ErrorCode::EmptySample: return "EmptySample";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

std::string_view to_string(Flavor flavor) noexcept {
  return flavor == Flavor::Poisson ? "poisson" : "bernoulli";
}

// ---------------------------------------------------------------------------
// PopulationCounts

PopulationCounts::PopulationCounts(std::vector<std::int64_t> x, std::vector<std::int64_t> y)
    : x_(std::move(x)), y_(std::move(y)) {
  if (x_.size() != y_.size()) {
    throw Error(ErrorCode::WrongDimension, "female and male count vectors differ in length");
  }
  if (x_.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "at least two types are required");
  }
  auto negative = [](std::int64_t v) { return v < 0; };
  if (std::any_of(x_.begin(), x_.end(), negative) || std::any_of(y_.begin(), y_.end(), negative)) {
    throw Error(ErrorCode::InvalidArgument, "headcounts must be nonnegative");
  }
  const auto sx = std::accumulate(x_.begin(), x_.end(), std::int64_t{0});
  const auto sy = std::accumulate(y_.begin(), y_.end(), std::int64_t{0});
  if (sx != sy) {
    throw Error(ErrorCode::UnequalTotals, "female and male totals must be equal (sum(x)=" + std::to_string(sx) +
                                              ", sum(y)=" + std::to_string(sy) + ")");
  }
  n_ = sx;
}

void PopulationCounts::require_nonempty() const {
  if (n_ < 1) throw Error(ErrorCode::EmptyPopulation, "population has no animals");
}

PopulationCounts validate_population(std::vector<std::int64_t> x, std::vector<std::int64_t> y) {
  return PopulationCounts(std::move(x), std::move(y));
}

// ---------------------------------------------------------------------------
// Preferences, rates, laws

PreferenceMatrix::PreferenceMatrix(RealMatrix p) : p_(std::move(p)) {
  for (double v : p_.data()) {
    if (!(v > 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::InvalidPreferences, "preferences must lie in (0, 1]");
    }
  }
}

bool PreferenceMatrix::is_definite() const noexcept {
  return std::all_of(p_.data().begin(), p_.data().end(), [](double v) { return v == 1.0; });
}

RateVector::RateVector(Flavor flavor, std::vector<double> alpha, std::vector<double> beta)
    : flavor_(flavor), alpha_(std::move(alpha)), beta_(std::move(beta)) {
  if (alpha_.size() != beta_.size()) {
    throw Error(ErrorCode::WrongDimension, "alpha and beta differ in length");
  }
  auto bad = [flavor](double v) {
    if (!std::isfinite(v) || v < 0.0) return true;
    return flavor == Flavor::Bernoulli && v > 1.0;
  };
  if (std::any_of(alpha_.begin(), alpha_.end(), bad) || std::any_of(beta_.begin(), beta_.end(), bad)) {
    throw Error(ErrorCode::InvalidRates, flavor == Flavor::Poisson
                                             ? "Poisson intensities must be finite and nonnegative"
                                             : "Bernoulli success probabilities must lie in [0, 1]");
  }
  for (double a : alpha_) {
    for (double b : beta_) {
      if (!(a + b > 0.0)) {
        throw Error(ErrorCode::InvalidRates, "alpha_i + beta_j must be positive for every type pair");
      }
    }
  }
}

EMLaw::EMLaw(Flavor flavor, RealMatrix pi) : flavor_(flavor), pi_(std::move(pi)) {
  for (double v : pi_.data()) {
    const bool ok = flavor == Flavor::Poisson ? (std::isfinite(v) && v > 0.0) : (v > 0.0 && v <= 1.0);
    if (!ok) {
      throw Error(ErrorCode::InvalidLaw, flavor == Flavor::Poisson ? "Poisson law entries must be positive"
                                                                    : "Bernoulli law entries must lie in (0, 1]");
    }
  }
}

double EMLaw::min_entry() const noexcept { return *std::min_element(pi_.data().begin(), pi_.data().end()); }
double EMLaw::max_entry() const noexcept { return *std::max_element(pi_.data().begin(), pi_.data().end()); }

EMLaw em_law(const PreferenceMatrix& p, const RateVector& rates) {
  const std::size_t k = p.k();
  if (rates.k() != k) throw Error(ErrorCode::WrongDimension, "preference and rate dimensions differ");
  RealMatrix pi(k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double a = rates.alpha(i);
      const double b = rates.beta(j);
      const double encounter = rates.flavor() == Flavor::Poisson ? a + b : a + b - a * b;
      if (!(encounter > 0.0)) throw Error(ErrorCode::InvalidRates, "alpha_i + beta_j must be positive");
      pi(i, j) = p(i, j) * encounter;
    }
  }
  return EMLaw(rates.flavor(), std::move(pi));
}

std::pair<PreferenceMatrix, RateVector> canonical_parameters(const EMLaw& law) {
  const std::size_t k = law.k();
  if (law.flavor() == Flavor::Bernoulli) {
    return {PreferenceMatrix(law.matrix()),
            RateVector(Flavor::Bernoulli, std::vector<double>(k, 0.0), std::vector<double>(k, 1.0))};
  }
  const double scale = law.max_entry();
  RealMatrix p(k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) p(i, j) = std::min(1.0, law(i, j) / scale);
  }
  return {PreferenceMatrix(std::move(p)),
          RateVector(Flavor::Poisson, std::vector<double>(k, 0.0), std::vector<double>(k, scale))};
}

// ---------------------------------------------------------------------------
// PairTypeMatrix

PairTypeMatrix::PairTypeMatrix(std::size_t k) : k_(k), m_(k * k, 0), rows_(k, 0), cols_(k, 0) {}

PairTypeMatrix::PairTypeMatrix(std::size_t k, std::vector<std::int64_t> row_major) : k_(k), m_(std::move(row_major)) {
  if (m_.size() != k * k) throw Error(ErrorCode::WrongDimension, "table needs k*k entries");
  if (std::any_of(m_.begin(), m_.end(), [](std::int64_t v) { return v < 0; })) {
    throw Error(ErrorCode::InvalidArgument, "table entries must be nonnegative");
  }
  recompute_margins();
}

PairTypeMatrix::PairTypeMatrix(std::initializer_list<std::initializer_list<std::int64_t>> rows) : k_(rows.size()) {
  for (const auto& row : rows) {
    if (row.size() != k_) throw Error(ErrorCode::WrongDimension, "table rows must all have length k");
    m_.insert(m_.end(), row.begin(), row.end());
  }
  if (std::any_of(m_.begin(), m_.end(), [](std::int64_t v) { return v < 0; })) {
    throw Error(ErrorCode::InvalidArgument, "table entries must be nonnegative");
  }
  recompute_margins();
}

void PairTypeMatrix::recompute_margins() {
  rows_.assign(k_, 0);
  cols_.assign(k_, 0);
  total_ = 0;
  for (std::size_t i = 0; i < k_; ++i) {
    for (std::size_t j = 0; j < k_; ++j) {
      const auto v = m_[i * k_ + j];
      rows_[i] += v;
      cols_[j] += v;
      total_ += v;
    }
  }
}

void PairTypeMatrix::add(std::size_t i, std::size_t j, std::int64_t delta) {
  if (i >= k_ || j >= k_) throw Error(ErrorCode::InvalidIndex, "type index out of range");
  auto& cell = m_[i * k_ + j];
  if (cell + delta < 0) throw Error(ErrorCode::InvalidArgument, "table entry would become negative");
  cell += delta;
  rows_[i] += delta;
  cols_[j] += delta;
  total_ += delta;
}

bool PairTypeMatrix::leq(const PairTypeMatrix& other) const {
  if (k_ != other.k_) return false;
  for (std::size_t c = 0; c < m_.size(); ++c) {
    if (m_[c] > other.m_[c]) return false;
  }
  return true;
}

bool PairTypeMatrix::is_state_of(const PopulationCounts& pop) const {
  if (pop.k() != k_) return false;
  for (std::size_t i = 0; i < k_; ++i) {
    if (rows_[i] > pop.x(i) || cols_[i] > pop.y(i)) return false;
  }
  return true;
}

bool PairTypeMatrix::is_table_of(const PopulationCounts& pop) const {
  if (pop.k() != k_) return false;
  for (std::size_t i = 0; i < k_; ++i) {
    if (rows_[i] != pop.x(i) || cols_[i] != pop.y(i)) return false;
  }
  return true;
}

PairTypeMatrix PairTypeMatrix::operator+(const PairTypeMatrix& other) const {
  if (k_ != other.k_) throw Error(ErrorCode::WrongDimension, "table dimensions differ");
  std::vector<std::int64_t> sum(m_);
  for (std::size_t c = 0; c < sum.size(); ++c) sum[c] += other.m_[c];
  return PairTypeMatrix(k_, std::move(sum));
}

PairTypeMatrix PairTypeMatrix::operator-(const PairTypeMatrix& other) const {
  if (k_ != other.k_) throw Error(ErrorCode::WrongDimension, "table dimensions differ");
  std::vector<std::int64_t> diff(m_);
  for (std::size_t c = 0; c < diff.size(); ++c) diff[c] -= other.m_[c];
  return PairTypeMatrix(k_, std::move(diff));
}

std::strong_ordering PairTypeMatrix::operator<=>(const PairTypeMatrix& other) const {
  if (auto c = k_ <=> other.k_; c != 0) return c;
  return std::lexicographical_compare_three_way(m_.begin(), m_.end(), other.m_.begin(), other.m_.end());
}

std::string PairTypeMatrix::to_string() const {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < k_; ++i) {
    out << (i ? ",[" : "[");
    for (std::size_t j = 0; j < k_; ++j) out << (j ? "," : "") << (*this)(i, j);
    out << ']';
  }
  out << ']';
  return out.str();
}

std::size_t PairTypeMatrixHash::operator()(const PairTypeMatrix& m) const noexcept {
  std::size_t h = 0xcbf29ce484222325ULL;
  for (auto v : m.entries()) {
    h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

// ---------------------------------------------------------------------------
// Rosters and pair lists

AnimalRoster::AnimalRoster(const PopulationCounts& pop, std::vector<std::size_t> female_types,
                           std::vector<std::size_t> male_types)
    : k_(pop.k()), female_types_(std::move(female_types)), male_types_(std::move(male_types)) {
  const auto n = static_cast<std::size_t>(pop.n());
  if (female_types_.size() != n || male_types_.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "roster size does not match population");
  }
  std::vector<std::int64_t> fx(k_, 0), my(k_, 0);
  for (auto t : female_types_) {
    if (t >= k_) throw Error(ErrorCode::InvalidIndex, "female type out of range");
    ++fx[t];
  }
  for (auto t : male_types_) {
    if (t >= k_) throw Error(ErrorCode::InvalidIndex, "male type out of range");
    ++my[t];
  }
  for (std::size_t i = 0; i < k_; ++i) {
    if (fx[i] != pop.x(i) || my[i] != pop.y(i)) {
      throw Error(ErrorCode::InvalidArgument, "roster type counts do not match population");
    }
  }
}

AnimalRoster AnimalRoster::canonical(const PopulationCounts& pop) {
  std::vector<std::size_t> f, m;
  for (std::size_t i = 0; i < pop.k(); ++i) {
    f.insert(f.end(), static_cast<std::size_t>(pop.x(i)), i);
    m.insert(m.end(), static_cast<std::size_t>(pop.y(i)), i);
  }
  return AnimalRoster(pop, std::move(f), std::move(m));
}

bool PairList::admissible() const {
  std::vector<std::size_t> females, males;
  females.reserve(pairs.size());
  males.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    females.push_back(a);
    males.push_back(b);
  }
  std::sort(females.begin(), females.end());
  std::sort(males.begin(), males.end());
  return std::adjacent_find(females.begin(), females.end()) == females.end() &&
         std::adjacent_find(males.begin(), males.end()) == males.end();
}

std::vector<std::size_t> PairList::as_permutation(std::size_t n) const {
  if (pairs.size() != n || !admissible()) {
    throw Error(ErrorCode::NotAdmissible, "pair list is not a perfect matching");
  }
  std::vector<std::size_t> sigma(n);
  for (const auto& [a, b] : pairs) {
    if (a >= n || b >= n) throw Error(ErrorCode::InvalidIndex, "animal index out of range");
    sigma[a] = b;
  }
  return sigma;
}

PairTypeMatrix pattern_from_pairlist(const PairList& list, const AnimalRoster& roster) {
  PairTypeMatrix q(roster.k());
  for (const auto& [a, b] : list.pairs) {
    if (a >= roster.n() || b >= roster.n()) {
      throw Error(ErrorCode::InvalidIndex, "pair references an animal outside the roster");
    }
  }
  if (!list.admissible()) throw Error(ErrorCode::NotAdmissible, "an animal appears in two pairs");
  for (const auto& [a, b] : list.pairs) q.add(roster.female_type(a), roster.male_type(b), 1);
  return q;
}

// ---------------------------------------------------------------------------
// Enumeration

std::size_t state_cap() {
  constexpr std::size_t kDefault = 10'000'000;
  if (const char* env = std::getenv("SEM_STATE_CAP")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return kDefault;
}

namespace {

// Depth-first walk over cells in row-major order, values ascending, so the
// output is lexicographically sorted.
class TableWalker {
 public:
  TableWalker(const PopulationCounts& pop, bool exact, std::size_t cap)
      : k_(pop.k()), exact_(exact), cap_(cap), rows_(pop.x().begin(), pop.x().end()),
        cols_(pop.y().begin(), pop.y().end()), cell_(k_ * k_, 0) {}

  std::vector<PairTypeMatrix> run() {
    visit(0);
    return std::move(out_);
  }

 private:
  void visit(std::size_t c) {
    if (c == k_ * k_) {
      if (exact_ && (std::any_of(rows_.begin(), rows_.end(), [](auto v) { return v != 0; }) ||
                     std::any_of(cols_.begin(), cols_.end(), [](auto v) { return v != 0; }))) {
        return;
      }
      if (out_.size() >= cap_) {
        throw Error(ErrorCode::StateSpaceTooLarge,
                    "state space exceeds the cap of " + std::to_string(cap_) + " (set SEM_STATE_CAP to raise it)");
      }
      out_.emplace_back(k_, cell_);
      return;
    }
    const std::size_t i = c / k_;
    const std::size_t j = c % k_;
    const std::int64_t hi = std::min(rows_[i], cols_[j]);
    std::int64_t lo = 0;
    if (exact_) {
      std::int64_t cols_after = 0;
      for (std::size_t jj = j + 1; jj < k_; ++jj) cols_after += cols_[jj];
      std::int64_t rows_after = 0;
      for (std::size_t ii = i + 1; ii < k_; ++ii) rows_after += rows_[ii];
      lo = std::max({std::int64_t{0}, rows_[i] - cols_after, cols_[j] - rows_after});
    }
    for (std::int64_t v = lo; v <= hi; ++v) {
      cell_[c] = v;
      rows_[i] -= v;
      cols_[j] -= v;
      visit(c + 1);
      rows_[i] += v;
      cols_[j] += v;
    }
    cell_[c] = 0;
  }

  std::size_t k_;
  bool exact_;
  std::size_t cap_;
  std::vector<std::int64_t> rows_;
  std::vector<std::int64_t> cols_;
  std::vector<std::int64_t> cell_;
  std::vector<PairTypeMatrix> out_;
};

}  // namespace

std::vector<PairTypeMatrix> enumerate_tables(const PopulationCounts& pop, std::size_t cap) {
  return TableWalker(pop, true, cap).run();
}

std::vector<PairTypeMatrix> enumerate_states(const PopulationCounts& pop, std::size_t cap) {
  return TableWalker(pop, false, cap).run();
}

PopulationCounts residual_population(const PopulationCounts& pop, const PairTypeMatrix& m) {
  if (!m.is_state_of(pop)) throw Error(ErrorCode::InvalidArgument, "table is not a state of the population");
  std::vector<std::int64_t> x(pop.k()), y(pop.k());
  for (std::size_t i = 0; i < pop.k(); ++i) {
    x[i] = pop.x(i) - m.row_sum(i);
    y[i] = pop.y(i) - m.col_sum(i);
  }
  return PopulationCounts(std::move(x), std::move(y));
}

std::vector<PairTypeMatrix> enumerate_completions(const PairTypeMatrix& m, const PopulationCounts& pop,
                                                  std::size_t cap) {
  auto rest = enumerate_tables(residual_population(pop, m), cap);
  for (auto& r : rest) r = r + m;
  return rest;
}

}  // namespace sem
