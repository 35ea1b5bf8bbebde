#include "sem/exact.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "sem/classify.hpp"

namespace sem {

// ---- PmfOverTables -----------------------------------------------------------

double PmfOverTables::total() const {
  double s = 0.0;
  for (double p : probabilities) s += p;
  return s;
}

double PmfOverTables::probability_of(const PairTypeMatrix& m) const {
  for (std::size_t s = 0; s < support.size(); ++s) {
    if (support[s] == m) return probabilities[s];
  }
  return 0.0;
}

RealMatrix PmfOverTables::mean() const {
  if (support.empty()) return {};
  const std::size_t k = support.front().k();
  RealMatrix out(k, 0.0);
  for (std::size_t s = 0; s < support.size(); ++s) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) out(i, j) += probabilities[s] * static_cast<double>(support[s](i, j));
    }
  }
  return out;
}

namespace {

std::map<PairTypeMatrix, std::array<double, 2>> joint(const PmfOverTables& a, const PmfOverTables& b) {
  std::map<PairTypeMatrix, std::array<double, 2>> cells;
  for (std::size_t s = 0; s < a.size(); ++s) cells[a.support[s]][0] += a.probabilities[s];
  for (std::size_t s = 0; s < b.size(); ++s) cells[b.support[s]][1] += b.probabilities[s];
  return cells;
}

}  // namespace

double PmfOverTables::max_abs_difference(const PmfOverTables& other) const {
  double worst = 0.0;
  for (const auto& [m, p] : joint(*this, other)) worst = std::max(worst, std::abs(p[0] - p[1]));
  return worst;
}

double PmfOverTables::tv_distance(const PmfOverTables& other) const {
  double s = 0.0;
  for (const auto& [m, p] : joint(*this, other)) s += std::abs(p[0] - p[1]);
  return 0.5 * s;
}

// ---- first firing times ------------------------------------------------------

FirstFiringCDF FirstFiringCDF::from_rates(const RateVector& rates) {
  FirstFiringCDF cdfs;
  auto make = [&](double r) -> std::function<double(double)> {
    if (rates.flavor() == Flavor::Poisson) {
      return [r](double t) { return t <= 0.0 ? 0.0 : -std::expm1(-r * t); };
    }
    return [r](double t) { return t < 1.0 ? 0.0 : 1.0 - std::pow(1.0 - r, std::floor(t)); };
  };
  cdfs.support = rates.flavor() == Flavor::Poisson ? TimeSupport::Continuous : TimeSupport::IntegerLattice;
  for (std::size_t i = 0; i < rates.k(); ++i) {
    cdfs.female.push_back(make(rates.alpha(i)));
    cdfs.male.push_back(make(rates.beta(i)));
  }
  return cdfs;
}

void FirstFiringCDF::check_time(double t) const {
  if (std::isnan(t) || t < 0.0) throw Error(ErrorCode::InvalidArgument, "time must be nonnegative");
  if (support == TimeSupport::IntegerLattice && std::isfinite(t) && t != std::floor(t)) {
    throw Error(ErrorCode::InvalidArgument, "Bernoulli firing times live on the integers; got t = " + std::to_string(t));
  }
}

// ---- factorials --------------------------------------------------------------

double log_factorial(std::int64_t n) {
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "factorial of a negative number");
  static constexpr std::size_t kCached = 4096;
  static const std::vector<double> table = [] {
    std::vector<double> t(kCached);
    t[0] = 0.0;
    for (std::size_t i = 1; i < kCached; ++i) t[i] = t[i - 1] + std::log(static_cast<double>(i));
    return t;
  }();
  if (static_cast<std::size_t>(n) < kCached) return table[static_cast<std::size_t>(n)];
  return std::lgamma(static_cast<double>(n) + 1.0);
}

namespace {

double log_margin_prefactor(const PopulationCounts& pop) {
  double s = -log_factorial(pop.n());
  for (std::size_t i = 0; i < pop.k(); ++i) s += log_factorial(pop.x(i)) + log_factorial(pop.y(i));
  return s;
}

double log_hypergeometric(const PopulationCounts& pop, const PairTypeMatrix& m) {
  double s = log_margin_prefactor(pop);
  for (auto v : m.entries()) s -= log_factorial(v);
  return s;
}

void require_table(const PopulationCounts& pop, const PairTypeMatrix& m) {
  if (m.k() != pop.k() || !m.is_table_of(pop)) {
    throw Error(ErrorCode::NotATable, "margins of " + m.to_string() + " do not match the population");
  }
}

void require_state(const PopulationCounts& pop, const PairTypeMatrix& m) {
  if (m.k() != pop.k()) throw Error(ErrorCode::WrongDimension, "table dimension differs from the number of types");
}

// log of prod_ij C(m'_ij, m_ij) lambda^m (1 - lambda)^(m' - m); -inf when impossible.
double log_thinning(const PairTypeMatrix& full, const PairTypeMatrix& kept, const RealMatrix& lambda,
                    const RealMatrix& complement) {
  const std::size_t k = full.k();
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const auto top = full(i, j);
      const auto got = kept(i, j);
      const auto lost = top - got;
      if (got > 0) {
        if (lambda(i, j) <= 0.0) return -std::numeric_limits<double>::infinity();
        s += static_cast<double>(got) * std::log(lambda(i, j));
      }
      if (lost > 0) {
        if (complement(i, j) <= 0.0) return -std::numeric_limits<double>::infinity();
        s += static_cast<double>(lost) * std::log(complement(i, j));
      }
      s += log_factorial(top) - log_factorial(got) - log_factorial(lost);
    }
  }
  return s;
}

void check_lambda(const PopulationCounts& pop, const RealMatrix& lambda, const RealMatrix& complement) {
  if (lambda.k() != pop.k() || complement.k() != pop.k()) {
    throw Error(ErrorCode::WrongDimension, "lambda must be k x k");
  }
}

RealMatrix lambda_matrix(const FirstFiringCDF& cdfs, double t) {
  RealMatrix out(cdfs.k());
  for (std::size_t i = 0; i < cdfs.k(); ++i) {
    for (std::size_t j = 0; j < cdfs.k(); ++j) out(i, j) = lambda_ij(cdfs, i, j, t);
  }
  return out;
}

RealMatrix complement_matrix(const FirstFiringCDF& cdfs, double t) {
  RealMatrix out(cdfs.k());
  for (std::size_t i = 0; i < cdfs.k(); ++i) {
    for (std::size_t j = 0; j < cdfs.k(); ++j) out(i, j) = (1.0 - cdfs.female[i](t)) * (1.0 - cdfs.male[j](t));
  }
  return out;
}

// Time-t law for every state at once: each complete table spreads its
// hypergeometric mass over the sub-tables it can be thinned to.
PmfOverTables distribution_given_lambda(const PopulationCounts& pop, const RealMatrix& lambda,
                                        const RealMatrix& complement) {
  check_lambda(pop, lambda, complement);
  PmfOverTables out;
  out.support = enumerate_states(pop);
  out.probabilities.assign(out.support.size(), 0.0);
  std::unordered_map<PairTypeMatrix, std::size_t, PairTypeMatrixHash> index;
  for (std::size_t s = 0; s < out.support.size(); ++s) index.emplace(out.support[s], s);

  const std::size_t cells = pop.k() * pop.k();
  for (const auto& full : enumerate_tables(pop)) {
    const double log_mass = log_hypergeometric(pop, full);
    std::vector<std::int64_t> sub(cells, 0);
    while (true) {
      PairTypeMatrix kept(pop.k(), sub);
      const double lw = log_thinning(full, kept, lambda, complement);
      if (std::isfinite(lw)) out.probabilities[index.at(kept)] += std::exp(log_mass + lw);
      std::size_t c = 0;
      while (c < cells && sub[c] == full.entries()[c]) sub[c++] = 0;
      if (c == cells) break;
      ++sub[c];
    }
  }
  return out;
}

struct FineBalancedLambda {
  RealMatrix lambda;
  RealMatrix complement;
};

FineBalancedLambda finebalanced_lambda(const EMLaw& law, double t, double tol) {
  if (std::isnan(t) || t < 0.0) throw Error(ErrorCode::InvalidArgument, "time must be nonnegative");
  if (law.flavor() == Flavor::Bernoulli && std::isfinite(t) && t != std::floor(t)) {
    throw Error(ErrorCode::InvalidArgument, "Bernoulli time must be an integer; got t = " + std::to_string(t));
  }
  if (!check_fine_balance(law, tol)) {
    const auto bad = worst_fine_balance_violation(law);
    throw Error(ErrorCode::FineBalanceViolated,
                "law violates fine balance (residual " + std::to_string(bad.residual) + " at types " +
                    std::to_string(bad.i + 1) + "," + std::to_string(bad.i2 + 1) + " x " + std::to_string(bad.j + 1) +
                    "," + std::to_string(bad.j2 + 1) + ")");
  }
  const std::size_t k = law.k();
  FineBalancedLambda out{RealMatrix(k), RealMatrix(k)};
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double pi = law(i, j);
      if (law.flavor() == Flavor::Poisson) {
        out.complement(i, j) = std::exp(-pi * t);
        out.lambda(i, j) = -std::expm1(-pi * t);
      } else {
        out.complement(i, j) = std::pow(1.0 - pi, t);
        out.lambda(i, j) = 1.0 - out.complement(i, j);
      }
    }
  }
  return out;
}

}  // namespace

// ---- terminal law ------------------------------------------------------------

double terminal_pmf_definite(const PopulationCounts& pop, const PairTypeMatrix& m) {
  require_table(pop, m);
  return std::exp(log_hypergeometric(pop, m));
}

PmfOverTables terminal_distribution_definite(const PopulationCounts& pop) {
  PmfOverTables out;
  out.support = enumerate_tables(pop);
  for (const auto& m : out.support) out.probabilities.push_back(std::exp(log_hypergeometric(pop, m)));
  return out;
}

// ---- time-t law --------------------------------------------------------------

double lambda_ij(const FirstFiringCDF& cdfs, std::size_t i, std::size_t j, double t) {
  cdfs.check_time(t);
  if (i >= cdfs.k() || j >= cdfs.k()) throw Error(ErrorCode::InvalidIndex, "type index out of range");
  const double f = cdfs.female[i](t);
  const double g = cdfs.male[j](t);
  return f + g - f * g;
}

double qt_pmf_given_lambda(const PopulationCounts& pop, const RealMatrix& lambda, const RealMatrix& complement,
                           const PairTypeMatrix& m) {
  check_lambda(pop, lambda, complement);
  require_state(pop, m);
  if (!m.is_state_of(pop)) return 0.0;
  double s = 0.0;
  for (const auto& full : enumerate_completions(m, pop)) {
    const double lw = log_thinning(full, m, lambda, complement);
    if (std::isfinite(lw)) s += std::exp(log_hypergeometric(pop, full) + lw);
  }
  return s;
}

double qt_pmf_definite(const PopulationCounts& pop, const FirstFiringCDF& cdfs, double t, const PairTypeMatrix& m) {
  cdfs.check_time(t);
  return qt_pmf_given_lambda(pop, lambda_matrix(cdfs, t), complement_matrix(cdfs, t), m);
}

PmfOverTables qt_distribution_definite(const PopulationCounts& pop, const FirstFiringCDF& cdfs, double t) {
  cdfs.check_time(t);
  return distribution_given_lambda(pop, lambda_matrix(cdfs, t), complement_matrix(cdfs, t));
}

double expected_qt_definite(const PopulationCounts& pop, const FirstFiringCDF& cdfs, double t, std::size_t i,
                            std::size_t j) {
  pop.require_nonempty();
  return static_cast<double>(pop.x(i)) * static_cast<double>(pop.y(j)) * lambda_ij(cdfs, i, j, t) /
         static_cast<double>(pop.n());
}

double qt_pmf_finebalanced(const PopulationCounts& pop, const EMLaw& law, double t, const PairTypeMatrix& m,
                           double tol) {
  const auto fb = finebalanced_lambda(law, t, tol);
  return qt_pmf_given_lambda(pop, fb.lambda, fb.complement, m);
}

PmfOverTables qt_distribution_finebalanced(const PopulationCounts& pop, const EMLaw& law, double t, double tol) {
  const auto fb = finebalanced_lambda(law, t, tol);
  return distribution_given_lambda(pop, fb.lambda, fb.complement);
}

RealMatrix expected_qt_finebalanced(const PopulationCounts& pop, const EMLaw& law, double t, double tol) {
  pop.require_nonempty();
  const auto fb = finebalanced_lambda(law, t, tol);
  RealMatrix out(pop.k());
  for (std::size_t i = 0; i < pop.k(); ++i) {
    for (std::size_t j = 0; j < pop.k(); ++j) {
      out(i, j) = static_cast<double>(pop.x(i)) * static_cast<double>(pop.y(j)) * fb.lambda(i, j) /
                  static_cast<double>(pop.n());
    }
  }
  return out;
}

}  // namespace sem
