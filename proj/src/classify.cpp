#include "sem/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sem {

namespace {

double quadruple_residual(const EMLaw& law, std::size_t i, std::size_t j, std::size_t i2, std::size_t j2) {
  if (law.flavor() == Flavor::Poisson) {
    return std::abs(law(i, j) + law(i2, j2) - law(i, j2) - law(i2, j)) / law.max_entry();
  }
  return std::abs((1.0 - law(i, j)) * (1.0 - law(i2, j2)) - (1.0 - law(i, j2)) * (1.0 - law(i2, j)));
}

std::vector<std::size_t> swap_to_front(std::size_t k, std::size_t pivot) {
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::swap(perm[0], perm[pivot]);
  return perm;
}

}  // namespace

FineBalanceViolation worst_fine_balance_violation(const EMLaw& law) {
  const std::size_t k = law.k();
  FineBalanceViolation worst;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t i2 = i + 1; i2 < k; ++i2) {
      for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t j2 = j + 1; j2 < k; ++j2) {
          const double r = quadruple_residual(law, i, j, i2, j2);
          if (r > worst.residual) worst = {i, j, i2, j2, r};
        }
      }
    }
  }
  return worst;
}

bool check_fine_balance(const EMLaw& law, double tol) {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  return worst_fine_balance_violation(law).residual <= tol;
}

std::variant<Decomposition, FineBalanceViolation> decompose(const EMLaw& law, double tol) {
  const std::size_t k = law.k();
  Decomposition d;
  d.flavor = law.flavor();
  d.alpha_bar.resize(k);
  d.beta_bar.resize(k);

  if (law.flavor() == Flavor::Poisson) {
    // Pivot on the smallest entry of row 0 so every beta_bar is nonnegative.
    std::size_t c = 0;
    for (std::size_t j = 1; j < k; ++j) {
      if (law(0, j) < law(0, c)) c = j;
    }
    d.female_relabel = swap_to_front(k, 0);
    d.male_relabel = swap_to_front(k, c);
    for (std::size_t i = 0; i < k; ++i) d.alpha_bar[i] = law(i, c);
    for (std::size_t j = 0; j < k; ++j) d.beta_bar[j] = law(0, j) - law(0, c);
  } else {
    const auto& pi = law.matrix().data();
    if (std::all_of(pi.begin(), pi.end(), [](double v) { return v == 1.0; })) {
      d.alpha_bar.assign(k, 1.0);
      d.beta_bar.assign(k, 1.0);
      d.female_relabel = swap_to_front(k, 0);
      d.male_relabel = swap_to_front(k, 0);
      return d;
    }
    // Pivot row: the first with an entry below 1; pivot column: its minimum.
    std::size_t r = 0;
    while (*std::min_element(pi.begin() + r * k, pi.begin() + (r + 1) * k) >= 1.0) ++r;
    std::size_t c = 0;
    for (std::size_t j = 1; j < k; ++j) {
      if (law(r, j) < law(r, c)) c = j;
    }
    d.female_relabel = swap_to_front(k, r);
    d.male_relabel = swap_to_front(k, c);
    for (std::size_t i = 0; i < k; ++i) d.alpha_bar[i] = law(i, c);
    for (std::size_t j = 0; j < k; ++j) {
      d.beta_bar[j] = std::clamp(1.0 - (1.0 - law(r, j)) / (1.0 - law(r, c)), 0.0, 1.0);
    }
  }

  // The construction only uses the pivot row and column; accept it only if
  // it reproduces every entry.
  const double scale = law.flavor() == Flavor::Poisson ? law.max_entry() : 1.0;
  FineBalanceViolation worst;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double rebuilt = law.flavor() == Flavor::Poisson
                                 ? d.alpha_bar[i] + d.beta_bar[j]
                                 : 1.0 - (1.0 - d.alpha_bar[i]) * (1.0 - d.beta_bar[j]);
      const double err = std::abs(rebuilt - law(i, j)) / scale;
      if (err > tol && err > worst.residual) {
        worst = worst_fine_balance_violation(law);
        worst.residual = std::max(worst.residual, err);
      }
    }
  }
  if (worst.residual > 0.0) return worst;
  return d;
}

std::pair<PreferenceMatrix, RateVector> reduce_to_definite(const EMLaw& law, double tol) {
  auto result = decompose(law, tol);
  if (const auto* bad = std::get_if<FineBalanceViolation>(&result)) {
    throw Error(ErrorCode::NotFineBalanced,
                "law is not fine balanced (worst quadruple " + std::to_string(bad->i + 1) + std::to_string(bad->j + 1) +
                    "/" + std::to_string(bad->i2 + 1) + std::to_string(bad->j2 + 1) +
                    ", residual " + std::to_string(bad->residual) + ")");
  }
  auto& d = std::get<Decomposition>(result);
  return {PreferenceMatrix::ones(law.k()), RateVector(law.flavor(), std::move(d.alpha_bar), std::move(d.beta_bar))};
}

std::string_view to_string(Verdict verdict) noexcept {
  switch (verdict) {
    case Verdict::Heterogamous: return "heterogamous";
    case Verdict::Panmictic: return "panmictic";
    case Verdict::Homogamous: return "homogamous";
  }
  return "unknown";
}

Trichotomy classify_2x2(const EMLaw& law, double tol) {
  if (law.k() != 2) throw Error(ErrorCode::WrongDimension, "the trichotomy is defined for two types only");
  Trichotomy out;
  double band = tol;
  if (law.flavor() == Flavor::Poisson) {
    out.discriminant = (law(0, 0) + law(1, 1)) - (law(0, 1) + law(1, 0));
    band = tol * law.max_entry();
  } else {
    out.discriminant = (1.0 - law(0, 1)) * (1.0 - law(1, 0)) - (1.0 - law(0, 0)) * (1.0 - law(1, 1));
  }
  if (out.discriminant > band) {
    out.verdict = Verdict::Homogamous;
  } else if (out.discriminant < -band) {
    out.verdict = Verdict::Heterogamous;
  } else {
    out.verdict = Verdict::Panmictic;
  }
  return out;
}

}  // namespace sem
