#pragma once

// Fine-balance detection, additive / multiplicative decompositions of the
// encounter-mating law, reduction to definite mating, and the 2x2
// heterogamy / panmixia / homogamy trichotomy.

#include <cstddef>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "sem/core.hpp"

namespace sem {

/// Poisson: pi_ij = alpha_bar_i + beta_bar_j.
/// Bernoulli: 1 - pi_ij = (1 - alpha_bar_i)(1 - beta_bar_j).
///
/// alpha_bar and beta_bar are indexed by the original type labels. The
/// relabelings record which types were moved to position 0 to serve as the
/// pivot row / column of the construction; they are informational and have
/// not been applied to the vectors.
struct Decomposition {
  Flavor flavor = Flavor::Poisson;
  std::vector<double> alpha_bar;
  std::vector<double> beta_bar;
  std::vector<std::size_t> female_relabel;
  std::vector<std::size_t> male_relabel;
};

/// The quadruple (i, j, i2, j2) with the largest fine-balance residual.
struct FineBalanceViolation {
  std::size_t i = 0, j = 0, i2 = 0, j2 = 0;
  double residual = 0.0;
};

/// Largest residual over all quadruples; relative to max pi for Poisson,
/// absolute on the complement products for Bernoulli.
FineBalanceViolation worst_fine_balance_violation(const EMLaw& law);

bool check_fine_balance(const EMLaw& law, double tol = 1e-9);

std::variant<Decomposition, FineBalanceViolation> decompose(const EMLaw& law, double tol = 1e-12);

/// Definite preferences plus the rates from decompose(); em_law() of the
/// result reproduces the input law. Throws NotFineBalanced.
std::pair<PreferenceMatrix, RateVector> reduce_to_definite(const EMLaw& law, double tol = 1e-12);

enum class Verdict { Heterogamous, Panmictic, Homogamous };

std::string_view to_string(Verdict verdict) noexcept;

struct Trichotomy {
  Verdict verdict = Verdict::Panmictic;
  /// Positive means homogamy for both flavors.
  double discriminant = 0.0;
};

/// k = 2 only (WrongDimension otherwise).
Trichotomy classify_2x2(const EMLaw& law, double tol = 1e-9);

}  // namespace sem
