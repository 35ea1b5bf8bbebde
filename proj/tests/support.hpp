#pragma once

// Generators and brute-force references shared by the test binaries.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "sem/core.hpp"

namespace sem::testing {

inline std::vector<std::int64_t> random_composition(std::size_t k, std::int64_t n, std::mt19937_64& rng) {
  std::vector<std::int64_t> out(k, 0);
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);
  for (std::int64_t a = 0; a < n; ++a) ++out[pick(rng)];
  return out;
}

inline PopulationCounts random_population(std::size_t k, std::int64_t n, std::mt19937_64& rng) {
  return PopulationCounts(random_composition(k, n, rng), random_composition(k, n, rng));
}

/// Two types with every count positive.
inline PopulationCounts random_mixed_population(std::int64_t n, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::int64_t> part(1, n - 1);
  const auto x1 = part(rng);
  const auto y1 = part(rng);
  return PopulationCounts({x1, n - x1}, {y1, n - y1});
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline EMLaw random_law(Flavor flavor, std::size_t k, std::mt19937_64& rng) {
  RealMatrix pi(k);
  for (double& v : pi.data()) v = flavor == Flavor::Poisson ? uniform(rng, 0.2, 5.0) : uniform(rng, 0.05, 1.0);
  return EMLaw(flavor, pi);
}

inline EMLaw random_fine_balanced_law(Flavor flavor, std::size_t k, std::mt19937_64& rng) {
  std::vector<double> a(k), b(k);
  for (auto& v : a) v = flavor == Flavor::Poisson ? uniform(rng, 0.1, 3.0) : uniform(rng, 0.05, 0.95);
  for (auto& v : b) v = flavor == Flavor::Poisson ? uniform(rng, 0.0, 3.0) : uniform(rng, 0.0, 0.95);
  RealMatrix pi(k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      pi(i, j) = flavor == Flavor::Poisson ? a[i] + b[j] : 1.0 - (1.0 - a[i]) * (1.0 - b[j]);
    }
  }
  return EMLaw(flavor, pi);
}

/// Every k x k matrix with entries in [0, n], filtered by margins: a
/// reference independent of the library's depth-first walker.
inline std::vector<PairTypeMatrix> brute_force_tables(const PopulationCounts& pop, bool exact) {
  const std::size_t k = pop.k();
  const std::size_t cells = k * k;
  std::vector<std::int64_t> m(cells, 0);
  std::vector<PairTypeMatrix> out;
  while (true) {
    PairTypeMatrix t(k, m);
    if (exact ? t.is_table_of(pop) : t.is_state_of(pop)) out.push_back(t);
    std::size_t c = 0;
    while (c < cells && m[c] == pop.n()) m[c++] = 0;
    if (c == cells) break;
    ++m[c];
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Dense matrix exponential by scaling and squaring of a Taylor series;
/// returns row vector p0 * exp(G t).
inline std::vector<double> dense_transient(const std::vector<std::vector<double>>& g, std::size_t start, double t) {
  const std::size_t s = g.size();
  double norm = 0.0;
  for (const auto& row : g) {
    double r = 0.0;
    for (double v : row) r += std::abs(v);
    norm = std::max(norm, r);
  }
  int squarings = 0;
  double scale = t;
  while (norm * scale > 0.5) {
    scale /= 2.0;
    ++squarings;
  }
  using Mat = std::vector<std::vector<double>>;
  auto mul = [s](const Mat& a, const Mat& b) {
    Mat c(s, std::vector<double>(s, 0.0));
    for (std::size_t i = 0; i < s; ++i) {
      for (std::size_t l = 0; l < s; ++l) {
        if (a[i][l] == 0.0) continue;
        for (std::size_t j = 0; j < s; ++j) c[i][j] += a[i][l] * b[l][j];
      }
    }
    return c;
  };
  Mat e(s, std::vector<double>(s, 0.0));
  Mat term(s, std::vector<double>(s, 0.0));
  for (std::size_t i = 0; i < s; ++i) e[i][i] = term[i][i] = 1.0;
  Mat a = g;
  for (auto& row : a) {
    for (double& v : row) v *= scale;
  }
  for (int n = 1; n < 30; ++n) {
    term = mul(term, a);
    for (auto& row : term) {
      for (double& v : row) v /= n;
    }
    for (std::size_t i = 0; i < s; ++i) {
      for (std::size_t j = 0; j < s; ++j) e[i][j] += term[i][j];
    }
  }
  for (int q = 0; q < squarings; ++q) e = mul(e, e);
  return e[start];
}

}  // namespace sem::testing
