#pragma once

#include <cstddef>
#include <vector>

#include "sem/core.hpp"

namespace sem {

/// A distribution over pair-type tables.
struct PmfOverTables {
  std::vector<PairTypeMatrix> support;
  std::vector<double> probabilities;

  std::size_t size() const noexcept { return support.size(); }
  double total() const;
  /// Zero for tables outside the support.
  double probability_of(const PairTypeMatrix& m) const;
  /// Entrywise expectation of the table.
  RealMatrix mean() const;
  /// Largest |p - q| over the union of supports.
  double max_abs_difference(const PmfOverTables& other) const;
  double tv_distance(const PmfOverTables& other) const;
};

}  // namespace sem
