#pragma once

// Tabular output shared by the CLI subcommands.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "sem/config.hpp"
#include "sem/core.hpp"

namespace sem {

using Cell = std::variant<std::string, std::int64_t, double>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
};

/// Column names q_{i}{j}, 1-based, row-major.
std::vector<std::string> cell_columns(std::size_t k, const std::string& prefix = "q_");
std::vector<Cell> cells_of(const PairTypeMatrix& m);
std::vector<Cell> cells_of(const RealMatrix& m);

/// Reals with 17 significant digits.
std::string format_real(double v);

/// CSV: header line then one line per row. JSON: an array of objects keyed
/// by column name.
void render(std::ostream& out, const Table& table, OutputFormat format);

}  // namespace sem
