#include "sem/report.hpp"

#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <ostream>

namespace sem {

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw Error(ErrorCode::WrongDimension, "row width differs from the header");
  rows.push_back(std::move(row));
}

std::vector<std::string> cell_columns(std::size_t k, const std::string& prefix) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) out.push_back(prefix + std::to_string(i + 1) + std::to_string(j + 1));
  }
  return out;
}

std::vector<Cell> cells_of(const PairTypeMatrix& m) {
  std::vector<Cell> out;
  for (auto v : m.entries()) out.emplace_back(v);
  return out;
}

std::vector<Cell> cells_of(const RealMatrix& m) {
  std::vector<Cell> out;
  for (double v : m.data()) out.emplace_back(v);
  return out;
}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_cell(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return csv_field(*s);
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  return format_real(std::get<double>(c));
}

nlohmann::ordered_json json_cell(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  if (const auto* i = std::get_if<std::int64_t>(&c)) return *i;
  const double v = std::get<double>(c);
  // JSON has no infinities; keep them readable as strings.
  if (!std::isfinite(v)) return format_real(v);
  return v;
}

}  // namespace

void render(std::ostream& out, const Table& table, OutputFormat format) {
  if (format == OutputFormat::Csv) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << csv_field(table.columns[c]);
    out << '\n';
    for (const auto& row : table.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << csv_cell(row[c]);
      out << '\n';
    }
    return;
  }
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < row.size(); ++c) obj[table.columns[c]] = json_cell(row[c]);
    doc.push_back(std::move(obj));
  }
  out << doc.dump(2) << '\n';
}

}  // namespace sem
