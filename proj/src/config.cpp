#include "sem/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <regex>
#include <set>
#include <sstream>

namespace sem {

namespace {

using nlohmann::json;

const std::set<std::string> kFields = {"k",  "x",  "y", "flavor", "P",   "alpha", "beta", "Pi",
                                       "schedule", "t", "runs", "seed", "tol", "out",   "format"};

class Reader {
 public:
  Reader(const std::string& text, std::string origin) : text_(text), origin_(std::move(origin)) {}

  std::size_t line_of_offset(std::size_t offset) const {
    offset = std::min(offset, text_.size());
    return 1 + static_cast<std::size_t>(std::count(text_.begin(), text_.begin() + static_cast<long>(offset), '\n'));
  }

  std::size_t line_of_key(const std::string& key) const {
    const std::regex pattern("\"" + key + "\"\\s*:");
    std::smatch m;
    if (std::regex_search(text_, m, pattern)) return line_of_offset(static_cast<std::size_t>(m.position(0)));
    return 1;
  }

  [[noreturn]] void fail(std::size_t line, const std::string& what) const {
    throw ConfigError(origin_ + ":" + std::to_string(line) + ": " + what);
  }
  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    fail(line_of_key(key), "\"" + key + "\": " + what);
  }

 private:
  const std::string& text_;
  std::string origin_;
};

std::vector<std::int64_t> counts(const Reader& r, const json& doc, const std::string& key) {
  if (!doc.contains(key)) r.fail(1, "missing required field \"" + key + "\"");
  const json& v = doc.at(key);
  if (!v.is_array()) r.fail(key, "expected an array of nonnegative integers");
  std::vector<std::int64_t> out;
  for (const auto& e : v) {
    if (!e.is_number_integer() || e.get<std::int64_t>() < 0) r.fail(key, "expected an array of nonnegative integers");
    out.push_back(e.get<std::int64_t>());
  }
  return out;
}

std::vector<double> reals(const Reader& r, const json& v, const std::string& key) {
  if (!v.is_array()) r.fail(key, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) r.fail(key, "expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

RealMatrix matrix(const Reader& r, const json& doc, const std::string& key, std::size_t k) {
  const json& v = doc.at(key);
  if (!v.is_array() || v.size() != k) r.fail(key, "expected a " + std::to_string(k) + " x " + std::to_string(k) + " matrix");
  RealMatrix m(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto row = reals(r, v[i], key);
    if (row.size() != k) r.fail(key, "expected a " + std::to_string(k) + " x " + std::to_string(k) + " matrix");
    for (std::size_t j = 0; j < k; ++j) m(i, j) = row[j];
  }
  return m;
}

}  // namespace

OutputFormat parse_format(const std::string& name) {
  if (name == "csv") return OutputFormat::Csv;
  if (name == "json") return OutputFormat::Json;
  throw ConfigError("unknown output format '" + name + "' (expected csv or json)");
}

PreferenceMatrix ExperimentConfig::preferences() const { return p ? *p : canonical_parameters(law).first; }

RateVector ExperimentConfig::firing_rates() const { return rates ? *rates : canonical_parameters(law).second; }

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  const Reader r(text, origin);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    r.fail(r.line_of_offset(e.byte == 0 ? 0 : e.byte - 1), std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) r.fail(1, "top level must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!kFields.count(key)) r.fail(key, "unknown field");
  }

  ExperimentConfig cfg;
  auto x = counts(r, doc, "x");
  auto y = counts(r, doc, "y");
  if (x.size() != y.size()) r.fail("y", "x and y must have the same length");
  if (doc.contains("k")) {
    if (!doc["k"].is_number_integer() || doc["k"].get<std::int64_t>() != static_cast<std::int64_t>(x.size())) {
      r.fail("k", "must equal the length of x and y");
    }
  }
  try {
    cfg.pop = validate_population(x, y);
  } catch (const Error& e) {
    r.fail(e.code() == ErrorCode::UnequalTotals ? "y" : "x", e.what());
  }
  const std::size_t k = cfg.pop.k();

  if (!doc.contains("flavor") || !doc["flavor"].is_string()) r.fail(r.line_of_key("flavor"), "\"flavor\" must be \"poisson\" or \"bernoulli\"");
  const auto flavor = doc["flavor"].get<std::string>();
  if (flavor == "poisson") {
    cfg.flavor = Flavor::Poisson;
  } else if (flavor == "bernoulli") {
    cfg.flavor = Flavor::Bernoulli;
  } else {
    r.fail("flavor", "must be \"poisson\" or \"bernoulli\"");
  }

  const bool has_pi = doc.contains("Pi");
  const bool has_p = doc.contains("P") || doc.contains("alpha") || doc.contains("beta");
  if (has_pi == has_p) r.fail(1, "give either \"Pi\" or all of \"P\", \"alpha\", \"beta\"");
  if (has_pi) {
    try {
      cfg.law = EMLaw(cfg.flavor, matrix(r, doc, "Pi", k));
    } catch (const Error& e) {
      r.fail("Pi", e.what());
    }
  } else {
    for (const char* key : {"P", "alpha", "beta"}) {
      if (!doc.contains(key)) r.fail(1, std::string("missing required field \"") + key + "\"");
    }
    try {
      cfg.p = PreferenceMatrix(matrix(r, doc, "P", k));
    } catch (const Error& e) {
      r.fail("P", e.what());
    }
    auto alpha = reals(r, doc["alpha"], "alpha");
    auto beta = reals(r, doc["beta"], "beta");
    if (alpha.size() != k) r.fail("alpha", "expected " + std::to_string(k) + " entries");
    if (beta.size() != k) r.fail("beta", "expected " + std::to_string(k) + " entries");
    try {
      cfg.rates = RateVector(cfg.flavor, std::move(alpha), std::move(beta));
    } catch (const Error& e) {
      r.fail("alpha", e.what());
    }
    cfg.law = em_law(*cfg.p, *cfg.rates);
  }

  if (doc.contains("schedule")) {
    if (!doc["schedule"].is_string()) r.fail("schedule", "expected a file path");
    cfg.schedule = doc["schedule"].get<std::string>();
  }
  if (doc.contains("t")) {
    const json& t = doc["t"];
    cfg.t = t.is_number() ? std::vector<double>{t.get<double>()} : reals(r, t, "t");
    for (double v : cfg.t) {
      if (!(v >= 0.0)) r.fail("t", "times must be nonnegative");
    }
  }
  if (doc.contains("runs")) {
    if (!doc["runs"].is_number_integer() || doc["runs"].get<std::int64_t>() < 1) r.fail("runs", "must be a positive integer");
    cfg.runs = doc["runs"].get<std::size_t>();
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) r.fail("seed", "must be a nonnegative integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("tol")) {
    if (!doc["tol"].is_number() || !(doc["tol"].get<double>() > 0.0)) r.fail("tol", "must be a positive number");
    cfg.tol = doc["tol"].get<double>();
  }
  if (doc.contains("out")) {
    if (!doc["out"].is_string()) r.fail("out", "expected a file path");
    cfg.out = doc["out"].get<std::string>();
  }
  if (doc.contains("format")) {
    if (!doc["format"].is_string()) r.fail("format", "must be \"csv\" or \"json\"");
    try {
      cfg.format = parse_format(doc["format"].get<std::string>());
    } catch (const ConfigError& e) {
      r.fail("format", e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream text;
  text << in.rdbuf();
  auto cfg = parse_config(text.str(), path);
  // Relative schedule paths are taken from the config's directory.
  if (cfg.schedule && std::filesystem::path(*cfg.schedule).is_relative()) {
    cfg.schedule = (std::filesystem::path(path).parent_path() / *cfg.schedule).string();
  }
  return cfg;
}

}  // namespace sem
