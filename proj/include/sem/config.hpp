#pragma once

// Experiment configuration: one strict JSON document per run.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sem/core.hpp"

namespace sem {

enum class OutputFormat { Csv, Json };

/// Malformed or invalid configuration; the message starts with
/// "<origin>:<line>:".
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  PopulationCounts pop;
  Flavor flavor = Flavor::Poisson;
  /// Present when the config gives P, alpha and beta.
  std::optional<PreferenceMatrix> p;
  std::optional<RateVector> rates;
  /// Given directly or derived from (P, alpha, beta).
  EMLaw law{Flavor::Poisson, RealMatrix{{1.0, 1.0}, {1.0, 1.0}}};
  /// Relative paths are resolved against the config file's directory by load_config.
  std::optional<std::string> schedule;
  std::vector<double> t;
  std::size_t runs = 1;
  std::uint64_t seed = 1;
  std::optional<double> tol;
  std::optional<std::string> out;
  OutputFormat format = OutputFormat::Csv;

  /// Preferences for simulation: the given P, or the canonical one for Pi.
  PreferenceMatrix preferences() const;
  /// Rates for simulation: the given ones, or the canonical ones for Pi.
  RateVector firing_rates() const;
};

ExperimentConfig parse_config(const std::string& text, const std::string& origin = "config");
ExperimentConfig load_config(const std::string& path);

OutputFormat parse_format(const std::string& name);

}  // namespace sem
