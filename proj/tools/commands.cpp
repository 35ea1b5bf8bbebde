#include "commands.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include "sem/classify.hpp"
#include "sem/config.hpp"
#include "sem/dynamics.hpp"
#include "sem/engine.hpp"
#include "sem/exact.hpp"
#include "sem/report.hpp"
#include "sem/verify.hpp"

namespace sem::cli {

namespace {

// Thrown for problems that belong to the user's inputs rather than the
// computation (bad schedule file, flag outside its domain).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Request {
  std::string config;
  std::uint64_t seed = 0;
  std::size_t runs = 0;
  std::vector<double> t;
  std::string out;
  std::string format;
  double tol = 0.0;
  std::string what;
  bool empirical_pmf = false;
  bool alternative = false;
  bool males_first = false;
};

void add_common(CLI::App& cmd, Request& req) {
  cmd.add_option("--config", req.config, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd.add_option("--seed", req.seed, "master seed");
  cmd.add_option("--runs", req.runs, "number of replications")->check(CLI::PositiveNumber);
  cmd.add_option("--t", req.t, "time points (comma separated)")->delimiter(',');
  cmd.add_option("--out", req.out, "output file (default: stdout)");
  cmd.add_option("--format", req.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  cmd.add_option("--tol", req.tol, "fine-balance / classification tolerance")->check(CLI::PositiveNumber);
}

ExperimentConfig resolve(const Request& req, const CLI::App& cmd) {
  const auto given = [&](const char* name) { return cmd.get_option(name)->count() > 0; };
  ExperimentConfig cfg = load_config(req.config);
  if (given("--seed")) cfg.seed = req.seed;
  if (given("--runs")) cfg.runs = req.runs;
  if (given("--t")) {
    for (double v : req.t) {
      if (!(v >= 0.0)) throw InputError("--t: times must be nonnegative");
    }
    cfg.t = req.t;
  }
  if (given("--out")) cfg.out = req.out;
  if (given("--format")) cfg.format = parse_format(req.format);
  if (given("--tol")) cfg.tol = req.tol;
  return cfg;
}

double tolerance(const ExperimentConfig& cfg) { return cfg.tol.value_or(kFineBalanceTolerance); }

std::vector<double> times_or(const ExperimentConfig& cfg, double fallback) {
  return cfg.t.empty() ? std::vector<double>{fallback} : cfg.t;
}

FiringProcessSpec firing_spec(const ExperimentConfig& cfg) {
  if (cfg.schedule) {
    try {
      return FiringProcessSpec::explicit_schedule(load_schedule(*cfg.schedule, static_cast<std::size_t>(cfg.pop.n())));
    } catch (const Error& e) {
      throw InputError(e.what());
    }
  }
  const auto rates = cfg.firing_rates();
  return rates.flavor() == Flavor::Poisson ? FiringProcessSpec::poisson(rates) : FiringProcessSpec::bernoulli(rates);
}

ModelInputs model(const ExperimentConfig& cfg) {
  return {cfg.pop, AnimalRoster::canonical(cfg.pop), cfg.preferences(), firing_spec(cfg)};
}

bool definite_with_rates(const ExperimentConfig& cfg) { return cfg.p && cfg.p->is_definite() && cfg.rates; }

Table pmf_table(std::size_t k, const PmfOverTables& pmf, std::optional<double> t = std::nullopt) {
  Table table;
  if (t) table.columns.push_back("t");
  for (auto& c : cell_columns(k)) table.columns.push_back(c);
  table.columns.push_back("probability");
  for (std::size_t s = 0; s < pmf.size(); ++s) {
    std::vector<Cell> row;
    if (t) row.emplace_back(*t);
    for (auto& c : cells_of(pmf.support[s])) row.push_back(c);
    row.emplace_back(pmf.probabilities[s]);
    table.add_row(std::move(row));
  }
  return table;
}

void append(Table& into, Table&& more) {
  if (into.columns.empty()) into.columns = more.columns;
  for (auto& r : more.rows) into.rows.push_back(std::move(r));
}

// ---- simulate ----------------------------------------------------------------

Table cmd_simulate(const ExperimentConfig& cfg, const Request& req) {
  const auto inputs = model(cfg);
  McOptions options;
  options.simulator = req.alternative ? Simulator::RandomMatching : Simulator::TwoStage;
  options.order = req.males_first ? FiringOrder::MalesFirst : FiringOrder::FemalesFirst;
  const std::size_t k = cfg.pop.k();
  if (req.empirical_pmf) {
    const auto emp = empirical_terminal_pmf(inputs, cfg.runs, cfg.seed, options);
    Table table;
    table.columns = cell_columns(k);
    table.columns.insert(table.columns.end(), {"count", "probability"});
    for (std::size_t s = 0; s < emp.pmf.size(); ++s) {
      auto row = cells_of(emp.pmf.support[s]);
      row.emplace_back(static_cast<std::int64_t>(emp.counts[s]));
      row.emplace_back(emp.pmf.probabilities[s]);
      table.add_row(std::move(row));
    }
    return table;
  }
  Table table;
  table.columns = {"run", "seed", "T", "rounds", "jumps"};
  for (auto& c : cell_columns(k)) table.columns.push_back(c);
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    const auto rec = simulate_replication(inputs, cfg.seed, r, options, true);
    std::vector<Cell> row{static_cast<std::int64_t>(r), std::to_string(derive_seed(cfg.seed, r)), rec.terminal_time,
                          static_cast<std::int64_t>(rec.rounds_elapsed), static_cast<std::int64_t>(rec.jumps.size())};
    for (auto& c : cells_of(rec.terminal_pattern)) row.push_back(c);
    table.add_row(std::move(row));
  }
  return table;
}

// ---- exact -------------------------------------------------------------------

Table cmd_exact(const ExperimentConfig& cfg, const Request& req) {
  const std::string what = req.what.empty() ? (cfg.t.empty() ? "terminal" : "qt") : req.what;
  const std::size_t k = cfg.pop.k();
  const bool definite = definite_with_rates(cfg);
  if (!definite && !check_fine_balance(cfg.law, tolerance(cfg))) {
    throw Error(ErrorCode::FineBalanceViolated,
                "closed forms need definite mating or a fine-balanced law; try 'dynamics' instead");
  }
  if (what == "terminal") return pmf_table(k, terminal_distribution_definite(cfg.pop));

  Table table;
  for (double t : times_or(cfg, 1.0)) {
    if (what == "qt") {
      const auto pmf = definite ? qt_distribution_definite(cfg.pop, FirstFiringCDF::from_rates(*cfg.rates), t)
                                : qt_distribution_finebalanced(cfg.pop, cfg.law, t, tolerance(cfg));
      append(table, pmf_table(k, pmf, t));
    } else {
      RealMatrix mean(k);
      if (definite) {
        const auto cdfs = FirstFiringCDF::from_rates(*cfg.rates);
        for (std::size_t i = 0; i < k; ++i) {
          for (std::size_t j = 0; j < k; ++j) mean(i, j) = expected_qt_definite(cfg.pop, cdfs, t, i, j);
        }
      } else {
        mean = expected_qt_finebalanced(cfg.pop, cfg.law, t, tolerance(cfg));
      }
      Table one;
      one.columns = {"t"};
      for (auto& c : cell_columns(k)) one.columns.push_back(c);
      std::vector<Cell> row{t};
      for (auto& c : cells_of(mean)) row.push_back(c);
      one.add_row(std::move(row));
      append(table, std::move(one));
    }
  }
  return table;
}

// ---- dynamics ----------------------------------------------------------------

Table transitions_table(const ChainMatrix& chain, const std::string& value) {
  Table table;
  table.columns = {"from", "to", value};
  const auto& e = chain.entries();
  for (std::size_t s = 0; s < chain.size(); ++s) {
    for (std::size_t p = e.row_ptr[s]; p < e.row_ptr[s + 1]; ++p) {
      table.add_row({chain.states()[s].to_string(), chain.states()[static_cast<std::size_t>(e.col[p])].to_string(),
                     e.val[p]});
    }
  }
  return table;
}

Table cmd_dynamics(const ExperimentConfig& cfg, const Request& req) {
  const std::string what = req.what.empty() ? "expectation" : req.what;
  const std::size_t k = cfg.pop.k();
  if (what == "generator") return transitions_table(generator_poisson(cfg.pop, cfg.law), "rate");
  if (what == "kernel") return transitions_table(kernel_bernoulli(cfg.pop, cfg.law), "probability");
  if (what == "terminal") return pmf_table(k, terminal_pmf_absorbing(cfg.pop, cfg.law));
  if (what == "transient") {
    Table table;
    for (double t : times_or(cfg, 1.0)) append(table, pmf_table(k, transient_distribution(cfg.pop, cfg.law, t), t));
    return table;
  }
  Table table;
  table.columns = cell_columns(k);
  table.add_row(cells_of(terminal_expectation(cfg.pop, cfg.law)));
  return table;
}

// ---- classify ----------------------------------------------------------------

Table cmd_classify(const ExperimentConfig& cfg, const Request&) {
  const double tol = tolerance(cfg);
  Table table;
  table.columns = {"quantity", "value"};
  table.add_row({std::string("flavor"), std::string(to_string(cfg.law.flavor()))});
  const auto worst = worst_fine_balance_violation(cfg.law);
  const bool balanced = worst.residual <= tol;
  table.add_row({std::string("fine_balanced"), std::string(balanced ? "true" : "false")});
  table.add_row({std::string("worst_residual"), worst.residual});
  if (!balanced) {
    table.add_row({std::string("worst_quadruple"), std::to_string(worst.i + 1) + std::to_string(worst.j + 1) + "/" +
                                                       std::to_string(worst.i2 + 1) + std::to_string(worst.j2 + 1)});
  }
  if (balanced) {
    const auto result = decompose(cfg.law, std::max(tol, 1e-12));
    if (const auto* d = std::get_if<Decomposition>(&result)) {
      for (std::size_t i = 0; i < d->alpha_bar.size(); ++i) {
        table.add_row({"alpha_bar_" + std::to_string(i + 1), d->alpha_bar[i]});
      }
      for (std::size_t j = 0; j < d->beta_bar.size(); ++j) {
        table.add_row({"beta_bar_" + std::to_string(j + 1), d->beta_bar[j]});
      }
    }
  }
  if (cfg.law.k() == 2) {
    const auto tri = classify_2x2(cfg.law, tol);
    table.add_row({std::string("verdict"), std::string(to_string(tri.verdict))});
    table.add_row({std::string("discriminant"), tri.discriminant});
  } else {
    table.add_row({std::string("verdict"), std::string("undefined for k != 2")});
  }
  return table;
}

// ---- verify ------------------------------------------------------------------

struct Check {
  std::string name;
  double statistic = 0.0;
  std::int64_t dof = 0;
  double p_value = 1.0;
  double tv = 0.0;
  double threshold = 0.0;
  bool chi_square = false;
  bool passed = false;
};

Table cmd_verify(const ExperimentConfig& cfg, const Request&, bool& all_passed) {
  constexpr double kSignificance = 1e-3;
  constexpr double kExactTolerance = 1e-10;
  const auto inputs = model(cfg);
  const auto& pop = cfg.pop;
  std::vector<Check> checks;

  auto chi = [&](std::string name, const GofReport& rep) {
    Check c{std::move(name), rep.statistic, static_cast<std::int64_t>(rep.degrees_of_freedom), rep.p_value,
            rep.tv_distance};
    c.chi_square = true;
    checks.push_back(std::move(c));
  };
  auto exact = [&](std::string name, double difference, double threshold) {
    Check c{std::move(name), difference};
    c.threshold = threshold;
    c.passed = difference <= threshold;
    checks.push_back(std::move(c));
  };

  const auto emp = empirical_terminal_pmf(inputs, cfg.runs, cfg.seed);
  if (cfg.schedule) {
    if (!cfg.preferences().is_definite()) {
      throw InputError("verification under an explicit schedule needs definite mating (P all ones)");
    }
    chi("engine_vs_hypergeometric", gof_compare(emp, terminal_distribution_definite(pop)));
  } else {
    const auto absorbing = terminal_pmf_absorbing(pop, cfg.law);
    chi("engine_vs_absorbing_chain", gof_compare(emp, absorbing));
    chi("engine_vs_random_matching",
        gof_two_sample(emp, empirical_terminal_pmf(inputs, cfg.runs, derive_seed(cfg.seed, 1),
                                                   {Simulator::RandomMatching})));
    chi("firing_order_invariance",
        gof_two_sample(emp, empirical_terminal_pmf(inputs, cfg.runs, derive_seed(cfg.seed, 2),
                                                   {Simulator::TwoStage, FiringOrder::MalesFirst})));
    const auto u = terminal_expectation(pop, cfg.law);
    const auto mean = absorbing.mean();
    double worst = 0.0;
    for (std::size_t c = 0; c < u.data().size(); ++c) worst = std::max(worst, std::abs(u.data()[c] - mean.data()[c]));
    exact("recursion_vs_absorbing_mean", worst, kExactTolerance);
    if (check_fine_balance(cfg.law, tolerance(cfg))) {
      double gap = 0.0;
      for (std::size_t i = 0; i < pop.k(); ++i) {
        for (std::size_t j = 0; j < pop.k(); ++j) {
          const double panmictic = static_cast<double>(pop.x(i) * pop.y(j)) / static_cast<double>(pop.n());
          gap = std::max(gap, std::abs(u(i, j) - panmictic));
        }
      }
      exact("fine_balance_panmixia", gap, kExactTolerance);
      for (double t : times_or(cfg, 1.0)) {
        const double step = cfg.law.flavor() == Flavor::Bernoulli ? std::floor(t) : t;
        const auto closed = qt_distribution_finebalanced(pop, cfg.law, step, tolerance(cfg));
        exact("transient_vs_closed_form_t=" + format_real(step),
              closed.max_abs_difference(transient_distribution(pop, cfg.law, step)), 1e-8);
      }
    }
  }
  if (static_cast<std::size_t>(pop.n()) <= kOracleMaxAnimals) {
    exact("permutation_oracle_vs_hypergeometric",
          permutation_oracle_definite(pop, inputs.roster).max_abs_difference(terminal_distribution_definite(pop)),
          1e-12);
  }

  std::size_t tests = 0;
  for (const auto& c : checks) tests += c.chi_square ? 1 : 0;
  const double level = kSignificance / static_cast<double>(std::max<std::size_t>(tests, 1));
  Table table;
  table.columns = {"check", "statistic", "dof", "p_value", "tv_distance", "threshold", "result"};
  all_passed = true;
  for (auto& c : checks) {
    if (c.chi_square) {
      c.threshold = level;
      c.passed = c.p_value > level;
    }
    all_passed = all_passed && c.passed;
    table.add_row({c.name, c.statistic, c.dof, c.p_value, c.tv, c.threshold, std::string(c.passed ? "PASS" : "FAIL")});
  }
  return table;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic encounter-mating model: simulation, exact laws, Markov chains, classification"};
  app.require_subcommand(1);
  Request req;
  auto* simulate = app.add_subcommand("simulate", "run the mating process");
  add_common(*simulate, req);
  simulate->add_flag("--empirical-pmf", req.empirical_pmf, "report the empirical terminal pmf instead of runs");
  simulate->add_flag("--alternative", req.alternative, "use the random-matching representation");
  simulate->add_flag("--males-first", req.males_first, "simultaneous males choose before females");
  auto* exact = app.add_subcommand("exact", "closed-form laws under definite mating or fine balance");
  add_common(*exact, req);
  exact->add_option("--what", req.what, "terminal, qt or expected")
      ->check(CLI::IsMember({"terminal", "qt", "expected"}));
  auto* dynamics = app.add_subcommand("dynamics", "Markov-chain solvers for any law");
  add_common(*dynamics, req);
  dynamics->add_option("--what", req.what, "generator, kernel, transient, expectation or terminal")
      ->check(CLI::IsMember({"generator", "kernel", "transient", "expectation", "terminal"}));
  auto* classify = app.add_subcommand("classify", "fine balance, decomposition and 2x2 verdict");
  add_common(*classify, req);
  auto* verify = app.add_subcommand("verify", "cross-check simulation, exact laws and oracles");
  add_common(*verify, req);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  ExperimentConfig cfg;
  try {
    cfg = resolve(req, *app.get_subcommands().front());
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  Table table;
  bool passed = true;
  try {
    if (simulate->parsed()) {
      table = cmd_simulate(cfg, req);
    } else if (exact->parsed()) {
      table = cmd_exact(cfg, req);
    } else if (dynamics->parsed()) {
      table = cmd_dynamics(cfg, req);
    } else if (classify->parsed()) {
      table = cmd_classify(cfg, req);
    } else {
      table = cmd_verify(cfg, req, passed);
    }
  } catch (const InputError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }

  if (cfg.out) {
    std::ofstream file(*cfg.out);
    if (!file) {
      err << "error: cannot write " << *cfg.out << '\n';
      return kExitRuntime;
    }
    render(file, table, cfg.format);
  } else {
    render(out, table, cfg.format);
  }
  if (!passed) {
    err << "verify: at least one check failed\n";
    return kExitCheckFailed;
  }
  return kExitOk;
}

}  // namespace sem::cli
