#include <cstdio>
#include <exception>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "osumcs/harness.hpp"

namespace {

using osumcs::ExperimentConfig;

std::vector<osumcs::Method> parse_methods(const std::string& csv) {
  std::vector<osumcs::Method> methods;
  std::string token;
  std::stringstream ss(csv);
  while (std::getline(ss, token, ','))
    if (!token.empty()) methods.push_back(osumcs::method_from_name(token));
  return methods;
}

std::vector<std::size_t> parse_grid(const std::string& csv) {
  std::vector<std::size_t> grid;
  std::string token;
  std::stringstream ss(csv);
  while (std::getline(ss, token, ','))
    if (!token.empty()) grid.push_back(std::stoull(token));
  return grid;
}

osumcs::GlmFamily parse_family(const std::string& name) {
  if (name == "linear") return osumcs::GlmFamily::Linear;
  if (name == "logistic") return osumcs::GlmFamily::Logistic;
  if (name == "poisson") return osumcs::GlmFamily::Poisson;
  throw osumcs::ConfigError("unknown family: " + name);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Response-free optimal subsampling for GLMs with surrogate "
               "variables: simulation sweeps and real-data evaluation"};
  app.require_subcommand(1);

  std::string scenario, family_str, methods_str = "osumcs,osumc,unif";
  std::string grid_str = "1000,1500,2000", out_path = "results.csv";
  std::string format_str = "csv", augment_str = "on", csv_path;
  ExperimentConfig config;
  bool full_scale = false;

  auto* sim = app.add_subcommand("simulate", "Monte-Carlo sweep on a synthetic scenario");
  sim->add_option("--scenario", scenario, "scenario name (e.g. mzNormal, GA, PoisT3)")
      ->required();
  sim->add_option("--family", family_str, "response family: linear|logistic|poisson");
  sim->add_option("--methods", methods_str, "comma list of osumcs,osumc,unif");
  auto* sim_grid = sim->add_option("--n-grid", grid_str, "comma list of budgets");
  sim->add_option("--n0", config.n0, "pilot size");
  auto* sim_reps = sim->add_option("--reps", config.reps, "replications");
  auto* sim_N = sim->add_option("--N", config.N, "population size");
  sim->add_option("--seed", config.seed, "base seed");
  sim->add_option("--out", out_path, "output file");
  sim->add_option("--format", format_str, "csv|json");
  sim->add_option("--augment", augment_str, "on|off|osumcs-only");
  sim->add_flag("--full-scale", full_scale, "full-scale defaults (N=100000, n 1000..2000 by 100)");
  sim->add_option("--threads", config.threads, "OpenMP worker count (0 = default)");

  auto* real = app.add_subcommand("realdata", "sweep on a numeric CSV (response in the last column)");
  real->add_option("--csv", csv_path, "input CSV path")->required();
  real->add_option("--train-size", config.train_size, "training rows per split");
  real->add_option("--n-grid", grid_str, "comma list of budgets");
  real->add_option("--n0", config.n0, "pilot size");
  real->add_option("--reps", config.reps, "replications");
  real->add_option("--seed", config.seed, "base seed");
  real->add_option("--methods", methods_str, "comma list of osumcs,osumc,unif");
  real->add_option("--out", out_path, "output file");
  real->add_option("--format", format_str, "csv|json");
  real->add_option("--augment", augment_str, "on|off|osumcs-only");
  real->add_option("--threads", config.threads, "OpenMP worker count (0 = default)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (full_scale) {
      if (sim_N->count() == 0) config.N = 100000;
      if (sim_reps->count() == 0) config.reps = 50;
      if (sim_grid->count() == 0)
        grid_str = "1000,1100,1200,1300,1400,1500,1600,1700,1800,1900,2000";
    }
    config.scenario = scenario;
    config.csv_path = csv_path;
    config.methods = parse_methods(methods_str);
    config.n_grid = parse_grid(grid_str);
    config.out_path = out_path;
    if (!family_str.empty()) config.family = parse_family(family_str);
    if (format_str == "csv")
      config.format = osumcs::OutputFormat::Csv;
    else if (format_str == "json")
      config.format = osumcs::OutputFormat::Json;
    else
      throw osumcs::ConfigError("unknown format: " + format_str);
    if (augment_str == "on")
      config.augment = osumcs::AugmentMode::On;
    else if (augment_str == "off")
      config.augment = osumcs::AugmentMode::Off;
    else if (augment_str == "osumcs-only")
      config.augment = osumcs::AugmentMode::OsumcsOnly;
    else
      throw osumcs::ConfigError("--augment takes on|off|osumcs-only");

    const bool realdata = real->parsed();
    osumcs::validate_config(config, realdata);

    const std::vector<osumcs::ResultRow> rows =
        realdata ? osumcs::real_data_mode(config) : osumcs::run_sweep(config);
    osumcs::emit_results(rows, config.format, config.out_path);
    std::printf("wrote %zu rows to %s\n", rows.size(), config.out_path.c_str());
    return 0;
  } catch (const osumcs::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
