#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "osumcs/estimator.hpp"
#include "osumcs/scenarios.hpp"

namespace osumcs {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class OutputFormat { Csv, Json };

// Which methods get the augmentation step in a sweep. On applies it to every
// method (isolating the sampling rule); OsumcsOnly compares the augmented
// estimator against plain Horvitz-Thompson baselines.
enum class AugmentMode { On, Off, OsumcsOnly };

struct ExperimentConfig {
  // simulate mode
  std::string scenario;
  std::size_t N = 20000;  // desk-scale default; --full-scale uses 1e5

  // realdata mode
  std::string csv_path;
  std::size_t train_size = 19000;

  std::vector<Method> methods = {Method::Osumcs, Method::Osumc, Method::Uniform};
  std::vector<std::size_t> n_grid = {1000, 1500, 2000};
  std::size_t n0 = 500;
  int reps = 50;
  std::uint64_t seed = 42;
  AugmentMode augment = AugmentMode::On;
  std::optional<GlmFamily> family;  // override of the scenario default
  SolverOptions solver;
  ForestParams forest;
  int threads = 0;  // 0 keeps the OpenMP default

  std::string out_path;
  OutputFormat format = OutputFormat::Csv;
};

struct ResultRow {
  std::string method;
  std::size_t n = 0;
  int reps_used = 0;
  int reps_diverged = 0;
  double mse = 0.0;
  double log_mse = 0.0;
  std::optional<double> rel_est_se;
  std::optional<double> rel_pred_se;
};

// Measurement-constraint audit accumulated over a sweep: every response
// fetch is checked against the union of the pilot and the drawn subsample.
struct AccessAudit {
  std::size_t fetches = 0;
  std::size_t out_of_scope = 0;
};

double empirical_mse(const std::vector<Vec>& estimates, const Vec& beta0);

// Per-replication estimates, kept so paired and jointly-converged comparisons
// can be formed; run_sweep is the summarized view of the same computation.
struct SweepDetail {
  std::vector<Method> methods;
  std::vector<std::size_t> n_grid;
  Vec beta0;
  // beta_A by [method][budget][rep]; nullopt marks a diverged replication
  std::vector<std::vector<std::vector<std::optional<Vec>>>> beta;
  // realdata mode keeps per-rep metrics (the reference beta0 varies per split)
  std::vector<std::vector<std::vector<std::optional<double>>>> sq_err;
  std::vector<std::vector<std::vector<std::optional<double>>>> rel_est;
  std::vector<std::vector<std::vector<std::optional<double>>>> rel_pred;
  bool realdata = false;
};

SweepDetail run_sweep_detail(const ExperimentConfig& config,
                             AccessAudit* audit = nullptr);
std::vector<ResultRow> summarize(const SweepDetail& detail);
std::vector<ResultRow> run_sweep(const ExperimentConfig& config,
                                 AccessAudit* audit = nullptr);

SweepDetail real_data_detail(const ExperimentConfig& config,
                             AccessAudit* audit = nullptr);
std::vector<ResultRow> real_data_mode(const ExperimentConfig& config,
                                      AccessAudit* audit = nullptr);

std::string results_to_csv(const std::vector<ResultRow>& rows);
std::string results_to_json(const std::vector<ResultRow>& rows);
void emit_results(const std::vector<ResultRow>& rows, OutputFormat format,
                  const std::string& path);

void validate_config(const ExperimentConfig& config, bool realdata);

}  // namespace osumcs
