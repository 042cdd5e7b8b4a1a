#include "osumcs/harness.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "osumcs/csv.hpp"
#include "osumcs/parallel.hpp"

namespace osumcs {

double empirical_mse(const std::vector<Vec>& estimates, const Vec& beta0) {
  if (estimates.empty())
    throw std::invalid_argument("empirical_mse: no estimates");
  double acc = 0.0;
  for (const Vec& b : estimates) acc += (b - beta0).squaredNorm();
  return acc / static_cast<double>(estimates.size());
}

void validate_config(const ExperimentConfig& config, bool realdata) {
  if (config.methods.empty()) throw ConfigError("no methods selected");
  if (config.n_grid.empty()) throw ConfigError("empty budget grid (--n-grid)");
  if (config.reps < 1) throw ConfigError("reps must be >= 1");
  const auto [lo, hi] =
      std::minmax_element(config.n_grid.begin(), config.n_grid.end());
  if (config.n0 >= *lo)
    throw ConfigError("pilot size n0 must be smaller than every budget in the grid");
  if (realdata) {
    if (config.csv_path.empty()) throw ConfigError("realdata mode needs --csv");
    if (*hi > config.train_size)
      throw ConfigError("budgets exceed the training-set size");
  } else {
    if (config.scenario.empty()) throw ConfigError("simulate mode needs --scenario");
    ScenarioSpec::by_name(config.scenario);  // throws on unknown names
    if (*hi > config.N) throw ConfigError("budgets exceed the population size N");
  }
}

namespace {

struct RepOutcome {
  // [method][budget]
  std::vector<std::vector<std::optional<Vec>>> beta;
  std::vector<std::vector<std::optional<double>>> sq_err;
  std::vector<std::vector<std::optional<double>>> rel_est;
  std::vector<std::vector<std::optional<double>>> rel_pred;

  RepOutcome(std::size_t n_methods, std::size_t n_budgets) {
    beta.assign(n_methods, std::vector<std::optional<Vec>>(n_budgets));
    sq_err.assign(n_methods, std::vector<std::optional<double>>(n_budgets));
    rel_est = sq_err;
    rel_pred = sq_err;
  }
};

std::uint64_t draw_seed_for(std::uint64_t base, int rep, std::size_t method_idx,
                            std::size_t n) {
  return derive_seed(base, Stream::Draw,
                     {static_cast<std::uint64_t>(rep), method_idx, n});
}

std::vector<std::uint8_t> bernoulli_mask(std::size_t N, std::size_t n0,
                                         std::uint64_t pilot_seed) {
  Rng rng(derive_seed(pilot_seed, Stream::PilotMask));
  std::vector<std::uint8_t> mask(N, 0);
  const double p0 = static_cast<double>(n0) / static_cast<double>(N);
  for (auto& m : mask) m = rng.bernoulli(p0) ? 1 : 0;
  return mask;
}

// Run every (method, budget) cell of one replication on a shared dataset and
// a shared pilot; returns nullopt estimates for diverged cells.
RepOutcome run_rep_cells(const Mat& X, const Vec& S, ResponseSource& source,
                         const ExperimentConfig& config, GlmFamily family_y,
                         int rep, std::vector<std::uint8_t>* allowed) {
  const std::size_t n_methods = config.methods.size();
  const std::size_t n_budgets = config.n_grid.size();
  RepOutcome out(n_methods, n_budgets);

  const bool needs_forest =
      std::find(config.methods.begin(), config.methods.end(), Method::Osumcs) !=
      config.methods.end();
  const std::uint64_t pilot_seed =
      derive_seed(config.seed, Stream::Pilot, {static_cast<std::uint64_t>(rep)});

  // the mask is drawn here (same derivation pilot_stage uses) so the audit
  // knows the allowed units even when the pilot fit fails
  const auto pilot_mask = bernoulli_mask(static_cast<std::size_t>(X.rows()),
                                         config.n0, pilot_seed);
  if (allowed)
    for (std::size_t i = 0; i < pilot_mask.size(); ++i)
      (*allowed)[i] |= pilot_mask[i];

  PilotResult pilot;
  try {
    pilot = pilot_stage_with_mask(X, S, source, pilot_mask, family_y,
                                  GlmFamily::Linear,
                                  derive_seed(pilot_seed, Stream::Forest),
                                  config.solver, config.forest, needs_forest);
  } catch (const std::exception&) {
    return out;  // every cell of this replication is diverged
  }

  for (std::size_t mi = 0; mi < n_methods; ++mi) {
    for (std::size_t ni = 0; ni < n_budgets; ++ni) {
      PipelineConfig pc;
      pc.n0 = config.n0;
      pc.n = config.n_grid[ni];
      pc.method = config.methods[mi];
      pc.family_y = family_y;
      pc.family_s = GlmFamily::Linear;
      pc.augment = config.augment == AugmentMode::On ||
                   (config.augment == AugmentMode::OsumcsOnly &&
                    config.methods[mi] == Method::Osumcs);
      pc.solver = config.solver;
      pc.forest = config.forest;
      pc.pilot = &pilot;
      pc.draw_seed = draw_seed_for(config.seed, rep, mi, config.n_grid[ni]);
      AugmentedEstimate est = run_pipeline(X, S, source, pc);
      if (allowed && !est.diagnostics.sample_mask.empty())
        for (std::size_t i = 0; i < est.diagnostics.sample_mask.size(); ++i)
          (*allowed)[i] |= est.diagnostics.sample_mask[i];
      if (est.diagnostics.ok) out.beta[mi][ni] = std::move(est.beta_A);
    }
  }
  return out;
}

void audit_rep(AccessAudit* audit, const RecordingResponse& recorder,
               const std::vector<std::uint8_t>& allowed) {
  if (!audit) return;
  std::size_t bad = 0;
  for (std::size_t i : recorder.accessed)
    if (!allowed[i]) ++bad;
#pragma omp critical(osumcs_audit)
  {
    audit->fetches += recorder.accessed.size();
    audit->out_of_scope += bad;
  }
}

}  // namespace

SweepDetail run_sweep_detail(const ExperimentConfig& config, AccessAudit* audit) {
  validate_config(config, false);
  par::set_threads(config.threads);

  ScenarioSpec spec = ScenarioSpec::by_name(config.scenario, config.N);
  if (config.family) {
    spec.family = *config.family;
    spec.surrogate = SurrogateParams::defaults(*config.family);
    // keep the family's default dimension and coefficient vector
    const ScenarioSpec ref = ScenarioSpec::by_name(config.scenario, config.N);
    if (*config.family != ref.family) {
      const double b0 = *config.family == GlmFamily::Poisson ? 0.1 : 0.5;
      spec.beta0 = Vec::Constant(spec.p, b0);
    }
  }

  SweepDetail detail;
  detail.methods = config.methods;
  detail.n_grid = config.n_grid;
  detail.beta0 = spec.beta0;
  const std::size_t n_methods = config.methods.size();
  const std::size_t n_budgets = config.n_grid.size();
  detail.beta.assign(
      n_methods, std::vector<std::vector<std::optional<Vec>>>(
                     n_budgets, std::vector<std::optional<Vec>>(config.reps)));
  detail.sq_err.assign(n_methods,
                       std::vector<std::vector<std::optional<double>>>(
                           n_budgets, std::vector<std::optional<double>>(
                                          config.reps)));
  detail.rel_est = detail.sq_err;
  detail.rel_pred = detail.sq_err;

  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(config.reps),
                                   RepOutcome(n_methods, n_budgets));
  par::parallel_for_dynamic(config.reps, [&](std::ptrdiff_t rep) {
    const std::uint64_t data_seed = derive_seed(
        config.seed, Stream::Data, {static_cast<std::uint64_t>(rep)});
    const Dataset ds = make_dataset(spec, data_seed);
    VectorResponse plain(ds.Y);
    if (audit) {
      RecordingResponse recorder(plain);
      std::vector<std::uint8_t> allowed(static_cast<std::size_t>(ds.X.rows()), 0);
      outcomes[rep] = run_rep_cells(ds.X, ds.S, recorder, config, spec.family,
                                    static_cast<int>(rep), &allowed);
      audit_rep(audit, recorder, allowed);
    } else {
      outcomes[rep] = run_rep_cells(ds.X, ds.S, plain, config, spec.family,
                                    static_cast<int>(rep), nullptr);
    }
  });

  for (std::size_t mi = 0; mi < n_methods; ++mi)
    for (std::size_t ni = 0; ni < n_budgets; ++ni)
      for (int rep = 0; rep < config.reps; ++rep)
        detail.beta[mi][ni][static_cast<std::size_t>(rep)] =
            std::move(outcomes[static_cast<std::size_t>(rep)].beta[mi][ni]);
  return detail;
}

std::vector<ResultRow> summarize(const SweepDetail& detail) {
  std::vector<ResultRow> rows;
  for (std::size_t mi = 0; mi < detail.methods.size(); ++mi) {
    for (std::size_t ni = 0; ni < detail.n_grid.size(); ++ni) {
      ResultRow row;
      row.method = method_name(detail.methods[mi]);
      row.n = detail.n_grid[ni];
      std::vector<Vec> converged;
      double sq_err_sum = 0.0, rel_est_sum = 0.0, rel_pred_sum = 0.0;
      for (std::size_t rep = 0; rep < detail.beta[mi][ni].size(); ++rep) {
        const auto& b = detail.beta[mi][ni][rep];
        if (!b) {
          ++row.reps_diverged;
          continue;
        }
        ++row.reps_used;
        if (detail.realdata) {
          sq_err_sum += *detail.sq_err[mi][ni][rep];
          rel_est_sum += *detail.rel_est[mi][ni][rep];
          rel_pred_sum += *detail.rel_pred[mi][ni][rep];
        } else {
          converged.push_back(*b);
        }
      }
      if (row.reps_used == 0) {
        row.mse = std::numeric_limits<double>::quiet_NaN();
        row.log_mse = std::numeric_limits<double>::quiet_NaN();
      } else if (detail.realdata) {
        row.mse = sq_err_sum / row.reps_used;
        row.log_mse = std::log(row.mse);
        row.rel_est_se = rel_est_sum / row.reps_used;
        row.rel_pred_se = rel_pred_sum / row.reps_used;
      } else {
        row.mse = empirical_mse(converged, detail.beta0);
        row.log_mse = std::log(row.mse);
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<ResultRow> run_sweep(const ExperimentConfig& config,
                                 AccessAudit* audit) {
  return summarize(run_sweep_detail(config, audit));
}

SweepDetail real_data_detail(const ExperimentConfig& config, AccessAudit* audit) {
  validate_config(config, true);
  par::set_threads(config.threads);
  const CsvTable table = read_numeric_csv(config.csv_path);
  for (const auto& name : table.dropped_columns)
    std::fprintf(stderr, "warning: dropping constant column '%s'\n",
                 name.c_str());
  const auto M = static_cast<std::size_t>(table.X.rows());
  if (config.train_size >= M)
    throw ConfigError("train size must leave a nonempty test set");

  const std::size_t n_methods = config.methods.size();
  const std::size_t n_budgets = config.n_grid.size();
  SweepDetail detail;
  detail.methods = config.methods;
  detail.n_grid = config.n_grid;
  detail.realdata = true;
  detail.beta0 = Vec::Zero(table.X.cols());  // unused: beta0 varies per split
  detail.beta.assign(
      n_methods, std::vector<std::vector<std::optional<Vec>>>(
                     n_budgets, std::vector<std::optional<Vec>>(config.reps)));
  detail.sq_err.assign(n_methods,
                       std::vector<std::vector<std::optional<double>>>(
                           n_budgets, std::vector<std::optional<double>>(
                                          config.reps)));
  detail.rel_est = detail.sq_err;
  detail.rel_pred = detail.sq_err;

  const bool needs_forest =
      std::find(config.methods.begin(), config.methods.end(), Method::Osumcs) !=
      config.methods.end();

  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(config.reps),
                                   RepOutcome(n_methods, n_budgets));
  par::parallel_for_dynamic(config.reps, [&](std::ptrdiff_t rep) {
    RepOutcome out(n_methods, n_budgets);

    // random train/test split
    std::vector<std::size_t> order(M);
    std::iota(order.begin(), order.end(), 0);
    Rng split_rng(derive_seed(config.seed, Stream::Split,
                              {static_cast<std::uint64_t>(rep)}));
    for (std::size_t i = M; i > 1; --i)
      std::swap(order[i - 1], order[split_rng.uniform_index(i)]);
    const auto train_n = static_cast<Eigen::Index>(config.train_size);
    Mat Xtr(train_n, table.X.cols());
    Vec Ytr(train_n);
    Mat Xte(static_cast<Eigen::Index>(M) - train_n, table.X.cols());
    Vec Yte(Xte.rows());
    for (Eigen::Index i = 0; i < train_n; ++i) {
      Xtr.row(i) = table.X.row(static_cast<Eigen::Index>(order[i]));
      Ytr(i) = table.y(static_cast<Eigen::Index>(order[i]));
    }
    for (Eigen::Index i = 0; i < Xte.rows(); ++i) {
      Xte.row(i) = table.X.row(static_cast<Eigen::Index>(order[train_n + i]));
      Yte(i) = table.y(static_cast<Eigen::Index>(order[train_n + i]));
    }

    // reference coefficients: the full-training-set least-squares fit
    const FitResult ols =
        fit_glm(GlmFamily::Linear, Xtr, Ytr, Vec::Ones(train_n),
                Vec::Zero(Xtr.cols()), config.solver);
    if (!ols.converged) {
      outcomes[rep] = std::move(out);
      return;
    }
    const Vec beta0 = ols.beta;

    VectorResponse plain(Ytr);
    RecordingResponse recorder(plain);
    ResponseSource& source = audit ? static_cast<ResponseSource&>(recorder)
                                   : static_cast<ResponseSource&>(plain);
    std::vector<std::uint8_t> allowed(config.train_size, 0);
    auto finish = [&]() {
      if (audit) audit_rep(audit, recorder, allowed);
      outcomes[rep] = std::move(out);
    };

    // pilot rows drive both the synthetic surrogate and the pipeline pilot
    const std::uint64_t pilot_seed = derive_seed(
        config.seed, Stream::Pilot, {static_cast<std::uint64_t>(rep)});
    const auto pilot_mask =
        bernoulli_mask(config.train_size, config.n0, pilot_seed);
    for (std::size_t i = 0; i < pilot_mask.size(); ++i)
      allowed[i] |= pilot_mask[i];

    std::size_t pilot_m = 0;
    for (auto m : pilot_mask) pilot_m += m;
    if (pilot_m < static_cast<std::size_t>(Xtr.cols())) {
      finish();
      return;
    }
    Mat Xp(static_cast<Eigen::Index>(pilot_m), Xtr.cols());
    Vec Yp(Xp.rows());
    Eigen::Index k = 0;
    for (std::size_t i = 0; i < pilot_mask.size(); ++i) {
      if (!pilot_mask[i]) continue;
      Xp.row(k) = Xtr.row(static_cast<Eigen::Index>(i));
      Yp(k) = source.fetch(i);
      ++k;
    }
    const FitResult pilot_ols =
        fit_glm(GlmFamily::Linear, Xp, Yp, Vec::Ones(Xp.rows()),
                Vec::Zero(Xp.cols()), config.solver);
    if (!pilot_ols.converged) {
      finish();
      return;
    }

    // synthetic surrogate: 3 X gamma0 + standard normal noise
    Rng noise_rng(derive_seed(config.seed, Stream::Surrogate,
                              {static_cast<std::uint64_t>(rep)}));
    Vec Str = 3.0 * (Xtr * pilot_ols.beta);
    for (Eigen::Index i = 0; i < Str.size(); ++i) Str(i) += noise_rng.normal();

    PilotResult pilot;
    try {
      pilot = pilot_stage_with_mask(Xtr, Str, source, pilot_mask,
                                    GlmFamily::Linear, GlmFamily::Linear,
                                    derive_seed(pilot_seed, Stream::Forest),
                                    config.solver, config.forest, needs_forest);
    } catch (const std::exception&) {
      finish();
      return;
    }

    const Vec test_resid_ref = Xte * beta0 - Yte;
    const double denom_pred = test_resid_ref.squaredNorm();
    const double denom_est = beta0.squaredNorm();
    for (std::size_t mi = 0; mi < n_methods; ++mi) {
      for (std::size_t ni = 0; ni < n_budgets; ++ni) {
        PipelineConfig pc;
        pc.n0 = config.n0;
        pc.n = config.n_grid[ni];
        pc.method = config.methods[mi];
        pc.family_y = GlmFamily::Linear;
        pc.family_s = GlmFamily::Linear;
        pc.augment = config.augment == AugmentMode::On ||
                     (config.augment == AugmentMode::OsumcsOnly &&
                      config.methods[mi] == Method::Osumcs);
        pc.solver = config.solver;
        pc.forest = config.forest;
        pc.pilot = &pilot;
        pc.draw_seed = draw_seed_for(config.seed, static_cast<int>(rep), mi,
                                     config.n_grid[ni]);
        AugmentedEstimate est = run_pipeline(Xtr, Str, source, pc);
        if (!est.diagnostics.sample_mask.empty())
          for (std::size_t i = 0; i < est.diagnostics.sample_mask.size(); ++i)
            allowed[i] |= est.diagnostics.sample_mask[i];
        if (!est.diagnostics.ok) continue;
        const double sq = (est.beta_A - beta0).squaredNorm();
        out.beta[mi][ni] = std::move(est.beta_A);
        out.sq_err[mi][ni] = sq;
        out.rel_est[mi][ni] = sq / denom_est;
        out.rel_pred[mi][ni] =
            (Xte * *out.beta[mi][ni] - Yte).squaredNorm() / denom_pred;
      }
    }
    finish();
  });

  for (std::size_t mi = 0; mi < n_methods; ++mi)
    for (std::size_t ni = 0; ni < n_budgets; ++ni)
      for (int rep = 0; rep < config.reps; ++rep) {
        auto& o = outcomes[static_cast<std::size_t>(rep)];
        detail.beta[mi][ni][static_cast<std::size_t>(rep)] =
            std::move(o.beta[mi][ni]);
        detail.sq_err[mi][ni][static_cast<std::size_t>(rep)] =
            o.sq_err[mi][ni];
        detail.rel_est[mi][ni][static_cast<std::size_t>(rep)] =
            o.rel_est[mi][ni];
        detail.rel_pred[mi][ni][static_cast<std::size_t>(rep)] =
            o.rel_pred[mi][ni];
      }
  return detail;
}

std::vector<ResultRow> real_data_mode(const ExperimentConfig& config,
                                      AccessAudit* audit) {
  return summarize(real_data_detail(config, audit));
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string results_to_csv(const std::vector<ResultRow>& rows) {
  const bool rel = !rows.empty() && rows.front().rel_est_se.has_value();
  std::string out = "method,n,reps_used,reps_diverged,mse,log_mse";
  if (rel) out += ",rel_est_se,rel_pred_se";
  out += '\n';
  for (const auto& r : rows) {
    out += r.method;
    out += ',' + std::to_string(r.n);
    out += ',' + std::to_string(r.reps_used);
    out += ',' + std::to_string(r.reps_diverged);
    out += ',' + fmt17(r.mse);
    out += ',' + fmt17(r.log_mse);
    if (rel) {
      out += ',' + fmt17(r.rel_est_se.value_or(
                       std::numeric_limits<double>::quiet_NaN()));
      out += ',' + fmt17(r.rel_pred_se.value_or(
                       std::numeric_limits<double>::quiet_NaN()));
    }
    out += '\n';
  }
  return out;
}

std::string results_to_json(const std::vector<ResultRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json rec{{"method", r.method},
                       {"n", r.n},
                       {"reps_used", r.reps_used},
                       {"reps_diverged", r.reps_diverged},
                       {"mse", r.mse},
                       {"log_mse", r.log_mse}};
    if (r.rel_est_se) rec["rel_est_se"] = *r.rel_est_se;
    if (r.rel_pred_se) rec["rel_pred_se"] = *r.rel_pred_se;
    arr.push_back(std::move(rec));
  }
  return arr.dump(2) + "\n";
}

void emit_results(const std::vector<ResultRow>& rows, OutputFormat format,
                  const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << (format == OutputFormat::Csv ? results_to_csv(rows)
                                      : results_to_json(rows));
  if (!out) throw std::runtime_error("failed writing output file: " + path);
}

}  // namespace osumcs
