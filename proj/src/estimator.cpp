#include "osumcs/estimator.hpp"

#include <cmath>
#include <limits>

namespace osumcs {

std::string method_name(Method m) {
  switch (m) {
    case Method::Osumcs: return "osumcs";
    case Method::Osumc: return "osumc";
    case Method::Uniform: return "unif";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  if (name == "osumcs") return Method::Osumcs;
  if (name == "osumc") return Method::Osumc;
  if (name == "unif" || name == "uniform") return Method::Uniform;
  throw std::invalid_argument("unknown method: " + name);
}

namespace {

// gather rows where mask == 1, fetching their responses
struct Subsample {
  Mat X;
  Vec y;
  Vec s;
  Vec pi;  // empty unless a plan was given
  std::vector<std::size_t> index;
};

Subsample gather(const Mat& X, const Vec& S, ResponseSource& y,
                 const std::vector<std::uint8_t>& mask, const Vec* pi) {
  Subsample sub;
  std::size_t m = 0;
  for (auto v : mask) m += v;
  sub.X.resize(m, X.cols());
  sub.y.resize(m);
  sub.s.resize(m);
  if (pi) sub.pi.resize(m);
  sub.index.reserve(m);
  std::size_t k = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const auto ii = static_cast<Eigen::Index>(i);
    sub.X.row(k) = X.row(ii);
    sub.y(k) = y.fetch(i);
    sub.s(k) = S(ii);
    if (pi) sub.pi(k) = (*pi)(ii);
    sub.index.push_back(i);
    ++k;
  }
  return sub;
}

double condition_number(const Mat& A) {
  if (A.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> eig(A);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace

PilotResult pilot_stage(const Mat& X, const Vec& S, ResponseSource& y,
                        std::size_t n0, GlmFamily family_y, GlmFamily family_s,
                        std::uint64_t seed, const SolverOptions& solver,
                        const ForestParams& forest, bool fit_moments) {
  const auto N = static_cast<std::size_t>(X.rows());
  if (n0 == 0 || n0 > N)
    throw std::invalid_argument("pilot_stage: need 0 < n0 <= N");
  Rng rng(derive_seed(seed, Stream::PilotMask));
  std::vector<std::uint8_t> mask(N, 0);
  const double p0 = static_cast<double>(n0) / static_cast<double>(N);
  for (std::size_t i = 0; i < N; ++i) mask[i] = rng.bernoulli(p0) ? 1 : 0;
  return pilot_stage_with_mask(X, S, y, mask, family_y, family_s,
                               derive_seed(seed, Stream::Forest), solver,
                               forest, fit_moments);
}

PilotResult pilot_stage_with_mask(const Mat& X, const Vec& S, ResponseSource& y,
                                  const std::vector<std::uint8_t>& pilot_mask,
                                  GlmFamily family_y, GlmFamily family_s,
                                  std::uint64_t forest_seed,
                                  const SolverOptions& solver,
                                  const ForestParams& forest,
                                  bool fit_moments) {
  if (pilot_mask.size() != static_cast<std::size_t>(X.rows()))
    throw std::invalid_argument("pilot_stage: mask length mismatch");
  Subsample pilot = gather(X, S, y, pilot_mask, nullptr);
  const auto m = static_cast<std::size_t>(pilot.X.rows());
  if (m < static_cast<std::size_t>(X.cols()))
    throw PilotError("pilot_stage: pilot smaller than the parameter dimension; "
                     "increase n0");

  const Vec ones = Vec::Ones(pilot.X.rows());
  const Vec zero = Vec::Zero(X.cols());
  FitResult fb = fit_glm(family_y, pilot.X, pilot.y, ones, zero, solver);
  FitResult fg = fit_glm(family_s, pilot.X, pilot.s, ones, zero, solver);
  if (!fb.converged || !fg.converged)
    throw PilotError("pilot_stage: pilot GLM did not converge; increase n0");

  PilotResult res;
  res.beta_pilot = fb.beta;
  res.gamma_pilot = fg.beta;
  res.J_pilot = fisher_info(family_y, fb.beta, pilot.X, ones);
  res.pilot_mask = pilot_mask;
  res.pilot_m = m;
  res.beta_converged = fb.converged;
  res.gamma_converged = fg.converged;
  if (fit_moments) {
    const Vec targets = residual_targets(family_y, fb.beta, pilot.X, pilot.y);
    Mat feats(pilot.X.rows(), pilot.X.cols() + 1);
    feats.col(0) = pilot.s;
    feats.rightCols(pilot.X.cols()) = pilot.X;
    res.moments = fit_forest(feats, targets, forest, forest_seed);
    res.has_moments = true;
  }
  return res;
}

std::pair<Mat, Mat> sigma_blocks(GlmFamily family_y, GlmFamily family_s,
                                 const Vec& beta_n, const Vec& gamma_n,
                                 const Vec& gamma_N, const Mat& X, const Vec& S,
                                 const Vec& y_sampled, const SamplingPlan& plan) {
  const Eigen::Index p = X.cols();
  const double N = static_cast<double>(X.rows());

  Mat M12 = Mat::Zero(p, p);
  Mat M22 = Mat::Zero(p, p);
  Vec w_beta = Vec::Zero(X.rows());  // R_i / pi_i on the sampled rows
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (!plan.indicators[static_cast<std::size_t>(i)]) continue;
    const double inv_pi = 1.0 / plan.pi(i);
    const double kernel = inv_pi * (inv_pi - 1.0);
    const double resid_y = y_sampled(k) - glm_mean(family_y, beta_n.dot(X.row(i)));
    const double resid_s = S(i) - glm_mean(family_s, gamma_n.dot(X.row(i)));
    const Vec x = X.row(i).transpose();
    M12 += (kernel * resid_y * resid_s) * (x * x.transpose());
    M22 += (kernel * resid_s * resid_s) * (x * x.transpose());
    w_beta(i) = inv_pi;
    ++k;
  }
  if (k != y_sampled.size())
    throw std::invalid_argument("sigma_blocks: y_sampled does not match plan");
  M12 /= N * N;
  M22 /= N * N;

  const Mat J_beta = fisher_info(family_y, beta_n, X, w_beta);
  const Mat J_gamma = fisher_info(family_s, gamma_N, X, Vec::Ones(X.rows()));
  const Mat Jb_inv = psd_pinv(J_beta);
  const Mat Jg_inv = psd_pinv(J_gamma);

  Mat sigma12 = Jb_inv * M12 * Jg_inv;
  Mat sigma22 = Jg_inv * M22 * Jg_inv;
  sigma22 = 0.5 * (sigma22 + sigma22.transpose()).eval();  // exact symmetry
  return {std::move(sigma12), std::move(sigma22)};
}

Mat sigma11_block(GlmFamily family_y, const Vec& beta_n, const Mat& X,
                  const Vec& y_sampled, const SamplingPlan& plan) {
  const Eigen::Index p = X.cols();
  const double N = static_cast<double>(X.rows());
  Mat M11 = Mat::Zero(p, p);
  Vec w_beta = Vec::Zero(X.rows());
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (!plan.indicators[static_cast<std::size_t>(i)]) continue;
    const double inv_pi = 1.0 / plan.pi(i);
    const double resid_y = y_sampled(k) - glm_mean(family_y, beta_n.dot(X.row(i)));
    const Vec x = X.row(i).transpose();
    M11 += (inv_pi * inv_pi * resid_y * resid_y) * (x * x.transpose());
    w_beta(i) = inv_pi;
    ++k;
  }
  M11 /= N * N;
  const Mat Jb_inv = psd_pinv(fisher_info(family_y, beta_n, X, w_beta));
  Mat sigma11 = Jb_inv * M11 * Jb_inv;
  sigma11 = 0.5 * (sigma11 + sigma11.transpose()).eval();
  return sigma11;
}

Mat psd_pinv(const Mat& A, double rtol) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(A);
  const Vec& vals = eig.eigenvalues();
  const double cutoff = rtol * vals.cwiseAbs().maxCoeff();
  Vec inv = Vec::Zero(vals.size());
  for (Eigen::Index i = 0; i < vals.size(); ++i)
    if (vals(i) > cutoff && vals(i) > 0.0) inv(i) = 1.0 / vals(i);
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

Vec augment(const Vec& beta_n, const Vec& gamma_n, const Vec& gamma_N,
            const Mat& sigma12, const Mat& sigma22, double pinv_rtol) {
  if (sigma12.isZero(0.0)) return beta_n;  // no correction channel
  return beta_n - sigma12 * (psd_pinv(sigma22, pinv_rtol) * (gamma_n - gamma_N));
}

AugmentedEstimate run_pipeline(const Mat& X, const Vec& S, ResponseSource& y,
                               const PipelineConfig& config) {
  const auto N = static_cast<std::size_t>(X.rows());
  const Eigen::Index p = X.cols();
  AugmentedEstimate est;
  auto& diag = est.diagnostics;

  // pilot stage (possibly shared across methods and budgets)
  PilotResult local_pilot;
  const PilotResult* pilot = config.pilot;
  if (!pilot) {
    try {
      local_pilot = pilot_stage(X, S, y, config.n0, config.family_y,
                                config.family_s, config.pilot_seed,
                                config.solver, config.forest,
                                config.method == Method::Osumcs);
    } catch (const std::exception& e) {
      diag.error = e.what();
      return est;
    }
    pilot = &local_pilot;
  }
  diag.pilot_beta_converged = pilot->beta_converged;
  diag.pilot_gamma_converged = pilot->gamma_converged;
  diag.pilot_m = pilot->pilot_m;
  diag.pilot_mask = pilot->pilot_mask;
  diag.j_pilot_cond = condition_number(pilot->J_pilot);

  // selection scores
  Vec scores;
  try {
    if (config.score_override) {
      scores = *config.score_override;
    } else {
      switch (config.method) {
        case Method::Osumcs: {
          if (!pilot->has_moments)
            throw std::logic_error("run_pipeline: pilot lacks a moment model");
          const Vec m = predict_root_moment(pilot->moments, S, X);
          scores = osumcs_scores(m, pilot->J_pilot, X);
          break;
        }
        case Method::Osumc:
          scores = osumc_scores(config.family_y, pilot->beta_pilot,
                                pilot->J_pilot, X);
          break;
        case Method::Uniform:
          scores = Vec::Ones(static_cast<Eigen::Index>(N));
          break;
      }
    }
    Rng draw_rng(derive_seed(config.draw_seed, Stream::Draw));
    SamplingPlan plan = make_plan(scores, config.n, draw_rng);
    est.pi = plan.pi;
    diag.realized_m = plan.realized_m;
    diag.sample_mask = plan.indicators;

    // weighted fits on the subsample (Horvitz-Thompson weights), full-data
    // surrogate fit, covariance blocks, augmentation
    Subsample sub = gather(X, S, y, plan.indicators, &plan.pi);
    if (sub.index.size() < static_cast<std::size_t>(p)) {
      diag.error = "subsample smaller than the parameter dimension";
      return est;
    }
    const Vec ht_w = sub.pi.cwiseInverse();
    FitResult fit_b = fit_glm(config.family_y, sub.X, sub.y, ht_w,
                              pilot->beta_pilot, config.solver);
    FitResult fit_g = fit_glm(config.family_s, sub.X, sub.s, ht_w,
                              pilot->gamma_pilot, config.solver);
    FitResult fit_gN = fit_glm(config.family_s, X, S,
                               Vec::Ones(static_cast<Eigen::Index>(N)),
                               pilot->gamma_pilot, config.solver);
    diag.beta_n_converged = fit_b.converged;
    diag.gamma_n_converged = fit_g.converged;
    diag.gamma_N_converged = fit_gN.converged;
    est.beta_n = fit_b.beta;
    est.gamma_n = fit_g.beta;
    est.gamma_N = fit_gN.beta;

    auto [sigma12, sigma22] =
        sigma_blocks(config.family_y, config.family_s, est.beta_n, est.gamma_n,
                     est.gamma_N, X, S, sub.y, plan);
    est.sigma12 = std::move(sigma12);
    est.sigma22 = std::move(sigma22);
    diag.sigma22_cond = condition_number(est.sigma22);

    est.beta_A = config.augment
                     ? augment(est.beta_n, est.gamma_n, est.gamma_N,
                               est.sigma12, est.sigma22)
                     : est.beta_n;
    diag.ok = diag.pilot_beta_converged && diag.pilot_gamma_converged &&
              diag.beta_n_converged && diag.gamma_n_converged &&
              diag.gamma_N_converged && est.beta_A.allFinite();
  } catch (const std::exception& e) {
    diag.error = e.what();
    diag.ok = false;
  }
  return est;
}

}  // namespace osumcs
