#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "osumcs/data.hpp"
#include "osumcs/glm.hpp"
#include "osumcs/rng.hpp"

namespace osumcs {

enum class CovariateDesign {
  MzNormal,     // N(0, Sigma), Sigma_ij = 0.5^{1(i != j)}
  NzNormal,     // N(0.5, Sigma)
  UnNormal,     // N(0, U1 Sigma U1), U1 = diag(1, 1/2, ..., 1/10)
  MixNormal,    // 0.5 N(0.5, Sigma) + 0.5 N(-0.5, Sigma)
  T3Scaled,     // t_3(0, Sigma) / 10
  Exp,          // i.i.d. exponential(rate 2)
  GA,           // N(1, Sigma'), Sigma'_ij = 2 * 0.5^{|i-j|}
  T3,           // t_3(0, Sigma)
  T1,           // t_1(0, Sigma)
  PoisMzNormal,
  PoisNzNormal,
  PoisUniform,  // first half of columns U[-1,1], rest U[-0.5,0.5]
  PoisT3,       // t_3(0, Sigma) / 10
};

// Surrogate construction constants; which fields are read depends on the
// response family. Setting the sd fields to zero gives the deterministic
// limits used by the tests.
struct SurrogateParams {
  double y_coef_mean = 1.0;  // coefficient on Y
  double y_coef_sd = 0.0;    // per-observation draw when > 0
  double xb_coef_mean = 0.0; // coefficient on X beta0
  double xb_coef_sd = 0.0;
  double eta_mean = 0.0;     // per-coordinate mean/sd of the eta vector
  double eta_sd = 0.0;
  bool use_eta = false;
  double eps_sd = 0.0;

  static SurrogateParams defaults(GlmFamily family);
};

struct ScenarioSpec {
  GlmFamily family = GlmFamily::Logistic;
  CovariateDesign design = CovariateDesign::MzNormal;
  std::size_t N = 20000;
  int p = 10;
  Vec beta0;
  SurrogateParams surrogate;
  double linear_noise_sd = 3.0;  // response noise for the linear family

  // Scenario names are stable CLI identifiers.
  static ScenarioSpec by_name(const std::string& name, std::size_t N = 20000);
  static const std::vector<std::string>& names();
};

Mat gen_covariates(const ScenarioSpec& spec, Rng& rng);
Vec gen_response(GlmFamily family, const Mat& X, const Vec& beta0, Rng& rng,
                 double linear_noise_sd = 3.0);
Vec gen_surrogate(const ScenarioSpec& spec, const Mat& X, const Vec& Y,
                  const Vec& beta0, Rng& rng);

// Covariates, response and surrogate from three derived sub-streams of the
// given seed; identical (spec, seed) always yields the identical dataset.
Dataset make_dataset(const ScenarioSpec& spec, std::uint64_t seed);

}  // namespace osumcs
