#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "osumcs/data.hpp"
#include "osumcs/forest.hpp"
#include "osumcs/glm.hpp"
#include "osumcs/sampler.hpp"

namespace osumcs {

enum class Method { Osumcs, Osumc, Uniform };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct PilotError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PilotResult {
  Vec beta_pilot;
  Vec gamma_pilot;
  Mat J_pilot;  // information at beta_pilot on the pilot rows
  MomentModel moments;
  bool has_moments = false;
  std::vector<std::uint8_t> pilot_mask;
  std::size_t pilot_m = 0;
  bool beta_converged = false;
  bool gamma_converged = false;
};

// Uniform pilot of expected size n0 (Bernoulli n0/N), pilot GLM fits for Y|X
// and S|X, pilot information, and the root-moment forest trained on the pilot
// residuals. Throws PilotError when a pilot fit fails to converge.
PilotResult pilot_stage(const Mat& X, const Vec& S, ResponseSource& y,
                        std::size_t n0, GlmFamily family_y, GlmFamily family_s,
                        std::uint64_t seed, const SolverOptions& solver = {},
                        const ForestParams& forest = {},
                        bool fit_moments = true);

PilotResult pilot_stage_with_mask(const Mat& X, const Vec& S, ResponseSource& y,
                                  const std::vector<std::uint8_t>& pilot_mask,
                                  GlmFamily family_y, GlmFamily family_s,
                                  std::uint64_t forest_seed,
                                  const SolverOptions& solver = {},
                                  const ForestParams& forest = {},
                                  bool fit_moments = true);

// Plug-in covariance blocks of (beta_n, gamma_n - gamma_N). Sampled-unit sums
// with kernel (1/pi)(1/pi - 1), sandwiched between the pi-weighted information
// at beta_n and the full-data information at gamma_N. y_sampled holds the
// measured responses of the sampled units in increasing index order.
std::pair<Mat, Mat> sigma_blocks(GlmFamily family_y, GlmFamily family_s,
                                 const Vec& beta_n, const Vec& gamma_n,
                                 const Vec& gamma_N, const Mat& X, const Vec& S,
                                 const Vec& y_sampled, const SamplingPlan& plan);

// Same sandwich with kernel (1/pi)^2 on phi phi^T; used by the
// variance-reduction invariant checks, not by the pipeline itself.
Mat sigma11_block(GlmFamily family_y, const Vec& beta_n, const Mat& X,
                  const Vec& y_sampled, const SamplingPlan& plan);

// Moore-Penrose pseudo-inverse of a symmetric PSD matrix via its
// eigendecomposition; eigenvalues below rtol * max|eigenvalue| are dropped.
Mat psd_pinv(const Mat& A, double rtol = 1e-10);

// beta_A = beta_n - sigma12 pinv(sigma22) (gamma_n - gamma_N)
Vec augment(const Vec& beta_n, const Vec& gamma_n, const Vec& gamma_N,
            const Mat& sigma12, const Mat& sigma22, double pinv_rtol = 1e-10);

struct PipelineConfig {
  std::size_t n0 = 500;
  std::size_t n = 1000;
  Method method = Method::Osumcs;
  GlmFamily family_y = GlmFamily::Logistic;
  GlmFamily family_s = GlmFamily::Linear;  // Gaussian working model for S
  bool augment = true;
  SolverOptions solver;
  ForestParams forest;
  std::uint64_t pilot_seed = 0;
  std::uint64_t draw_seed = 0;
  const PilotResult* pilot = nullptr;  // reuse a precomputed pilot stage
  const Vec* score_override = nullptr; // test hook: bypass the score rule
};

struct PipelineDiagnostics {
  bool pilot_beta_converged = false;
  bool pilot_gamma_converged = false;
  bool beta_n_converged = false;
  bool gamma_n_converged = false;
  bool gamma_N_converged = false;
  bool ok = false;  // every stage converged
  std::size_t pilot_m = 0;
  std::size_t realized_m = 0;
  double j_pilot_cond = 0.0;
  double sigma22_cond = 0.0;
  std::vector<std::uint8_t> pilot_mask;
  std::vector<std::uint8_t> sample_mask;
  std::string error;
};

struct AugmentedEstimate {
  Vec beta_n;
  Vec gamma_n;
  Vec gamma_N;
  Mat sigma12;
  Mat sigma22;
  Vec beta_A;
  Vec pi;
  PipelineDiagnostics diagnostics;
};

// Full pipeline: pilot -> scores -> normalize/cap -> Bernoulli draw ->
// weighted fits -> full-data gamma fit -> covariance blocks -> augmentation.
// Stage failures land in diagnostics; the function itself does not throw on
// divergence.
AugmentedEstimate run_pipeline(const Mat& X, const Vec& S, ResponseSource& y,
                               const PipelineConfig& config);

}  // namespace osumcs
