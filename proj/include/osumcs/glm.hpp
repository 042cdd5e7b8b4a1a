#pragma once

#include <Eigen/Dense>
#include <string>

namespace osumcs {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class GlmFamily { Linear, Logistic, Poisson };

std::string family_name(GlmFamily f);

// Linear predictors are clamped to +/- this value inside the Poisson
// cumulant, keeping exp() finite on heavy-tailed designs.
inline constexpr double kPredictorCap = 30.0;

struct CumulantDerivs {
  double b;   // cumulant value
  double b1;  // first derivative (conditional mean)
  double b2;  // second derivative (conditional variance), > 0
};

CumulantDerivs cumulant_derivs(GlmFamily family, double t,
                               double cap = kPredictorCap);

inline double glm_mean(GlmFamily family, double t, double cap = kPredictorCap) {
  return cumulant_derivs(family, t, cap).b1;
}

struct SolverOptions {
  double tol = 1e-8;        // on the Euclidean norm of the weighted score
  int max_iter = 100;
  int max_halvings = 30;
  double ridge_rel = 1e-10; // jitter scale when the Cholesky factorization fails
};

struct FitResult {
  Vec beta;
  bool converged = false;
  int iterations = 0;
  double score_norm = 0.0;
  Mat info;  // weighted Fisher information at beta, (1/sum w) sum w b'' x x^T
};

// sum_i w_i (y_i - b'(beta^T x_i)) x_i
Vec weighted_score(GlmFamily family, const Vec& beta, const Mat& X,
                   const Vec& y, const Vec& w);
Vec weighted_score_serial(GlmFamily family, const Vec& beta, const Mat& X,
                          const Vec& y, const Vec& w);

// (1 / sum w) sum_i w_i b''(beta^T x_i) x_i x_i^T, symmetric PSD
Mat fisher_info(GlmFamily family, const Vec& beta, const Mat& X, const Vec& w);
Mat fisher_info_serial(GlmFamily family, const Vec& beta, const Mat& X,
                       const Vec& w);

// Damped Newton on the weighted score with step-halving; never throws on
// divergence, reports it through FitResult::converged instead.
FitResult fit_glm(GlmFamily family, const Mat& X, const Vec& y, const Vec& w,
                  const Vec& init, const SolverOptions& opts = {});

}  // namespace osumcs
