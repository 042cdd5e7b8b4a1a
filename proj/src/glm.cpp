#include "osumcs/glm.hpp"

#include <cmath>
#include <stdexcept>
#include <limits>

#include "osumcs/parallel.hpp"

namespace osumcs {

std::string family_name(GlmFamily f) {
  switch (f) {
    case GlmFamily::Linear: return "linear";
    case GlmFamily::Logistic: return "logistic";
    case GlmFamily::Poisson: return "poisson";
  }
  return "?";
}

CumulantDerivs cumulant_derivs(GlmFamily family, double t, double cap) {
  if (!std::isfinite(t))
    throw std::domain_error("cumulant_derivs: non-finite linear predictor");
  switch (family) {
    case GlmFamily::Linear:
      return {0.5 * t * t, t, 1.0};
    case GlmFamily::Logistic: {
      // log(1+e^t) evaluated stably on both tails
      const double b = t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
      const double mu = 1.0 / (1.0 + std::exp(-t));
      return {b, mu, mu * (1.0 - mu)};
    }
    case GlmFamily::Poisson: {
      const double tc = t < -cap ? -cap : (t > cap ? cap : t);
      const double e = std::exp(tc);
      return {e, e, e};
    }
  }
  throw std::logic_error("cumulant_derivs: unknown family");
}

namespace {

void check_dims(const Vec& beta, const Mat& X, const Vec* y, const Vec& w) {
  if (X.cols() != beta.size())
    throw std::invalid_argument("glm: X columns do not match beta length");
  if (y && y->size() != X.rows())
    throw std::invalid_argument("glm: response length does not match X rows");
  if (w.size() != X.rows())
    throw std::invalid_argument("glm: weight length does not match X rows");
  if ((w.array() < 0.0).any())
    throw std::invalid_argument("glm: negative weight");
}

}  // namespace

Vec weighted_score_serial(GlmFamily family, const Vec& beta, const Mat& X,
                          const Vec& y, const Vec& w) {
  check_dims(beta, X, &y, w);
  const Eigen::Index n = X.rows();
  Vec s = Vec::Zero(beta.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (w(i) == 0.0) continue;
    const double mu = glm_mean(family, beta.dot(X.row(i)));
    s += (w(i) * (y(i) - mu)) * X.row(i).transpose();
  }
  return s;
}

Vec weighted_score(GlmFamily family, const Vec& beta, const Mat& X,
                   const Vec& y, const Vec& w) {
  check_dims(beta, X, &y, w);
  const Eigen::Index p = beta.size();
  return par::blocked_reduce(
      X.rows(), Vec(Vec::Zero(p)),
      [&](std::ptrdiff_t lo, std::ptrdiff_t hi, Vec& acc) {
        for (std::ptrdiff_t i = lo; i < hi; ++i) {
          if (w(i) == 0.0) continue;
          const double mu = glm_mean(family, beta.dot(X.row(i)));
          acc += (w(i) * (y(i) - mu)) * X.row(i).transpose();
        }
      },
      [](Vec& acc, const Vec& part) { acc += part; });
}

Mat fisher_info_serial(GlmFamily family, const Vec& beta, const Mat& X,
                       const Vec& w) {
  check_dims(beta, X, nullptr, w);
  const double wsum = w.sum();
  if (wsum <= 0.0)
    throw std::invalid_argument("fisher_info: all weights are zero");
  const Eigen::Index p = beta.size();
  Mat J = Mat::Zero(p, p);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (w(i) == 0.0) continue;
    const double b2 = cumulant_derivs(family, beta.dot(X.row(i))).b2;
    J.selfadjointView<Eigen::Lower>().rankUpdate(X.row(i).transpose(), w(i) * b2);
  }
  Mat sym = J.selfadjointView<Eigen::Lower>();
  return sym / wsum;
}

Mat fisher_info(GlmFamily family, const Vec& beta, const Mat& X, const Vec& w) {
  check_dims(beta, X, nullptr, w);
  const double wsum = w.sum();
  if (wsum <= 0.0)
    throw std::invalid_argument("fisher_info: all weights are zero");
  const Eigen::Index p = beta.size();
  Mat J = par::blocked_reduce(
      X.rows(), Mat(Mat::Zero(p, p)),
      [&](std::ptrdiff_t lo, std::ptrdiff_t hi, Mat& acc) {
        for (std::ptrdiff_t i = lo; i < hi; ++i) {
          if (w(i) == 0.0) continue;
          const double b2 = cumulant_derivs(family, beta.dot(X.row(i))).b2;
          acc.selfadjointView<Eigen::Lower>().rankUpdate(X.row(i).transpose(),
                                                         w(i) * b2);
        }
      },
      [](Mat& acc, const Mat& part) { acc += part; });
  Mat sym = J.selfadjointView<Eigen::Lower>();
  return sym / wsum;
}

namespace {

// The score is a sum of cancelling terms; below this level its computed value
// is indistinguishable from rounding noise, so convergence cannot demand more.
double score_noise_floor(GlmFamily family, const Vec& beta, const Mat& X,
                         const Vec& y, const Vec& w) {
  const double mags = par::blocked_reduce(
      X.rows(), 0.0,
      [&](std::ptrdiff_t lo, std::ptrdiff_t hi, double& acc) {
        for (std::ptrdiff_t i = lo; i < hi; ++i) {
          if (w(i) == 0.0) continue;
          const double mu = glm_mean(family, beta.dot(X.row(i)));
          acc += w(i) * (std::abs(y(i)) + std::abs(mu) + 1.0) * X.row(i).norm();
        }
      },
      [](double& acc, double part) { acc += part; });
  return 32.0 * std::numeric_limits<double>::epsilon() * mags;
}

}  // namespace

FitResult fit_glm(GlmFamily family, const Mat& X, const Vec& y, const Vec& w,
                  const Vec& init, const SolverOptions& opts) {
  check_dims(init, X, &y, w);
  if (!init.allFinite())
    throw std::invalid_argument("fit_glm: non-finite initial value");
  const double wsum = w.sum();
  if (wsum <= 0.0)
    throw std::invalid_argument("fit_glm: all weights are zero");
  const Eigen::Index p = X.cols();

  FitResult res;
  res.beta = init;
  Vec score = weighted_score(family, res.beta, X, y, w);
  res.score_norm = score.norm();
  const double tol = opts.tol + score_noise_floor(family, init, X, y, w);

  for (res.iterations = 0; res.iterations < opts.max_iter; ++res.iterations) {
    if (res.score_norm <= tol) break;

    Mat J = fisher_info(family, res.beta, X, w);
    Eigen::LLT<Mat> llt(J);
    if (llt.info() != Eigen::Success) {
      J.diagonal().array() += opts.ridge_rel * J.trace() / static_cast<double>(p);
      llt.compute(J);
      if (llt.info() != Eigen::Success) break;  // singular even after jitter
    }
    const Vec dir = llt.solve(score / wsum);

    // step-halving until the score norm decreases
    double step = 1.0;
    Vec cand;
    Vec cand_score;
    double cand_norm = res.score_norm;
    bool improved = false;
    for (int h = 0; h <= opts.max_halvings; ++h, step *= 0.5) {
      cand = res.beta + step * dir;
      if (!cand.allFinite()) continue;
      cand_score = weighted_score(family, cand, X, y, w);
      cand_norm = cand_score.norm();
      if (std::isfinite(cand_norm) && cand_norm < res.score_norm) {
        improved = true;
        break;
      }
    }
    if (!improved) break;
    res.beta = std::move(cand);
    score = std::move(cand_score);
    res.score_norm = cand_norm;
  }

  res.converged = res.beta.allFinite() && res.score_norm <= tol;
  res.info = res.beta.allFinite() ? fisher_info(family, res.beta, X, w)
                                  : Mat::Zero(p, p);
  return res;
}

}  // namespace osumcs
