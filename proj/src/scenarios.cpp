#include "osumcs/scenarios.hpp"

#include <cmath>
#include <stdexcept>

namespace osumcs {

SurrogateParams SurrogateParams::defaults(GlmFamily family) {
  SurrogateParams sp;
  switch (family) {
    case GlmFamily::Logistic:
      // S = zeta Y + 5 X beta0 + X eta + eps
      sp.y_coef_mean = 5.0;
      sp.y_coef_sd = 0.2;
      sp.xb_coef_mean = 5.0;
      sp.eta_mean = 0.0;
      sp.eta_sd = 0.5;
      sp.use_eta = true;
      sp.eps_sd = 0.5;
      break;
    case GlmFamily::Linear:
      // S = 10 Y + X eta + eps
      sp.y_coef_mean = 10.0;
      sp.eta_mean = 2.0;
      sp.eta_sd = 1.0;
      sp.use_eta = true;
      sp.eps_sd = 1.0;
      break;
    case GlmFamily::Poisson:
      // S = 5 Y + zeta X beta0 + eps
      sp.y_coef_mean = 5.0;
      sp.xb_coef_mean = 5.0;
      sp.xb_coef_sd = 0.3;
      sp.eps_sd = 1.0;
      break;
  }
  return sp;
}

namespace {

struct NamedScenario {
  const char* name;
  CovariateDesign design;
  GlmFamily family;
  int p;
  double beta0_value;
};

constexpr NamedScenario kScenarios[] = {
    {"mzNormal", CovariateDesign::MzNormal, GlmFamily::Logistic, 10, 0.5},
    {"nzNormal", CovariateDesign::NzNormal, GlmFamily::Logistic, 10, 0.5},
    {"unNormal", CovariateDesign::UnNormal, GlmFamily::Logistic, 10, 0.5},
    {"mixNormal", CovariateDesign::MixNormal, GlmFamily::Logistic, 10, 0.5},
    {"T3scaled", CovariateDesign::T3Scaled, GlmFamily::Logistic, 10, 0.5},
    {"Exp", CovariateDesign::Exp, GlmFamily::Logistic, 10, 0.5},
    {"GA", CovariateDesign::GA, GlmFamily::Linear, 30, 0.5},
    {"T3", CovariateDesign::T3, GlmFamily::Linear, 30, 0.5},
    {"T1", CovariateDesign::T1, GlmFamily::Linear, 30, 0.5},
    {"PoisMzNormal", CovariateDesign::PoisMzNormal, GlmFamily::Poisson, 10, 0.1},
    {"PoisNzNormal", CovariateDesign::PoisNzNormal, GlmFamily::Poisson, 10, 0.1},
    {"PoisUniform", CovariateDesign::PoisUniform, GlmFamily::Poisson, 10, 0.1},
    {"PoisT3", CovariateDesign::PoisT3, GlmFamily::Poisson, 10, 0.1},
};

// Cholesky factor of the equicorrelation matrix Sigma_ij = 0.5^{1(i != j)}
Mat equicorr_chol(int p) {
  Mat sigma = Mat::Constant(p, p, 0.5);
  sigma.diagonal().setOnes();
  return Eigen::LLT<Mat>(sigma).matrixL();
}

Mat ga_chol(int p) {
  Mat sigma(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      sigma(i, j) = 2.0 * std::pow(0.5, std::abs(i - j));
  return Eigen::LLT<Mat>(sigma).matrixL();
}

Vec std_normal_vec(Rng& rng, int p) {
  Vec z(p);
  for (int j = 0; j < p; ++j) z(j) = rng.normal();
  return z;
}

}  // namespace

ScenarioSpec ScenarioSpec::by_name(const std::string& name, std::size_t N) {
  for (const auto& sc : kScenarios) {
    if (name == sc.name) {
      ScenarioSpec spec;
      spec.family = sc.family;
      spec.design = sc.design;
      spec.N = N;
      spec.p = sc.p;
      spec.beta0 = Vec::Constant(sc.p, sc.beta0_value);
      spec.surrogate = SurrogateParams::defaults(sc.family);
      return spec;
    }
  }
  throw std::invalid_argument("unknown scenario: " + name);
}

const std::vector<std::string>& ScenarioSpec::names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& sc : kScenarios) v.emplace_back(sc.name);
    return v;
  }();
  return names;
}

Mat gen_covariates(const ScenarioSpec& spec, Rng& rng) {
  const int p = spec.p;
  const auto N = static_cast<Eigen::Index>(spec.N);
  Mat X(N, p);

  switch (spec.design) {
    case CovariateDesign::MzNormal:
    case CovariateDesign::PoisMzNormal: {
      const Mat L = equicorr_chol(p);
      for (Eigen::Index i = 0; i < N; ++i)
        X.row(i) = (L * std_normal_vec(rng, p)).transpose();
      break;
    }
    case CovariateDesign::NzNormal:
    case CovariateDesign::PoisNzNormal: {
      const Mat L = equicorr_chol(p);
      for (Eigen::Index i = 0; i < N; ++i)
        X.row(i) = (L * std_normal_vec(rng, p)).array().transpose() + 0.5;
      break;
    }
    case CovariateDesign::UnNormal: {
      if (p > 10)
        throw std::invalid_argument("unNormal design is defined for p <= 10");
      const Mat L = equicorr_chol(p);
      Vec u1(p);
      for (int j = 0; j < p; ++j) u1(j) = 1.0 / (j + 1);
      for (Eigen::Index i = 0; i < N; ++i)
        X.row(i) = (u1.asDiagonal() * (L * std_normal_vec(rng, p))).transpose();
      break;
    }
    case CovariateDesign::MixNormal: {
      const Mat L = equicorr_chol(p);
      for (Eigen::Index i = 0; i < N; ++i) {
        const double mu = rng.bernoulli(0.5) ? 0.5 : -0.5;
        X.row(i) = (L * std_normal_vec(rng, p)).array().transpose() + mu;
      }
      break;
    }
    case CovariateDesign::T3Scaled:
    case CovariateDesign::PoisT3: {
      const Mat L = equicorr_chol(p);
      for (Eigen::Index i = 0; i < N; ++i) {
        const Vec z = L * std_normal_vec(rng, p);
        const double div = std::sqrt(rng.chisq(3) / 3.0);
        X.row(i) = (z / div).transpose() / 10.0;
      }
      break;
    }
    case CovariateDesign::Exp: {
      for (Eigen::Index i = 0; i < N; ++i)
        for (int j = 0; j < p; ++j) X(i, j) = rng.exponential(2.0);
      break;
    }
    case CovariateDesign::GA: {
      const Mat L = ga_chol(p);
      for (Eigen::Index i = 0; i < N; ++i)
        X.row(i) = (L * std_normal_vec(rng, p)).array().transpose() + 1.0;
      break;
    }
    case CovariateDesign::T3: {
      const Mat L = equicorr_chol(p);
      for (Eigen::Index i = 0; i < N; ++i) {
        const Vec z = L * std_normal_vec(rng, p);
        X.row(i) = (z / std::sqrt(rng.chisq(3) / 3.0)).transpose();
      }
      break;
    }
    case CovariateDesign::T1: {
      const Mat L = equicorr_chol(p);
      for (Eigen::Index i = 0; i < N; ++i) {
        const Vec z = L * std_normal_vec(rng, p);
        X.row(i) = (z / std::sqrt(rng.chisq(1))).transpose();
      }
      break;
    }
    case CovariateDesign::PoisUniform: {
      const int half = p / 2;
      for (Eigen::Index i = 0; i < N; ++i) {
        for (int j = 0; j < half; ++j) X(i, j) = 2.0 * rng.uniform() - 1.0;
        for (int j = half; j < p; ++j) X(i, j) = rng.uniform() - 0.5;
      }
      break;
    }
  }
  return X;
}

Vec gen_response(GlmFamily family, const Mat& X, const Vec& beta0, Rng& rng,
                 double linear_noise_sd) {
  if (X.cols() != beta0.size())
    throw std::invalid_argument("gen_response: dimension mismatch");
  const Eigen::Index N = X.rows();
  Vec y(N);
  const Vec eta = X * beta0;
  switch (family) {
    case GlmFamily::Linear:
      for (Eigen::Index i = 0; i < N; ++i)
        y(i) = eta(i) + (linear_noise_sd > 0 ? rng.normal(0.0, linear_noise_sd) : 0.0);
      break;
    case GlmFamily::Logistic:
      for (Eigen::Index i = 0; i < N; ++i)
        y(i) = rng.bernoulli(glm_mean(GlmFamily::Logistic, eta(i))) ? 1.0 : 0.0;
      break;
    case GlmFamily::Poisson:
      for (Eigen::Index i = 0; i < N; ++i)
        y(i) = static_cast<double>(
            rng.poisson(glm_mean(GlmFamily::Poisson, eta(i))));
      break;
  }
  return y;
}

Vec gen_surrogate(const ScenarioSpec& spec, const Mat& X, const Vec& Y,
                  const Vec& beta0, Rng& rng) {
  if (X.rows() != Y.size() || X.cols() != beta0.size())
    throw std::invalid_argument("gen_surrogate: dimension mismatch");
  const SurrogateParams& sp = spec.surrogate;
  const Eigen::Index N = X.rows();

  // eta is one p-vector per dataset; its draw precedes the per-row stream
  Vec xeta = Vec::Zero(N);
  if (sp.use_eta) {
    Vec eta(X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      eta(j) = sp.eta_sd > 0 ? rng.normal(sp.eta_mean, sp.eta_sd) : sp.eta_mean;
    xeta = X * eta;
  }
  const Vec xb = X * beta0;

  Vec s(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    const double y_coef =
        sp.y_coef_sd > 0 ? rng.normal(sp.y_coef_mean, sp.y_coef_sd) : sp.y_coef_mean;
    const double xb_coef =
        sp.xb_coef_sd > 0 ? rng.normal(sp.xb_coef_mean, sp.xb_coef_sd) : sp.xb_coef_mean;
    const double eps = sp.eps_sd > 0 ? rng.normal(0.0, sp.eps_sd) : 0.0;
    s(i) = y_coef * Y(i) + xb_coef * xb(i) + xeta(i) + eps;
  }
  return s;
}

Dataset make_dataset(const ScenarioSpec& spec, std::uint64_t seed) {
  Dataset ds;
  Rng rx(derive_seed(seed, Stream::Covariates));
  ds.X = gen_covariates(spec, rx);
  Rng ry(derive_seed(seed, Stream::Response));
  ds.Y = gen_response(spec.family, ds.X, spec.beta0, ry, spec.linear_noise_sd);
  Rng rs(derive_seed(seed, Stream::Surrogate));
  ds.S = gen_surrogate(spec, ds.X, ds.Y, spec.beta0, rs);
  return ds;
}

}  // namespace osumcs
