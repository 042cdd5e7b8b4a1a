#include "osumcs/sampler.hpp"

#include <cmath>
#include <stdexcept>

#include "osumcs/parallel.hpp"

namespace osumcs {

namespace {

Eigen::LLT<Mat> factor_info(Mat J) {
  Eigen::LLT<Mat> llt(J);
  if (llt.info() != Eigen::Success) {
    J.diagonal().array() += 1e-10 * J.trace() / static_cast<double>(J.rows());
    llt.compute(J);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error(
          "sampler: information matrix is singular even after jitter; "
          "enlarge the pilot sample (n0)");
  }
  return llt;
}

}  // namespace

Vec osumcs_scores(const Vec& root_moment, const Mat& J, const Mat& X) {
  if (root_moment.size() != X.rows() || J.rows() != X.cols() ||
      J.rows() != J.cols())
    throw std::invalid_argument("osumcs_scores: dimension mismatch");
  const auto llt = factor_info(J);
  Vec v(X.rows());
  par::parallel_for(X.rows(), [&](std::ptrdiff_t i) {
    v(i) = root_moment(i) * llt.solve(X.row(i).transpose()).norm();
  });
  return v;
}

Vec osumc_scores(GlmFamily family, const Vec& beta_pilot, const Mat& J,
                 const Mat& X) {
  if (beta_pilot.size() != X.cols() || J.rows() != X.cols() ||
      J.rows() != J.cols())
    throw std::invalid_argument("osumc_scores: dimension mismatch");
  const auto llt = factor_info(J);
  Vec v(X.rows());
  par::parallel_for(X.rows(), [&](std::ptrdiff_t i) {
    const double b2 = cumulant_derivs(family, beta_pilot.dot(X.row(i))).b2;
    v(i) = std::sqrt(b2) * llt.solve(X.row(i).transpose()).norm();
  });
  return v;
}

Vec normalize_cap(const Vec& v, std::size_t n) {
  const Eigen::Index N = v.size();
  if (n == 0 || static_cast<Eigen::Index>(n) > N)
    throw std::invalid_argument("normalize_cap: budget must satisfy 0 < n <= N");
  if ((v.array() <= 0.0).any() || !v.allFinite())
    throw std::invalid_argument("normalize_cap: scores must be positive and finite");

  Vec pi(N);
  std::vector<std::uint8_t> capped(static_cast<std::size_t>(N), 0);
  Eigen::Index capped_count = 0;

  // The free-unit sum is recomputed every round; a decremental update loses
  // the small scores to cancellation when a huge score gets capped.
  for (;;) {
    const Eigen::Index free_count = N - capped_count;
    const double budget = static_cast<double>(n) - static_cast<double>(capped_count);
    if (budget >= static_cast<double>(free_count)) {
      for (Eigen::Index i = 0; i < N; ++i)
        if (!capped[i]) pi(i) = 1.0;
      break;
    }
    double vsum = 0.0;
    for (Eigen::Index i = 0; i < N; ++i)
      if (!capped[i]) vsum += v(i);
    const double scale = budget / vsum;
    bool newly_capped = false;
    for (Eigen::Index i = 0; i < N; ++i) {
      if (capped[i]) continue;
      const double p = scale * v(i);
      if (p > 1.0) {
        pi(i) = 1.0;
        capped[i] = 1;
        ++capped_count;
        newly_capped = true;
      } else {
        pi(i) = p;
      }
    }
    if (!newly_capped) break;
  }

  // keep inverse-probability weights finite; rebalance so the budget is exact
  double excess = 0.0;
  double free_mass = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) {
    if (pi(i) < kMinInclusionProb) {
      excess += kMinInclusionProb - pi(i);
      pi(i) = kMinInclusionProb;
    } else if (pi(i) < 1.0) {
      free_mass += pi(i);
    }
  }
  if (excess > 0.0 && free_mass > excess) {
    const double shrink = (free_mass - excess) / free_mass;
    for (Eigen::Index i = 0; i < N; ++i)
      if (pi(i) > kMinInclusionProb && pi(i) < 1.0) pi(i) *= shrink;
  }
  return pi;
}

std::vector<std::uint8_t> draw(const Vec& pi, Rng& rng) {
  std::vector<std::uint8_t> r(static_cast<std::size_t>(pi.size()));
  for (Eigen::Index i = 0; i < pi.size(); ++i)
    r[static_cast<std::size_t>(i)] = rng.bernoulli(pi(i)) ? 1 : 0;
  return r;
}

SamplingPlan make_plan(const Vec& v, std::size_t n, Rng& rng) {
  SamplingPlan plan;
  plan.pi = normalize_cap(v, n);
  plan.indicators = draw(plan.pi, rng);
  plan.target_n = n;
  plan.realized_m = 0;
  for (auto r : plan.indicators) plan.realized_m += r;
  return plan;
}

}  // namespace osumcs
