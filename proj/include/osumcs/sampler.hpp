#pragma once

#include <cstdint>
#include <vector>

#include "osumcs/glm.hpp"
#include "osumcs/rng.hpp"

namespace osumcs {

// Probabilities never drop below this after capping, keeping inverse-
// probability weights finite on pathological score distributions.
inline constexpr double kMinInclusionProb = 1e-8;

struct SamplingPlan {
  Vec pi;                            // inclusion probabilities, sum = target_n
  std::vector<std::uint8_t> indicators;
  std::size_t target_n = 0;
  std::size_t realized_m = 0;
};

// v_i = root_moment_i * ||J^{-1} x_i||_2 (surrogate-assisted optimal scores)
Vec osumcs_scores(const Vec& root_moment, const Mat& J, const Mat& X);

// model-based baseline: under the working model E[(Y-b')^2 | X] = b'', so
// v_i = sqrt(b''(beta^T x_i)) * ||J^{-1} x_i||_2
Vec osumc_scores(GlmFamily family, const Vec& beta_pilot, const Mat& J,
                 const Mat& X);

// pi_i = n v_i / sum(v), with iterative water-filling when entries exceed 1:
// capped units stay at 1 and the remaining budget is re-spread proportionally.
Vec normalize_cap(const Vec& v, std::size_t n);

std::vector<std::uint8_t> draw(const Vec& pi, Rng& rng);

SamplingPlan make_plan(const Vec& v, std::size_t n, Rng& rng);

}  // namespace osumcs
