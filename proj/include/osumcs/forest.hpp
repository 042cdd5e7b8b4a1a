#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "osumcs/glm.hpp"

namespace osumcs {

struct ForestParams {
  int n_trees = 100;
  int min_leaf = 5;
  int mtry = 0;            // 0 -> ceil(feature_count / 3)
  double floor_rel = 1e-6; // prediction floor, relative to the mean training target
};

struct TreeNode {
  int feature = -1;        // -1 marks a leaf
  double threshold = 0.0;  // value <= threshold goes left
  int left = -1;
  int right = -1;
  double value = 0.0;      // leaf mean
};

// Bagged CART regression trees predicting the nonnegative conditional
// root-moment from (S, X). Feature column 0 is the surrogate, columns 1..p
// are the covariates; serialized models rely on this layout.
struct MomentModel {
  std::vector<std::vector<TreeNode>> trees;
  int feature_count = 0;
  double floor = 0.0;

  double predict_row(const double* features) const;
};

// per-unit absolute residual |y - b'(beta^T x)|; the square root of the
// individual-level plug-in of E(Y^2|S,X) - 2 E(Y|S,X) b' + b'^2
Vec residual_targets(GlmFamily family, const Vec& beta_pilot, const Mat& X,
                     const Vec& y);

MomentModel fit_forest(const Mat& features, const Vec& targets,
                       const ForestParams& params, std::uint64_t seed);

// forest-average prediction on (S, X) rows, floored at model.floor (> 0)
Vec predict_root_moment(const MomentModel& model, const Vec& S, const Mat& X);
Vec predict_root_moment_serial(const MomentModel& model, const Vec& S,
                               const Mat& X);

// debug dump; not a stability contract
std::string forest_to_json(const MomentModel& model);

}  // namespace osumcs
