#include "osumcs/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "osumcs/parallel.hpp"
#include "osumcs/rng.hpp"

namespace osumcs {

namespace {

struct TreeBuilder {
  const Mat& features;
  const Vec& targets;
  int min_leaf;
  int mtry;
  Rng& rng;
  std::vector<TreeNode> nodes;

  // scratch reused across nodes
  std::vector<int> feat_pool;
  std::vector<std::pair<double, double>> sorted;  // (feature value, target)

  int build(std::vector<int>& rows, int lo, int hi) {
    const int m = hi - lo;
    double sum = 0.0, sum2 = 0.0;
    for (int k = lo; k < hi; ++k) {
      const double t = targets(rows[k]);
      sum += t;
      sum2 += t * t;
    }
    const double mean = sum / m;

    const int id = static_cast<int>(nodes.size());
    nodes.push_back({-1, 0.0, -1, -1, mean});

    if (m < 2 * min_leaf) return id;
    if (sum2 - sum * mean <= 1e-12 * (1.0 + sum2)) return id;  // constant node

    // draw mtry distinct candidate features
    const int nfeat = static_cast<int>(features.cols());
    feat_pool.resize(nfeat);
    std::iota(feat_pool.begin(), feat_pool.end(), 0);
    const int ncand = std::min(mtry, nfeat);
    for (int j = 0; j < ncand; ++j) {
      const std::size_t pick = j + rng.uniform_index(nfeat - j);
      std::swap(feat_pool[j], feat_pool[pick]);
    }

    int best_feat = -1;
    double best_thr = 0.0;
    double best_gain = 0.0;
    for (int j = 0; j < ncand; ++j) {
      const int f = feat_pool[j];
      sorted.resize(m);
      for (int k = 0; k < m; ++k) {
        const int r = rows[lo + k];
        sorted[k] = {features(r, f), targets(r)};
      }
      std::sort(sorted.begin(), sorted.end());
      double left_sum = 0.0;
      for (int k = 0; k + 1 < m; ++k) {
        left_sum += sorted[k].second;
        const int nl = k + 1, nr = m - nl;
        if (nl < min_leaf) continue;
        if (nr < min_leaf) break;
        if (sorted[k].first == sorted[k + 1].first) continue;  // not a cut point
        const double right_sum = sum - left_sum;
        const double gain =
            left_sum * left_sum / nl + right_sum * right_sum / nr - sum * mean;
        if (gain > best_gain) {
          best_gain = gain;
          best_feat = f;
          best_thr = 0.5 * (sorted[k].first + sorted[k + 1].first);
        }
      }
    }
    if (best_feat < 0) return id;

    // partition rows; ties (value <= threshold) go left
    const auto mid_it = std::partition(
        rows.begin() + lo, rows.begin() + hi,
        [&](int r) { return features(r, best_feat) <= best_thr; });
    const int mid = static_cast<int>(mid_it - rows.begin());
    if (mid == lo || mid == hi) return id;  // all rows on one side of the midpoint

    nodes[id].feature = best_feat;
    nodes[id].threshold = best_thr;
    const int left = build(rows, lo, mid);
    nodes[id].left = left;
    const int right = build(rows, mid, hi);
    nodes[id].right = right;
    return id;
  }
};

std::vector<TreeNode> build_tree(const Mat& features, const Vec& targets,
                                 const ForestParams& params, int mtry,
                                 std::uint64_t seed) {
  Rng rng(seed);
  const int m = static_cast<int>(features.rows());
  std::vector<int> rows(m);
  for (int i = 0; i < m; ++i)
    rows[i] = static_cast<int>(rng.uniform_index(m));  // bootstrap
  const int min_leaf = std::max(1, params.min_leaf);
  TreeBuilder builder{features, targets, min_leaf, mtry, rng, {}, {}, {}};
  builder.nodes.reserve(2 * static_cast<std::size_t>(m) / params.min_leaf + 1);
  builder.build(rows, 0, m);
  return std::move(builder.nodes);
}

}  // namespace

double MomentModel::predict_row(const double* x) const {
  double sum = 0.0;
  for (const auto& tree : trees) {
    int id = 0;
    while (tree[id].feature >= 0)
      id = x[tree[id].feature] <= tree[id].threshold ? tree[id].left
                                                     : tree[id].right;
    sum += tree[id].value;
  }
  const double pred = sum / static_cast<double>(trees.size());
  return pred > floor ? pred : floor;
}

Vec residual_targets(GlmFamily family, const Vec& beta_pilot, const Mat& X,
                     const Vec& y) {
  if (X.cols() != beta_pilot.size() || y.size() != X.rows())
    throw std::invalid_argument("residual_targets: dimension mismatch");
  Vec r(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    r(i) = std::abs(y(i) - glm_mean(family, beta_pilot.dot(X.row(i))));
  return r;
}

MomentModel fit_forest(const Mat& features, const Vec& targets,
                       const ForestParams& params, std::uint64_t seed) {
  if (features.rows() != targets.size())
    throw std::invalid_argument("fit_forest: dimension mismatch");
  if (features.rows() < 1)
    throw std::invalid_argument("fit_forest: empty training set");
  const int nfeat = static_cast<int>(features.cols());
  const int mtry =
      params.mtry > 0 ? params.mtry : (nfeat + 2) / 3;  // ceil(nfeat / 3)

  MomentModel model;
  model.feature_count = nfeat;
  const double mean_target = targets.cwiseAbs().mean();
  model.floor = std::max(params.floor_rel * mean_target, 1e-12);
  model.trees.resize(static_cast<std::size_t>(params.n_trees));
  // each tree owns a derived seed, so construction order (and threading)
  // cannot change the result
  par::parallel_for_dynamic(params.n_trees, [&](std::ptrdiff_t t) {
    model.trees[static_cast<std::size_t>(t)] = build_tree(
        features, targets, params, mtry,
        derive_seed(seed, {static_cast<std::uint64_t>(t)}));
  });
  return model;
}

namespace {

Vec predict_impl(const MomentModel& model, const Vec& S, const Mat& X,
                 bool parallel) {
  if (X.cols() + 1 != model.feature_count || S.size() != X.rows())
    throw std::invalid_argument("predict_root_moment: dimension mismatch");
  const Eigen::Index n = X.rows();
  Vec out(n);
  // feature 0 is the surrogate, features 1..p map to X columns
  auto one = [&](std::ptrdiff_t i) {
    double sum = 0.0;
    for (const auto& tree : model.trees) {
      int id = 0;
      while (tree[id].feature >= 0) {
        const int f = tree[id].feature;
        const double v = f == 0 ? S(i) : X(i, f - 1);
        id = v <= tree[id].threshold ? tree[id].left : tree[id].right;
      }
      sum += tree[id].value;
    }
    const double pred = sum / static_cast<double>(model.trees.size());
    out(i) = pred > model.floor ? pred : model.floor;
  };
  if (parallel) {
    par::parallel_for(n, one);
  } else {
    for (Eigen::Index i = 0; i < n; ++i) one(i);
  }
  return out;
}

}  // namespace

Vec predict_root_moment(const MomentModel& model, const Vec& S, const Mat& X) {
  return predict_impl(model, S, X, true);
}

Vec predict_root_moment_serial(const MomentModel& model, const Vec& S,
                               const Mat& X) {
  return predict_impl(model, S, X, false);
}

std::string forest_to_json(const MomentModel& model) {
  nlohmann::json j;
  j["feature_count"] = model.feature_count;
  j["floor"] = model.floor;
  auto& trees = j["trees"] = nlohmann::json::array();
  for (const auto& tree : model.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree)
      nodes.push_back({{"feature", n.feature},
                       {"threshold", n.threshold},
                       {"left", n.left},
                       {"right", n.right},
                       {"value", n.value}});
    trees.push_back(std::move(nodes));
  }
  return j.dump();
}

}  // namespace osumcs
