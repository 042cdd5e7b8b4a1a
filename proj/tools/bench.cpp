// Timing comparison of the OpenMP kernels against their serial references,
// plus one full pipeline replication at desk scale.

#include <chrono>
#include <cstdio>
#include <string>

#include "osumcs/estimator.hpp"
#include "osumcs/forest.hpp"
#include "osumcs/glm.hpp"
#include "osumcs/parallel.hpp"
#include "osumcs/scenarios.hpp"

using namespace osumcs;

namespace {

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(
             clock::now().time_since_epoch())
      .count();
}

template <class Fn>
double time_best_of(int repeats, Fn fn) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const double t0 = now_ms();
    fn();
    const double t1 = now_ms();
    if (t1 - t0 < best) best = t1 - t0;
  }
  return best;
}

void report(const char* name, double serial_ms, double parallel_ms,
            double max_diff) {
  std::printf("%-22s %10.2f ms %10.2f ms %8.2fx   max|diff| %.3e\n", name,
              serial_ms, parallel_ms, serial_ms / parallel_ms, max_diff);
}

}  // namespace

int main(int argc, char** argv) {
  Eigen::Index N = 200000;
  int p = 30;
  if (argc > 1) N = std::stoll(argv[1]);
  if (argc > 2) p = std::stoi(argv[2]);
  std::printf("threads: %d   N=%lld   p=%d\n", par::max_threads(),
              static_cast<long long>(N), p);
  std::printf("%-22s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

  Rng rng(20240811);
  Mat X(N, p);
  for (Eigen::Index i = 0; i < N; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
  Vec beta = Vec::Constant(p, 0.1);
  Vec y(N), w(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    y(i) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    w(i) = 0.5 + rng.uniform();
  }

  {
    Vec a, b;
    const double ts = time_best_of(
        3, [&] { a = weighted_score_serial(GlmFamily::Logistic, beta, X, y, w); });
    const double tp = time_best_of(
        3, [&] { b = weighted_score(GlmFamily::Logistic, beta, X, y, w); });
    report("weighted_score", ts, tp, (a - b).cwiseAbs().maxCoeff());
  }
  {
    Mat a, b;
    const double ts = time_best_of(
        3, [&] { a = fisher_info_serial(GlmFamily::Logistic, beta, X, w); });
    const double tp =
        time_best_of(3, [&] { b = fisher_info(GlmFamily::Logistic, beta, X, w); });
    report("fisher_info", ts, tp, (a - b).cwiseAbs().maxCoeff());
  }
  {
    const Eigen::Index m = 2000;
    Mat feats = X.topRows(m);
    Vec targets(m);
    for (Eigen::Index i = 0; i < m; ++i)
      targets(i) = std::abs(feats(i, 0)) + 0.1 * rng.normal();
    ForestParams params;
    MomentModel model;
    const int full_threads = par::max_threads();
    par::set_threads(1);
    const double ts = time_best_of(
        2, [&] { model = fit_forest(feats, targets, params, 7); });
    par::set_threads(full_threads);
    const double tp =
        time_best_of(2, [&] { model = fit_forest(feats, targets, params, 7); });
    report("forest fit", ts, tp, 0.0);

    Vec s = X.col(0).head(N / 2), pa, pb;
    Mat Xq = X.topRows(N / 2).rightCols(p - 1);
    const double tps = time_best_of(
        3, [&] { pa = predict_root_moment_serial(model, s, Xq); });
    const double tpp =
        time_best_of(3, [&] { pb = predict_root_moment(model, s, Xq); });
    report("forest predict", tps, tpp, (pa - pb).cwiseAbs().maxCoeff());
  }
  {
    ScenarioSpec spec = ScenarioSpec::by_name("mzNormal", 20000);
    const Dataset ds = make_dataset(spec, 99);
    VectorResponse src(ds.Y);
    PipelineConfig pc;
    pc.pilot_seed = 1;
    pc.draw_seed = 2;
    const double t0 = now_ms();
    AugmentedEstimate est = run_pipeline(ds.X, ds.S, src, pc);
    const double t1 = now_ms();
    std::printf("%-22s %10.2f ms   (one desk-scale replication, m=%zu, ok=%d)\n",
                "pipeline", t1 - t0, est.diagnostics.realized_m,
                est.diagnostics.ok ? 1 : 0);
  }
  return 0;
}
