#include <benchmark/benchmark.h>

#include <vector>

#include "topoinc/baseline.hpp"
#include "topoinc/flow.hpp"
#include "topoinc/geometry.hpp"
#include "topoinc/inc.hpp"
#include "topoinc/noise_density.hpp"
#include "topoinc/rng.hpp"
#include "topoinc/topo_field.hpp"

using namespace topoinc;

namespace {

FlowModel random_model(int components) {
  FlowModel fm(FlowArchitecture{}, LatentMixture::circular(components));
  fm.randomize(1, 0.05);
  return fm;
}

std::vector<LabeledSample> batch_of(const std::string& dataset, int per_class) {
  return sample_noisy(make_dataset(dataset), per_class, 0.05, 3);
}

void BM_LossAndGradients(benchmark::State& state) {
  const auto fm = random_model(2);
  const auto batch = batch_of("two-moons", static_cast<int>(state.range(0)) / 2);
  const auto precision = state.range(1) ? Precision::kSingle : Precision::kDouble;
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_and_gradients(fm, batch, true, precision).loss);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(batch.size()));
}
BENCHMARK(BM_LossAndGradients)->Args({200, 1})->Args({200, 0})->Args({300, 1})
    ->Unit(benchmark::kMillisecond);

void BM_LogPdfBatch(benchmark::State& state) {
  const auto fm = random_model(2);
  std::vector<Point> pts;
  for (const auto& s : batch_of("circles", 500)) pts.push_back(s.point);
  for (auto _ : state) benchmark::DoNotOptimize(fm.log_pdf_batch(pts, 1));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(pts.size()));
}
BENCHMARK(BM_LogPdfBatch)->Unit(benchmark::kMillisecond);

void BM_ExtendedDensity(benchmark::State& state) {
  const auto m = make_dataset("spirals");
  const NoiseModel nm(0.05);
  const Point q(0.3, -0.4);
  const int panels = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(extended_density(nm, m, q, panels));
}
BENCHMARK(BM_ExtendedDensity)->Arg(64)->Arg(512)->Arg(2048);

void BM_NearestPoint(benchmark::State& state) {
  const auto m = make_dataset("spirals");
  Rng rng = make_rng(5, "bench");
  std::vector<Point> qs;
  for (int k = 0; k < 64; ++k) qs.emplace_back(4 * uniform01(rng) - 2, 4 * uniform01(rng) - 2);
  std::size_t k = 0;
  for (auto _ : state) benchmark::DoNotOptimize(nearest_point(m, qs[k++ % qs.size()]));
}
BENCHMARK(BM_NearestPoint)->Unit(benchmark::kMicrosecond);

void BM_LabelComponents(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng = make_rng(9, "mask");
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(n) * n);
  for (auto& v : mask) v = uniform01(rng) < 0.55;
  for (auto _ : state) {
    benchmark::DoNotOptimize(label_components(mask, n, n, Connectivity::kEight).count());
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_LabelComponents)->Arg(100)->Arg(300)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_LevelsetAnalysis(benchmark::State& state) {
  const auto m = make_dataset("circles");
  const NoiseModel nm(0.05);
  const auto field = rasterize([&](const Point& q) { return extended_density(nm, m, q, 64); },
                               Domain{}, 300, 300, 1);
  for (auto _ : state) benchmark::DoNotOptimize(analyze_levelset(field, 0.01).n_holes);
}
BENCHMARK(BM_LevelsetAnalysis)->Unit(benchmark::kMillisecond);

void BM_ProjectIgnorant(benchmark::State& state) {
  const auto fm = random_model(1);
  IncConfig cfg;
  cfg.restarts = static_cast<int>(state.range(0));
  cfg.keep_trace = false;
  std::uint64_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(project_ignorant(fm, Point(0.4, -0.3), cfg, k++).objective);
  }
}
BENCHMARK(BM_ProjectIgnorant)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_ProjectAware(benchmark::State& state) {
  const auto fm = random_model(3);
  IncConfig cfg;
  cfg.keep_trace = false;
  std::uint64_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(project_aware(fm, Point(0.4, -0.3), cfg, k++).objective);
  }
}
BENCHMARK(BM_ProjectAware)->Unit(benchmark::kMillisecond);

void BM_SmoSolve(benchmark::State& state) {
  const auto data = batch_of("two-moons", static_cast<int>(state.range(0)));
  std::vector<Point> pts;
  std::vector<int> y;
  for (const auto& s : data) {
    pts.push_back(s.point);
    y.push_back(s.label == 0 ? 1 : -1);
  }
  const auto kernel = rbf_kernel_matrix(pts, 100.0);
  for (auto _ : state) benchmark::DoNotOptimize(smo_solve(kernel, y, 1.0, 1e-3).rho);
}
BENCHMARK(BM_SmoSolve)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
