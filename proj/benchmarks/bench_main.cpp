#include <benchmark/benchmark.h>

#include <random>

#include "foa/fixmap.hpp"
#include "foa/homography.hpp"
#include "foa/layers.hpp"
#include "foa/model.hpp"

using namespace foa;

namespace {

Tensor<float> random_clip(Shape4 s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1, 1);
  Tensor<float> t(s);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

Conv3dKernel<float> random_kernel(int out, int in, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-0.1f, 0.1f);
  auto k = Conv3dKernel<float>::zeros(out, in, 3, 3, 3, Padding::Same);
  for (auto& v : k.weights) v = u(rng);
  return k;
}

void BM_Conv3dForward(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0)), ch = static_cast<int>(state.range(1));
  const auto x = random_clip({8, side, side, ch}, 1);
  const auto k = random_kernel(ch, ch, 2);
  for (auto _ : state) benchmark::DoNotOptimize(conv3d_forward(x, k));
  state.SetItemsProcessed(state.iterations() * 8LL * side * side * ch * ch * 27);
}
BENCHMARK(BM_Conv3dForward)->Args({32, 8})->Args({32, 16})->Args({64, 16})->Unit(benchmark::kMillisecond);

void BM_Conv3dBackward(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0)), ch = static_cast<int>(state.range(1));
  const auto x = random_clip({8, side, side, ch}, 1);
  const auto k = random_kernel(ch, ch, 2);
  const auto up = random_clip({8, side, side, ch}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(conv3d_backward(x, k, up));
}
BENCHMARK(BM_Conv3dBackward)->Args({32, 8})->Args({32, 16})->Unit(benchmark::kMillisecond);

void BM_BranchForwardDesk(benchmark::State& state) {
  const ModelConfig cfg = desk_model_config();
  const auto p = BranchParams<float>::init(cfg, Domain::Rgb, 3, 4);
  const auto clip = random_clip({cfg.frames, cfg.input_size, cfg.input_size, 3}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(branch_prediction(cfg, p, clip));
}
BENCHMARK(BM_BranchForwardDesk)->Unit(benchmark::kMillisecond);

void BM_FixationMap(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, side);
  std::vector<GazeRecord> gaze;
  HomographyWindow homs;
  for (int off = -12; off <= 12; ++off) {
    gaze.push_back({100 + off, u(rng), u(rng), true});
    homs[off] = Homography::translation(u(rng) * 0.05, u(rng) * 0.05);
  }
  for (auto _ : state)
    benchmark::DoNotOptimize(build_fixation_map(gaze, 100, homs, FixmapConfig{}, side, side));
}
BENCHMARK(BM_FixationMap)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_HomographyDlt(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 640), n(-0.5, 0.5);
  Eigen::Matrix3d m;
  m << 1.02, 0.03, 5, -0.02, 0.98, -3, 1e-5, -2e-5, 1;
  const Homography h(m);
  std::vector<Correspondence> pairs;
  for (int i = 0; i < state.range(0); ++i) {
    const Point2 p{u(rng), u(rng)};
    Point2 q = project_point(h, p);
    q.x += n(rng);
    q.y += n(rng);
    pairs.push_back({p, q});
  }
  for (auto _ : state) benchmark::DoNotOptimize(estimate_homography_dlt(pairs));
}
BENCHMARK(BM_HomographyDlt)->Arg(4)->Arg(64)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
