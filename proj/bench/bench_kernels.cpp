// Parallel kernels against their serial reference versions.

#include <benchmark/benchmark.h>

#include <random>

#include "rigidflow/losses.hpp"
#include "rigidflow/parallel.hpp"
#include "rigidflow/reference/reference.hpp"
#include "rigidflow/rigid.hpp"
#include "rigidflow/synth.hpp"

using namespace rigidflow;

namespace {

struct Inputs {
  Image image;
  FlowField flow;
  DepthMap depth;
  Intrinsics k;
  PoseSE3 pose;
};

const Inputs& inputs() {
  static const Inputs in = [] {
    Inputs x;
    const int w = 832, h = 256;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    x.image = Image(w, h, 3);
    for (auto& v : x.image.values()) v = u(rng);
    x.flow = FlowField(w, h);
    for (auto& v : x.flow.uv.values()) v = 20.0 * (u(rng) - 0.5);
    x.depth = DepthMap(w, h);
    for (auto& v : x.depth.values.values()) v = 2.0 + 40.0 * u(rng);
    x.depth.valid.fill(1);
    x.k = synth::default_intrinsics(w, h);
    x.pose = pose_from_6dof({0.01, -0.02, 0.005, 0.1, 0.0, 0.8});
    return x;
  }();
  return in;
}

void threads_arg(benchmark::State& state) { set_num_threads(static_cast<int>(state.range(0))); }

void BM_warp(benchmark::State& state) {
  threads_arg(state);
  for (auto _ : state) benchmark::DoNotOptimize(bilinear_warp(inputs().image, inputs().flow));
}

void BM_warp_reference(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(reference::bilinear_warp(inputs().image, inputs().flow));
}

void BM_rigid_flow(benchmark::State& state) {
  threads_arg(state);
  for (auto _ : state) benchmark::DoNotOptimize(rigid_flow(inputs().depth, inputs().pose, inputs().k));
}

void BM_rigid_flow_reference(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(reference::rigid_flow(inputs().depth, inputs().pose, inputs().k));
}

void BM_ssim(benchmark::State& state) {
  threads_arg(state);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(inputs().image, inputs().image, 1));
}

void BM_ssim_reference(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(reference::ssim(inputs().image, inputs().image, 1));
}

void BM_smoothness(benchmark::State& state) {
  threads_arg(state);
  const Mask all = full_mask(inputs().flow.width(), inputs().flow.height());
  for (auto _ : state) benchmark::DoNotOptimize(smoothness_loss(inputs().flow, inputs().image, all, 10.0));
}

void BM_smoothness_reference(benchmark::State& state) {
  const Mask all = full_mask(inputs().flow.width(), inputs().flow.height());
  for (auto _ : state)
    benchmark::DoNotOptimize(reference::smoothness_loss(inputs().flow, inputs().image, all, 10.0));
}

void BM_range_map(benchmark::State& state) {
  threads_arg(state);
  for (auto _ : state) benchmark::DoNotOptimize(range_map(inputs().flow));
}

void BM_range_map_reference(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(reference::range_map(inputs().flow));
}

}  // namespace

BENCHMARK(BM_warp)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_warp_reference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_rigid_flow)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_rigid_flow_reference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ssim)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ssim_reference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_smoothness)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_smoothness_reference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_range_map)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_range_map_reference)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
