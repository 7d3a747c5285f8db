// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "mcdepth/autodiff.hpp"
#include "mcdepth/model.hpp"
#include "mcdepth/rng.hpp"
#include "mcdepth/simdata.hpp"
#include "mcdepth/stereo.hpp"

namespace {

using namespace mcdepth;

ad::Tensor filled(std::vector<int> shape, std::uint64_t seed) {
  ad::Tensor t(std::move(shape));
  SplitMix64 rng(seed);
  for (double& x : t.data()) x = rng.uniform(-1.0, 1.0);
  return t;
}

// args: channels in, channels out, spatial size
void BM_Conv2dForwardBackward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0)), o = static_cast<int>(state.range(1));
  const int s = static_cast<int>(state.range(2));
  const ad::Tensor x = filled({4, c, s, s}, 1), w = filled({o, c, 3, 3}, 2), b = filled({o}, 3);
  for (auto _ : state) {
    ad::Tape tape;
    const ad::Var y = ad::sum(ad::conv2d(tape.leaf(x), tape.leaf(w), tape.leaf(b), 1));
    tape.backward(y);
    benchmark::DoNotOptimize(y.grad());
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Args({5, 16, 48})->Args({16, 32, 24})->Args({32, 16, 24});

void BM_DepthNetStep(benchmark::State& state) {
  DepthNet net;
  net.init(1);
  const int s = static_cast<int>(state.range(0));
  const ad::Tensor x = filled({4, net.config().input_channels(), s, s}, 4);
  for (auto _ : state) {
    ad::Tape tape;
    const DepthNet::Output out = net.forward(tape, x);
    tape.backward(ad::mean(out.depth));
    benchmark::DoNotOptimize(out.params[0].grad());
  }
}
BENCHMARK(BM_DepthNetStep)->Arg(48)->Arg(64)->Unit(benchmark::kMillisecond);

struct StereoFixture {
  Image left, right;
  StereoRig rig;
  StereoFixture() {
    SceneSpec spec;
    const CameraIntrinsics K{100.0, 100.0, 63.5, 47.5, 128, 96};
    std::tie(left, right) = stereo_pair(spec, K, spec.camera_pose, 0.54);
    rig.K = K;
    rig.baseline = 0.54;
    rig.max_disparity = 32;
  }
};

void BM_StereoMatch(benchmark::State& state) {
  static const StereoFixture f;
  for (auto _ : state) benchmark::DoNotOptimize(match(f.left, f.right, f.rig));
}
BENCHMARK(BM_StereoMatch)->Unit(benchmark::kMillisecond);

void BM_Render(benchmark::State& state) {
  SceneSpec spec;
  const Scene scene = build_scene(spec);
  const CameraIntrinsics K{100.0, 100.0, 63.5, 47.5, 128, 96};
  for (auto _ : state) benchmark::DoNotOptimize(render(scene, K, spec.camera_pose));
}
BENCHMARK(BM_Render)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
