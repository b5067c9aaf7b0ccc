// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <cstddef>
#include <vector>

#include "oldm/diffusion.hpp"
#include "oldm/geometry.hpp"
#include "oldm/metrics.hpp"
#include "oldm/networks.hpp"
#include "oldm/params.hpp"
#include "oldm/rng.hpp"
#include "oldm/types.hpp"

namespace {

using namespace oldm;

PointCloud random_cloud(std::size_t n, double extent, std::uint64_t seed) {
  Rng rng(seed, 0);
  PointCloud cloud;
  cloud.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Point p;
    p.x = extent * (2.0 * rng.uniform01() - 1.0);
    p.y = extent * (2.0 * rng.uniform01() - 1.0);
    p.z = 4.0 * rng.uniform01() - 2.0;
    p.intensity = rng.uniform01();
    cloud.points.push_back(p);
  }
  return cloud;
}

Tensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed) {
  Rng rng(seed, 0);
  Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.normal();
  return t;
}

void bm_project_to_range(benchmark::State& state) {
  const SensorConfig sensor;
  const PointCloud cloud = random_cloud(static_cast<std::size_t>(state.range(0)), 40.0, 1);
  for (auto _ : state) {
    RangeImage img = project_to_range(cloud, sensor);
    benchmark::DoNotOptimize(img.data.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_project_to_range)->Arg(10000)->Arg(100000);

void bm_unproject_range(benchmark::State& state) {
  const SensorConfig sensor;
  const RangeImage img = project_to_range(random_cloud(100000, 40.0, 2), sensor);
  for (auto _ : state) {
    PointCloud cloud = unproject_range(img, sensor);
    benchmark::DoNotOptimize(cloud.points.data());
  }
}
BENCHMARK(bm_unproject_range);

void bm_voxelize(benchmark::State& state) {
  PointCloud cloud = random_cloud(1024, 0.9, 3);
  for (auto _ : state) {
    VoxelGrid grid = voxelize(cloud, 16);
    benchmark::DoNotOptimize(grid.data.data());
  }
}
BENCHMARK(bm_voxelize);

void bm_chamfer(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const PointCloud a = random_cloud(n, 10.0, 4);
  const PointCloud b = random_cloud(n, 10.0, 5);
  for (auto _ : state) benchmark::DoNotOptimize(chamfer_distance(a, b));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_chamfer)->Arg(512)->Arg(4096);

void bm_chamfer_brute(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const PointCloud a = random_cloud(n, 10.0, 4);
  const PointCloud b = random_cloud(n, 10.0, 5);
  for (auto _ : state) benchmark::DoNotOptimize(chamfer_distance_brute(a, b));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_chamfer_brute)->Arg(512);

void bm_bev_histogram(benchmark::State& state) {
  const PointCloud cloud = random_cloud(100000, 40.0, 6);
  for (auto _ : state) {
    BevHistogram h = bev_histogram(cloud, 100, 50.0);
    benchmark::DoNotOptimize(h.data.data());
  }
}
BENCHMARK(bm_bev_histogram);

void bm_object_denoiser_infer(benchmark::State& state) {
  ObjectDenoiserConfig cfg;
  cfg.voxels = 16;
  cfg.patch = 4;
  cfg.n_points = 512;
  cfg.token_dim = 32;
  cfg.blocks = 2;
  ParamStore ps;
  ObjectDenoiser den(cfg, ps);
  Rng rng(7, 0);
  ps.init_all(rng);
  const PointCloud cloud = random_cloud(cfg.n_points, 0.9, 8);
  const VoxelGrid grid = voxelize(cloud, cfg.voxels);
  const std::vector<double> cond(cfg.cond_dim, 0.1);
  for (auto _ : state) {
    Tensor eps = den.infer(grid, 10, cond);
    benchmark::DoNotOptimize(eps.data.data());
  }
}
BENCHMARK(bm_object_denoiser_infer);

void bm_scene_denoiser_infer(benchmark::State& state) {
  SceneDenoiserConfig cfg;
  cfg.base_width = 8;
  cfg.depth = 2;
  ParamStore ps;
  SceneDenoiser den(cfg, ps);
  Rng rng(9, 0);
  ps.init_all(rng);
  const Tensor img_t = random_tensor({2, 32, 256}, 10);
  for (auto _ : state) {
    Tensor eps = den.infer(img_t, 10, nullptr);
    benchmark::DoNotOptimize(eps.data.data());
  }
}
BENCHMARK(bm_scene_denoiser_infer);

// One optimizer update on the object stage: loss graph, backward pass,
// gradient accumulation, Adam step.
void bm_object_train_step(benchmark::State& state) {
  ObjectDenoiserConfig cfg;
  cfg.voxels = 16;
  cfg.patch = 4;
  cfg.n_points = 256;
  cfg.token_dim = 32;
  cfg.blocks = 1;
  ParamStore ps;
  ObjectDenoiser den(cfg, ps);
  Rng rng(11, 0);
  ps.init_all(rng);
  AdamOptimizer adam(ps, 1e-4);
  const NoiseSchedule sched = make_schedule(50, 1e-4, 0.02);
  const Tensor x0 = random_tensor({cfg.n_points, 4}, 12);
  const Tensor eps = random_tensor({cfg.n_points, 4}, 13);
  const std::vector<double> f_b(14 * cfg.fourier_freqs, 0.1);
  const std::vector<double> f_t(cfg.text_dim, 0.1);
  for (auto _ : state) {
    ps.zero_grads();
    benchmark::DoNotOptimize(object_loss(den, x0, 25, eps, f_b, f_t, sched));
    adam.step();
  }
}
BENCHMARK(bm_object_train_step);

void bm_scene_train_step(benchmark::State& state) {
  SceneDenoiserConfig cfg;
  cfg.base_width = 8;
  cfg.depth = 2;
  ParamStore ps;
  SceneDenoiser den(cfg, ps);
  Controller ctrl(cfg, ps);
  Rng rng(14, 0);
  ps.init_all(rng);
  AdamOptimizer adam(ps, 1e-4);
  const NoiseSchedule sched = make_schedule(50, 1e-4, 0.02);
  const Tensor img0 = random_tensor({2, 32, 256}, 15);
  const Tensor obj_img = random_tensor({2, 32, 256}, 16);
  const Tensor eps = random_tensor({2, 32, 256}, 17);
  for (auto _ : state) {
    ps.zero_grads();
    benchmark::DoNotOptimize(scene_loss(den, ctrl, img0, obj_img, 25, eps, sched));
    adam.step();
  }
}
BENCHMARK(bm_scene_train_step);

}  // namespace

BENCHMARK_MAIN();
