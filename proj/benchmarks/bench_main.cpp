// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// Microbenchmarks for the hot paths: ray casting, framing votes, hulls, RLE.

#include <benchmark/benchmark.h>

#include <random>

#include "sg3d/framing.hpp"
#include "sg3d/geometry/bvh.hpp"
#include "sg3d/geometry/hull.hpp"
#include "sg3d/geometry/voxel.hpp"
#include "sg3d/mask.hpp"
#include "sg3d/mvc.hpp"
#include "sg3d/synthetic.hpp"

namespace {

using namespace sg3d;

// Built once; the default scene is about the size the pipeline sees.
struct Scene {
  synthetic::SyntheticScene scene = synthetic::generate_scene(3);
  geometry::Bvh bvh = geometry::Bvh::build(scene.mesh);
};

const Scene& scene() {
  static const Scene s;
  return s;
}

std::vector<Vec3> random_dirs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<Vec3> out(n);
  for (auto& d : out) d = Vec3(g(rng), g(rng), g(rng)).normalized();
  return out;
}

void BM_BvhBuild(benchmark::State& state) {
  const auto& mesh = scene().scene.mesh;
  for (auto _ : state) benchmark::DoNotOptimize(geometry::Bvh::build(mesh));
  state.counters["faces"] = static_cast<double>(mesh.num_faces());
}
BENCHMARK(BM_BvhBuild)->Unit(benchmark::kMillisecond);

void BM_Raycast(benchmark::State& state) {
  const auto& s = scene();
  const Vec3 origin = s.scene.panoramas.front().pose.position;
  const auto dirs = random_dirs(4096, 1);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(s.bvh.raycast(origin, dirs[i++ & 4095]));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Raycast);

void BM_AllHits(benchmark::State& state) {
  const auto& s = scene();
  const Vec3 origin = s.scene.panoramas.front().pose.position;
  const auto dirs = random_dirs(4096, 2);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(s.bvh.all_hits(origin, dirs[i++ & 4095]));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_AllHits);

void BM_CastPanorama(benchmark::State& state) {
  const auto& s = scene();
  for (auto _ : state) benchmark::DoNotOptimize(mvc::cast_panorama(s.scene.panoramas.front(), s.bvh));
}
BENCHMARK(BM_CastPanorama)->Unit(benchmark::kMillisecond);

// Detections of one panorama over the full 225-view grid.
struct FramingInput {
  framing::ViewGrid grid = framing::sample_view_grid();
  std::vector<framing::ViewDetection> detections;
  int width = 0, height = 0;

  FramingInput() {
    const auto& s = scene();
    const auto truth = synthetic::render_all_truth(s.scene, s.bvh, 1);
    const synthetic::SyntheticDetector det(s.scene, truth, {}, 7);
    const auto& pano = s.scene.panoramas.front();
    std::vector<detector::DetectionRecord> records;
    for (const auto& v : grid.views)
      for (auto& r : det.detect(0, v.camera())) records.push_back(std::move(r));
    width = pano.width;
    height = pano.height;
    detections = framing::prepare_detections(records, pano.id, grid);
  }
};

const FramingInput& framing_input() {
  static const FramingInput f;
  return f;
}

void BM_FramingFootprints(benchmark::State& state) {
  const auto& f = framing_input();
  for (auto _ : state) {
    auto d = f.detections;
    framing::compute_footprints(d, f.grid, f.width, f.height);
    benchmark::DoNotOptimize(d.data());
  }
  state.counters["detections"] = static_cast<double>(f.detections.size());
}
BENCHMARK(BM_FramingFootprints)->Unit(benchmark::kMillisecond);

void BM_FramingVotes(benchmark::State& state) {
  const auto& f = framing_input();
  auto d = f.detections;
  framing::compute_footprints(d, f.grid, f.width, f.height);
  for (auto _ : state) benchmark::DoNotOptimize(framing::accumulate_votes(d, f.width, f.height));
}
BENCHMARK(BM_FramingVotes)->Unit(benchmark::kMillisecond);

void BM_ConvexHull(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<Vec3> pts(static_cast<std::size_t>(state.range(0)));
  for (auto& p : pts) p = Vec3(g(rng), g(rng), g(rng));
  for (auto _ : state) benchmark::DoNotOptimize(geometry::convex_hull_volume(pts));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ConvexHull)->RangeMultiplier(10)->Range(100, 100000)->Complexity();

void BM_Voxelize(benchmark::State& state) {
  const auto& s = scene().scene;
  const auto& faces = s.objects.front().face_ids;
  for (auto _ : state) benchmark::DoNotOptimize(geometry::voxelize(s.mesh, faces, 0.05));
}
BENCHMARK(BM_Voxelize)->Unit(benchmark::kMicrosecond);

BinaryMask blob_mask(int size) {
  BinaryMask m(size, size);
  const double c = size / 2.0, r = size / 3.0;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      if ((x - c) * (x - c) + (y - c) * (y - c) < r * r) m.set(x, y);
  return m;
}

void BM_RleEncode(benchmark::State& state) {
  const BinaryMask m = blob_mask(800);
  for (auto _ : state) benchmark::DoNotOptimize(rle_encode(m));
}
BENCHMARK(BM_RleEncode)->Unit(benchmark::kMicrosecond);

void BM_RleDecode(benchmark::State& state) {
  const Rle r = rle_encode(blob_mask(800));
  for (auto _ : state) benchmark::DoNotOptimize(rle_decode(r));
}
BENCHMARK(BM_RleDecode)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
