// Parallel kernels against their serial reference implementations.

#include "oaf/occupancy_grid.hpp"
#include "oaf/oracle_provider.hpp"
#include "oaf/pointmap.hpp"
#include "oaf/scale.hpp"
#include "oaf/scene.hpp"
#include "oaf/workflows.hpp"

#include <benchmark/benchmark.h>

#include <map>
#include <random>

using namespace oaf;

namespace {

const PinholeCamera kCam(420, 420, 255.5, 191.5, 512, 384);

struct Fixture {
  Scene scene = default_scene();
  std::vector<SonarScan> scans;
  OccupancyGrid grid{default_grid_spec(0.05)};
  RigidTransform view;
  PointmapPrediction frame, keyframe;
  RigidTransform keyframe_from_frame;
  DepthPairSet pairs;

  Fixture() {
    const auto sonar = gen_trajectory(TrajectoryKind::Sweep, scene, 240);
    for (const auto& p : sonar) scans.push_back(simulate_sonar(scene, p, SonarGeometry{}));
    for (const auto& s : scans) integrate_scan(grid, s, kDefaultSonarThreshold);

    const auto cams = gen_trajectory(TrajectoryKind::ObjectCentric, scene, 200);
    view = cams[150];
    std::map<std::int64_t, RigidTransform> poses{{0, cams[150]}, {1, cams[152]}};
    OracleConfig oc;
    oc.forced_scale = 1.0;
    OracleProvider oracle(scene, kCam, poses, oc);
    Image a(kCam.width(), kCam.height()), b(kCam.width(), kCam.height());
    a.frame_id = 0;
    b.frame_id = 1;
    keyframe = oracle.predict(a, a);
    frame = oracle.predict(b, b);
    keyframe_from_frame = cams[150].inverse() * cams[152];

    pairs = filter_depth_pairs(optical_depth(frame), render_depth(grid, kCam, cams[152]), frame.C_i);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_IntegrateScan(benchmark::State& st) {
  const Fixture& f = fixture();
  OccupancyGrid grid(f.grid.spec());
  std::size_t i = 0;
  for (auto _ : st) integrate_scan(grid, f.scans[i++ % f.scans.size()], kDefaultSonarThreshold);
}

void BM_IntegrateScanReference(benchmark::State& st) {
  const Fixture& f = fixture();
  OccupancyGrid grid(f.grid.spec());
  std::size_t i = 0;
  for (auto _ : st) {
    reference::integrate_scan(grid, f.scans[i++ % f.scans.size()], kDefaultSonarThreshold);
  }
}

void BM_RenderDepth(benchmark::State& st) {
  const Fixture& f = fixture();
  for (auto _ : st) benchmark::DoNotOptimize(render_depth(f.grid, kCam, f.view));
}

void BM_RenderDepthReference(benchmark::State& st) {
  const Fixture& f = fixture();
  for (auto _ : st) benchmark::DoNotOptimize(reference::render_depth(f.grid, kCam, f.view));
}

void BM_MatchProjective(benchmark::State& st) {
  const Fixture& f = fixture();
  for (auto _ : st) {
    benchmark::DoNotOptimize(
        match_projective(frame_view(f.frame), frame_view(f.keyframe), f.keyframe_from_frame, kCam));
  }
}

void BM_MatchProjectiveReference(benchmark::State& st) {
  const Fixture& f = fixture();
  for (auto _ : st) {
    benchmark::DoNotOptimize(reference::match_projective(frame_view(f.frame), frame_view(f.keyframe),
                                                         f.keyframe_from_frame, kCam));
  }
}

void BM_RansacScale(benchmark::State& st) {
  const Fixture& f = fixture();
  for (auto _ : st) {
    std::mt19937_64 rng(7);
    benchmark::DoNotOptimize(ransac_scale(f.pairs, RansacConfig{}, rng));
  }
  st.counters["pairs"] = static_cast<double>(f.pairs.size());
}

void BM_RansacScaleReference(benchmark::State& st) {
  const Fixture& f = fixture();
  for (auto _ : st) {
    std::mt19937_64 rng(7);
    benchmark::DoNotOptimize(reference::ransac_scale(f.pairs, RansacConfig{}, rng));
  }
  st.counters["pairs"] = static_cast<double>(f.pairs.size());
}

}  // namespace

BENCHMARK(BM_IntegrateScan)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_IntegrateScanReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RenderDepth)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RenderDepthReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MatchProjective)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MatchProjectiveReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RansacScale)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RansacScaleReference)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
