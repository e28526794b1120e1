#include "oaf/errors.hpp"
#include "oaf/occupancy_grid.hpp"
#include "oaf/scene.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace oaf;

namespace {

Scene empty_scene() {
  Scene s;
  s.floor.enabled = false;
  return s;
}

Primitive sphere(const Vec3& c, double radius) {
  return {"ball", PrimitiveKind::Sphere, RigidTransform::from_translation(c),
          Vec3::Constant(2.0 * radius), Rgb{200, 100, 50}};
}

Primitive box(const Vec3& c, const Vec3& dims, double yaw = 0.0) {
  return {"box", PrimitiveKind::Box, RigidTransform::from_axis_angle(Vec3::UnitZ(), yaw, c), dims,
          Rgb{180, 90, 60}};
}

}  // namespace

TEST(Raycast, EmptySceneIsInvalid) {
  const PinholeCamera cam(50, 50, 31.5, 23.5, 64, 48);
  const RaycastResult r = raycast(empty_scene(), cam, RigidTransform::identity());
  EXPECT_EQ(r.depth.valid_count(), 0u);
  for (int o : r.object) EXPECT_EQ(o, -2);
}

TEST(Raycast, SpherePrincipalDepth) {
  Scene s = empty_scene();
  s.objects.push_back(sphere(Vec3(0, 0, 2.0), 0.5));
  const PinholeCamera cam(100, 100, 50, 40, 101, 81);
  const RaycastResult r = raycast(s, cam, RigidTransform::identity());
  EXPECT_NEAR(r.depth.at(50, 40), 1.5, 1e-6);  // float storage
  const auto hit = intersect(s, Vec3::Zero(), Vec3::UnitZ());
  ASSERT_TRUE(hit);
  EXPECT_NEAR(hit->t, 1.5, 1e-9);
  EXPECT_NEAR(hit->normal.dot(Vec3(0, 0, -1)), 1.0, 1e-12);
}

TEST(Raycast, MatchesAnalyticSphereAndPlane) {
  std::mt19937_64 rng(21);
  Scene s;
  s.floor.height = -0.3;
  s.objects.push_back(sphere(Vec3(0.2, -0.1, 0.4), 0.25));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Vec3 o(0.1, 0.2, 1.5);
  for (int i = 0; i < 500; ++i) {
    const Vec3 d = Vec3(0.6 * u(rng), 0.6 * u(rng), -1.0).normalized();
    // Analytic sphere hit.
    const Vec3 oc = o - Vec3(0.2, -0.1, 0.4);
    const double b = oc.dot(d);
    const double disc = b * b - (oc.squaredNorm() - 0.0625);
    double expected = (-0.3 - o.z()) / d.z();
    if (disc >= 0) expected = std::min(expected, -b - std::sqrt(disc));
    const auto hit = intersect(s, o, d);
    ASSERT_TRUE(hit);
    EXPECT_NEAR(hit->t, expected, 1e-9);
  }
}

TEST(Raycast, BoxSilhouetteMatchesProjectedArea) {
  Scene s = empty_scene();
  s.objects.push_back(box(Vec3(0, 0, 1.0), Vec3::Constant(0.2)));
  const PinholeCamera cam(420, 420, 255.5, 191.5, 512, 384);
  const RaycastResult r = raycast(s, cam, RigidTransform::identity());
  // The near face (z = 0.9) bounds the silhouette of a centred cube.
  const double side_px = 420.0 * 0.2 / 0.9;
  const double expected = side_px * side_px;
  EXPECT_NEAR(static_cast<double>(r.depth.valid_count()) / expected, 1.0, 0.02);
}

TEST(Raycast, CylinderAndRotatedBox) {
  Scene s = empty_scene();
  s.objects.push_back({"pipe", PrimitiveKind::Cylinder, RigidTransform::from_translation(Vec3(0, 0, 0)),
                       Vec3(0.2, 0.2, 0.5), Rgb{1, 2, 3}});
  // Side of the cylinder from +x.
  auto side = intersect(s, Vec3(2, 0, 0), Vec3(-1, 0, 0));
  ASSERT_TRUE(side);
  EXPECT_NEAR(side->t, 1.9, 1e-9);
  EXPECT_NEAR(side->normal.x(), 1.0, 1e-12);
  // Cap from above.
  auto cap = intersect(s, Vec3(0.05, 0, 2), Vec3(0, 0, -1));
  ASSERT_TRUE(cap);
  EXPECT_NEAR(cap->t, 1.75, 1e-9);
  EXPECT_NEAR(cap->normal.z(), 1.0, 1e-12);
  // A box yawed by 45 degrees shows its edge at half the diagonal.
  Scene b = empty_scene();
  b.objects.push_back(box(Vec3::Zero(), Vec3(0.2, 0.2, 0.2), std::numbers::pi / 4));
  auto edge = intersect(b, Vec3(1, 0, 0), Vec3(-1, 0, 0));
  ASSERT_TRUE(edge);
  EXPECT_NEAR(edge->t, 1.0 - 0.1 * std::sqrt(2.0), 1e-9);
}

TEST(Primitive, SizeAndBounds) {
  const Primitive b = box(Vec3(1, 2, 3), Vec3(0.4, 0.2, 0.1));
  EXPECT_DOUBLE_EQ(b.size(), 0.4);
  const auto [lo, hi] = b.bounds();
  EXPECT_NEAR((lo - Vec3(0.8, 1.9, 2.95)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((hi - Vec3(1.2, 2.1, 3.05)).norm(), 0.0, 1e-12);
  const Primitive c{"c", PrimitiveKind::Cylinder, RigidTransform::identity(), Vec3(0.1, 0.1, 0.3), {}};
  EXPECT_DOUBLE_EQ(c.size(), 0.3);
  Primitive bad = b;
  bad.dims.y() = 0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(DefaultScene, MatchesPublishedObjectSizes) {
  const Scene s = default_scene();
  ASSERT_EQ(s.objects.size(), 4u);
  EXPECT_EQ(s.objects[0].name, "brick");
  EXPECT_DOUBLE_EQ(s.objects[0].size(), 0.202);
  EXPECT_EQ(s.objects[1].name, "cinder_block");
  EXPECT_DOUBLE_EQ(s.objects[1].size(), 0.395);
  EXPECT_DOUBLE_EQ(s.objects[2].dims.x(), 0.097);
  EXPECT_DOUBLE_EQ(s.objects[3].dims.x(), 0.118);
  for (const Primitive& p : s.objects) {
    // Resting on the floor.
    EXPECT_NEAR(p.bounds().first.z(), s.floor.height, 1e-12);
  }
}

TEST(Turbidity, ClearWaterLeavesConfidenceUnchanged) {
  DepthImage d(3, 1);
  d.set(std::size_t{0}, 0.5f);
  d.set(std::size_t{1}, 2.0f);
  std::vector<float> conf{1.0f, 2.0f, 3.0f};
  attenuate_confidence(conf, d, {0.0, 0.25});
  EXPECT_EQ(conf[0], 1.0f);
  EXPECT_EQ(conf[1], 2.0f);
  EXPECT_EQ(conf[2], 0.0f);  // invalid depth
}

TEST(Turbidity, HalvesAtLnTwo) {
  const TurbidityModel m{4.0, 0.25};
  const double r = std::log(2.0) / (0.25 * 4.0);
  EXPECT_NEAR(m.multiplier(r), 0.5, 1e-12);
  DepthImage d(1, 1);
  d.set(std::size_t{0}, static_cast<float>(r));
  std::vector<float> conf{3.0f};
  attenuate_confidence(conf, d, m);
  EXPECT_NEAR(conf[0], 1.5f, 1e-6);
}

TEST(Turbidity, MonotoneInTurbidityAndRange) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> r(0.0, 3.0);
  std::uniform_real_distribution<double> n(0.0, 12.0);
  for (int i = 0; i < 500; ++i) {
    const double r1 = r(rng), r2 = r(rng), n1 = n(rng), n2 = n(rng);
    const TurbidityModel a{std::min(n1, n2)}, b{std::max(n1, n2)};
    EXPECT_GE(a.multiplier(r1), b.multiplier(r1));
    EXPECT_GE(a.multiplier(std::min(r1, r2)), a.multiplier(std::max(r1, r2)));
    EXPECT_GT(b.multiplier(r1), 0.0);
    EXPECT_LE(b.multiplier(r1), 1.0);
  }
}

TEST(Raycast, TurbidityFadesColourTowardSediment) {
  Scene s = empty_scene();
  s.objects.push_back(sphere(Vec3(0, 0, 1.5), 0.3));
  s.objects[0].color = {20, 200, 240};
  const PinholeCamera cam(40, 40, 7.5, 7.5, 16, 16);
  const RaycastResult clear = raycast(s, cam, RigidTransform::identity());
  const RaycastResult murky = raycast(s, cam, RigidTransform::identity(), {12.0, 0.25});
  auto dist = [&](const RaycastResult& r) {
    const std::uint8_t* p = r.color.at(8, 8);
    double d = 0;
    for (int c = 0; c < 3; ++c) d += std::abs(p[c] - s.sediment[c]);
    return d;
  };
  EXPECT_LT(dist(murky), dist(clear));
}

TEST(SimulateSonar, EmptySceneIsSilent) {
  const SonarScan scan = simulate_sonar(empty_scene(), RigidTransform::identity(), SonarGeometry{});
  for (float v : scan.intensities) EXPECT_EQ(v, 0.0f);
}

TEST(SimulateSonar, BroadsideWallPeaksAtItsRangeBin) {
  Scene s = empty_scene();
  s.objects.push_back(box(Vec3(1.1, 0, 0), Vec3(0.2, 10, 10)));  // face at x = 1.0
  const SonarGeometry g;
  const SonarScan scan = simulate_sonar(s, RigidTransform::identity(), g);
  const int expected = static_cast<int>(std::lround(1.0 / g.max_range * g.bin_count - 0.5));
  const int beam = g.beam_count / 2;
  int best = 0;
  for (int b = 1; b < g.bin_count; ++b) {
    if (scan.at(beam, b) > scan.at(beam, best)) best = b;
  }
  EXPECT_EQ(best, expected);
  float total = 0;
  for (int b = 0; b < g.bin_count; ++b) total += scan.at(beam, b);
  EXPECT_NEAR(total, g.gain, 1e-4);  // every elevation ray returns
}

TEST(SimulateSonar, ElevationIsCollapsed) {
  // The same target mirrored across the fan plane gives the same echo.
  const SonarGeometry g;
  const double el = 0.08;
  Scene up = empty_scene(), down = empty_scene();
  up.objects.push_back(sphere(1.2 * sonar_direction(0.3, el), 0.05));
  down.objects.push_back(sphere(1.2 * sonar_direction(0.3, -el), 0.05));
  const SonarScan a = simulate_sonar(up, RigidTransform::identity(), g);
  const SonarScan b = simulate_sonar(down, RigidTransform::identity(), g);
  EXPECT_EQ(a.intensities, b.intensities);
  float total = 0;
  for (float v : a.intensities) total += v;
  EXPECT_GT(total, 0.0f);
}

TEST(Trajectory, SingleFrameIsValid) {
  const Scene s = default_scene();
  for (auto kind : {TrajectoryKind::Sweep, TrajectoryKind::ObjectCentric}) {
    const auto poses = gen_trajectory(kind, s, 1);
    ASSERT_EQ(poses.size(), 1u);
    EXPECT_TRUE(poses[0].is_finite());
  }
  EXPECT_THROW(gen_trajectory(TrajectoryKind::Sweep, s, 0), Error);
}

TEST(Trajectory, SweepKeepsStandoff) {
  for (const Scene& s : {default_scene(), single_box_scene()}) {
    TrajectoryConfig cfg;
    const auto poses = gen_trajectory(TrajectoryKind::Sweep, s, 240, cfg);
    ASSERT_EQ(poses.size(), 240u);
    for (const auto& p : poses) {
      EXPECT_GE(distance_to_objects(s, p.translation()), cfg.min_standoff);
    }
  }
}

TEST(Trajectory, ObjectCentricStartsStowedAndApproachesEachObject) {
  const Scene s = default_scene();
  TrajectoryConfig cfg;
  const auto poses = gen_trajectory(TrajectoryKind::ObjectCentric, s, 200, cfg);
  ASSERT_EQ(poses.size(), 200u);
  EXPECT_LT((poses.front().translation() - cfg.stowed_position).norm(), 0.2);
  for (const Primitive& obj : s.objects) {
    double closest = 1e9;
    for (const auto& p : poses) {
      closest = std::min(closest, (p.translation() - obj.pose.translation()).norm());
    }
    EXPECT_NEAR(closest, cfg.approach_near, 0.02) << obj.name;
  }
}

TEST(Trajectory, SweepMapsMostOfTheBoxSurface) {
  const Scene s = single_box_scene();
  const GridSpec spec = default_grid_spec(0.05);
  OccupancyGrid grid(spec);
  const auto poses = gen_trajectory(TrajectoryKind::Sweep, s, 240);
  for (const auto& p : poses) integrate_scan(grid, simulate_sonar(s, p, SonarGeometry{}), 1.5);
  const auto surface = voxelize_surfaces(s, spec);
  ASSERT_FALSE(surface.empty());
  std::size_t covered = 0;
  for (std::size_t k : surface) covered += grid.hits(k) >= grid.rule().k_hit ? 1 : 0;
  EXPECT_GE(static_cast<double>(covered) / surface.size(), 0.8);
}

TEST(VoxelizeSurfaces, CubeShellCount) {
  GridSpec spec;
  spec.resolution = 0.05;
  spec.origin = Vec3(-0.5, -0.5, -0.5);
  spec.dims = {20, 20, 20};
  Scene s = empty_scene();
  // Faces sit mid-voxel so each face touches exactly one layer.
  s.objects.push_back(box(Vec3(0.0, 0.0, 0.0), Vec3::Constant(0.25)));
  const auto vox = voxelize_surfaces(s, spec);
  // 6 x 6 x 6 outer layer minus 4 x 4 x 4 interior.
  EXPECT_EQ(vox.size(), 216u - 64u);
}
