#pragma once

#include "oaf/geometry.hpp"
#include "oaf/image.hpp"
#include "oaf/occupancy_grid.hpp"
#include "oaf/sonar.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace oaf {

using Rgb = std::array<std::uint8_t, 3>;

enum class PrimitiveKind { Box, Cylinder, Sphere };

/// Solid primitive centered on its pose. Box: full side lengths. Cylinder:
/// dims = (diameter, diameter, height) about the local z axis. Sphere:
/// dims.x() is the diameter.
struct Primitive {
  std::string name;
  PrimitiveKind kind = PrimitiveKind::Box;
  RigidTransform pose;  // world-from-object
  Vec3 dims = Vec3::Constant(0.1);
  Rgb color{200, 200, 200};

  void validate() const;
  /// Largest edge-to-edge extent of the solid, the size reported by `measure`.
  double size() const;
  /// World-axis-aligned bounds.
  std::pair<Vec3, Vec3> bounds() const;
};

struct Floor {
  bool enabled = true;
  double height = 0.0;
  Rgb color{140, 128, 98};
};

struct Scene {
  std::vector<Primitive> objects;
  Floor floor;
  /// Colour turbid water fades toward.
  Rgb sediment{140, 128, 98};
};

/// Paper-table sized objects (brick, cinder block, pipe, mug) on a floor.
Scene default_scene();
/// A single 0.2 m box, no floor.
Scene single_box_scene(double side = 0.2);

struct RayHit {
  double t = 0.0;
  Vec3 normal = Vec3::UnitZ();
  int object = -1;  // -1 for the floor
};

std::optional<RayHit> intersect(const Scene& scene, const Vec3& origin, const Vec3& dir,
                                double t_max = 1e9);

/// Exponential range attenuation of optical confidence in turbid water.
struct TurbidityModel {
  double ntu = 0.0;
  double beta = 0.25;  // per meter per NTU

  double multiplier(double range) const;
};

void attenuate_confidence(std::span<float> conf, const DepthImage& depth,
                          const TurbidityModel& model);

struct RaycastResult {
  DepthImage depth;
  Image color;
  /// |cos| of the incidence angle per pixel, 0 where invalid.
  std::vector<float> incidence;
  std::vector<int> object;  // -1 floor, -2 no hit
};

/// Ground-truth depth and colour (hazed toward the sediment colour by
/// `turbidity`). OpenMP over rows.
RaycastResult raycast(const Scene& scene, const PinholeCamera& cam,
                      const RigidTransform& world_from_camera,
                      const TurbidityModel& turbidity = {});

struct SonarSimOptions {
  int elevation_rays = 32;
};

/// Elevation-collapsed echo image: each beam casts a vertical fan of rays
/// and bins first-hit ranges; intensity = gain * hits / elevation_rays.
SonarScan simulate_sonar(const Scene& scene, const RigidTransform& world_from_sonar,
                         const SonarGeometry& geometry, const SonarSimOptions& opts = {});

enum class TrajectoryKind { Sweep, ObjectCentric };

struct TrajectoryConfig {
  // Sweep (sonar poses, x-forward frame).
  double sweep_radius = 0.7;
  double sweep_height = 0.6;
  double sweep_arc = 2.0 * 3.141592653589793;
  double sweep_pitch_min = 0.35;  // radians below horizontal
  double sweep_pitch_max = 1.05;
  int sweep_tilt_cycles = 4;
  double sweep_roll_max = 1.5707963267948966;  // wrist roll amplitude, radians
  int sweep_roll_cycles = 11;
  double min_standoff = 0.4;
  // Object-centric (camera poses, z-forward frame).
  Vec3 stowed_position{0.0, -0.9, 0.9};
  double approach_far = 0.85;
  double approach_near = 0.35;
  double approach_elevation = 0.9;  // radians above horizontal of the view ray
  double transit_fraction = 0.3;
};

/// Sweep returns world-from-sonar poses; ObjectCentric returns
/// world-from-camera poses.
std::vector<RigidTransform> gen_trajectory(TrajectoryKind kind, const Scene& scene, int n_frames,
                                           const TrajectoryConfig& cfg = {});

/// Camera looking from `eye` toward `target` with world +z up.
RigidTransform look_at(const Vec3& eye, const Vec3& target);
/// Sonar at `position`, yawed then pitched down by `pitch`.
RigidTransform sonar_pose(const Vec3& position, double yaw, double pitch, double roll = 0.0);

/// Distance from `p` to the nearest object surface (floor excluded).
double distance_to_objects(const Scene& scene, const Vec3& p);

/// Linear indices of voxels touched by object surfaces (and the floor if
/// enabled), by dense surface sampling at `spacing`.
std::vector<std::size_t> voxelize_surfaces(const Scene& scene, const GridSpec& spec,
                                           double spacing = 0.0);

/// Tank-sized grid around the default workspace.
GridSpec default_grid_spec(double resolution = 0.05);

}  // namespace oaf
