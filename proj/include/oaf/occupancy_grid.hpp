#pragma once

#include "oaf/geometry.hpp"
#include "oaf/image.hpp"
#include "oaf/sonar.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace oaf {

using VoxelIndex = std::array<int, 3>;

/// Evidence thresholds that turn hit/miss counts into binary occupancy.
struct OccupancyRule {
  std::uint32_t k_hit = 3;
  double r_occ = 0.3;

  bool occupied(std::uint32_t hits, std::uint32_t misses) const {
    return hits >= k_hit && hits > 0 &&
           static_cast<double>(hits) >= r_occ * static_cast<double>(hits + misses);
  }
};

struct GridSpec {
  Vec3 origin = Vec3::Zero();  // world position of the (0,0,0) voxel's min corner
  double resolution = 0.05;
  VoxelIndex dims{1, 1, 1};

  void validate() const;
  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  Vec3 extent() const { return Vec3(dims[0], dims[1], dims[2]) * resolution; }
  double diagonal() const { return extent().norm(); }

  bool in_bounds(const VoxelIndex& i) const {
    return i[0] >= 0 && i[1] >= 0 && i[2] >= 0 && i[0] < dims[0] && i[1] < dims[1] &&
           i[2] < dims[2];
  }
  std::size_t linear(const VoxelIndex& i) const {
    return (static_cast<std::size_t>(i[2]) * dims[1] + i[1]) * dims[0] + i[0];
  }
  VoxelIndex unlinear(std::size_t k) const {
    const int x = static_cast<int>(k % dims[0]);
    const int y = static_cast<int>((k / dims[0]) % dims[1]);
    const int z = static_cast<int>(k / (static_cast<std::size_t>(dims[0]) * dims[1]));
    return {x, y, z};
  }
  /// Unbounded lattice cell containing `p`.
  VoxelIndex cell_of(const Vec3& p) const;
  std::optional<VoxelIndex> world_to_index(const Vec3& p) const;
  Vec3 index_to_world_center(const VoxelIndex& i) const;
  Vec3 voxel_min_corner(const VoxelIndex& i) const;

  bool operator==(const GridSpec&) const = default;
};

/// Dense occupancy field with the hit/miss counts that produced it.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  explicit OccupancyGrid(const GridSpec& spec, const OccupancyRule& rule = {});

  const GridSpec& spec() const { return spec_; }
  const OccupancyRule& rule() const { return rule_; }
  double resolution() const { return spec_.resolution; }

  bool occupied(const VoxelIndex& i) const { return occupancy_[spec_.linear(i)] != 0; }
  bool occupied(std::size_t k) const { return occupancy_[k] != 0; }
  std::uint32_t hits(std::size_t k) const { return hits_[k]; }
  std::uint32_t misses(std::size_t k) const { return misses_[k]; }

  const std::vector<std::uint8_t>& occupancy() const { return occupancy_; }
  const std::vector<std::uint32_t>& hit_counts() const { return hits_; }
  const std::vector<std::uint32_t>& miss_counts() const { return misses_; }

  /// Adds per-voxel counts (same spec) and recomputes occupancy.
  void add_counts(std::span<const std::uint32_t> hits, std::span<const std::uint32_t> misses);
  void recompute_occupancy();
  void set_rule(const OccupancyRule& rule);

  /// Directly marks a voxel occupied, bypassing evidence. Ground-truth and
  /// test grids only; counts are set to satisfy the rule.
  void force_occupied(const VoxelIndex& i);

  /// Restores serialized state verbatim.
  void restore(std::vector<std::uint8_t> occupancy, std::vector<std::uint32_t> hits,
               std::vector<std::uint32_t> misses);

  std::size_t occupied_count() const;

 private:
  GridSpec spec_;
  OccupancyRule rule_;
  std::vector<std::uint8_t> occupancy_;
  std::vector<std::uint32_t> hits_;
  std::vector<std::uint32_t> misses_;
};

/// Unique voxels crossed by the elevation arc of one (beam, range) cell.
/// The arc is traversed exactly: every voxel boundary crossing is solved for
/// in closed form, so no voxel clipped by the arc is skipped. Indices outside
/// the grid are dropped. Output is sorted by linear index.
void arc_voxels(const GridSpec& spec, const RigidTransform& sonar_pose, double azimuth,
                double range, double elevation_span, std::vector<std::size_t>& out);

/// Accumulates one scan into `grid` (OpenMP over beams, per-thread count
/// buffers merged by addition). Every voxel on the elevation arc of an
/// above-threshold (beam, bin) cell gains one hit; for beams with at least one
/// return, every voxel on the fan strictly before the first return that this
/// beam did not hit gains one miss.
void integrate_scan(OccupancyGrid& grid, const SonarScan& scan, double intensity_threshold);

/// Fraction of voxels that received any evidence.
double sweep_coverage(const OccupancyGrid& grid);

struct RenderOptions {
  /// <= 0 selects the grid diagonal.
  double max_range = 0.0;
};

/// Acoustic depth image: each pixel ray is sampled at whole multiples of
/// the voxel size; the depth is the first sample at or past the ray's entry
/// into an occupied voxel (the interval before each sample is tested, so
/// thin oblique shells are not stepped over). OpenMP over rows.
DepthImage render_depth(const OccupancyGrid& grid, const PinholeCamera& cam,
                        const RigidTransform& world_from_camera, const RenderOptions& opts = {});

/// Depth along one world ray; NaN when nothing is hit within `max_range`.
float render_ray(const OccupancyGrid& grid, const Vec3& origin, const Vec3& direction,
                 double max_range);

namespace reference {

/// Serial single-threaded counterparts kept as test oracles for the
/// parallel kernels.
void integrate_scan(OccupancyGrid& grid, const SonarScan& scan, double intensity_threshold);
DepthImage render_depth(const OccupancyGrid& grid, const PinholeCamera& cam,
                        const RigidTransform& world_from_camera, const RenderOptions& opts = {});

}  // namespace reference

}  // namespace oaf
