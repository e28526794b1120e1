#include "oaf/occupancy_grid.hpp"

#include "oaf/errors.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace oaf {

void SonarGeometry::validate() const {
  if (beam_count < 1 || bin_count < 1) throw Error("sonar: beam and bin counts must be >= 1");
  if (!(h_fov > 0) || h_fov > std::numbers::pi || !(v_fov > 0) || v_fov > std::numbers::pi) {
    throw Error("sonar: fields of view must lie in (0, pi]");
  }
  if (!(max_range > 0)) throw Error("sonar: max_range must be positive");
}

void GridSpec::validate() const {
  if (!(resolution > 0) || !std::isfinite(resolution)) throw Error("grid: resolution must be > 0");
  if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1) throw Error("grid: dims must be >= 1");
  if (!origin.allFinite()) throw Error("grid: origin must be finite");
}

VoxelIndex GridSpec::cell_of(const Vec3& p) const {
  const Vec3 q = (p - origin) / resolution;
  return {static_cast<int>(std::floor(q.x())), static_cast<int>(std::floor(q.y())),
          static_cast<int>(std::floor(q.z()))};
}

std::optional<VoxelIndex> GridSpec::world_to_index(const Vec3& p) const {
  if (!p.allFinite()) return std::nullopt;
  const Vec3 q = (p - origin) / resolution;
  // Reject before the int cast so far-away points cannot overflow.
  for (int k = 0; k < 3; ++k) {
    if (!(q[k] >= 0.0) || q[k] >= dims[k]) return std::nullopt;
  }
  VoxelIndex i = cell_of(p);
  if (!in_bounds(i)) return std::nullopt;
  return i;
}

Vec3 GridSpec::voxel_min_corner(const VoxelIndex& i) const {
  return origin + Vec3(i[0], i[1], i[2]) * resolution;
}

Vec3 GridSpec::index_to_world_center(const VoxelIndex& i) const {
  return origin + (Vec3(i[0], i[1], i[2]) + Vec3::Constant(0.5)) * resolution;
}

OccupancyGrid::OccupancyGrid(const GridSpec& spec, const OccupancyRule& rule)
    : spec_(spec), rule_(rule) {
  spec_.validate();
  const std::size_t n = spec_.voxel_count();
  occupancy_.assign(n, 0);
  hits_.assign(n, 0);
  misses_.assign(n, 0);
}

void OccupancyGrid::add_counts(std::span<const std::uint32_t> hits,
                               std::span<const std::uint32_t> misses) {
  if (hits.size() != hits_.size() || misses.size() != misses_.size()) {
    throw Error("add_counts: size mismatch");
  }
  for (std::size_t k = 0; k < hits_.size(); ++k) {
    hits_[k] += hits[k];
    misses_[k] += misses[k];
  }
  recompute_occupancy();
}

void OccupancyGrid::recompute_occupancy() {
  for (std::size_t k = 0; k < hits_.size(); ++k) {
    occupancy_[k] = rule_.occupied(hits_[k], misses_[k]) ? 1 : 0;
  }
}

void OccupancyGrid::set_rule(const OccupancyRule& rule) {
  rule_ = rule;
  recompute_occupancy();
}

void OccupancyGrid::force_occupied(const VoxelIndex& i) {
  const std::size_t k = spec_.linear(i);
  hits_[k] = std::max(hits_[k], std::max<std::uint32_t>(rule_.k_hit, 1));
  misses_[k] = 0;
  occupancy_[k] = 1;
}

void OccupancyGrid::restore(std::vector<std::uint8_t> occupancy, std::vector<std::uint32_t> hits,
                            std::vector<std::uint32_t> misses) {
  const std::size_t n = spec_.voxel_count();
  if (occupancy.size() != n || hits.size() != n || misses.size() != n) {
    throw FormatError("grid restore: array size mismatch");
  }
  occupancy_ = std::move(occupancy);
  hits_ = std::move(hits);
  misses_ = std::move(misses);
}

std::size_t OccupancyGrid::occupied_count() const {
  return static_cast<std::size_t>(std::count(occupancy_.begin(), occupancy_.end(), 1));
}

// ---------------------------------------------------------------------------
// Elevation arcs

void arc_voxels(const GridSpec& spec, const RigidTransform& sonar_pose, double azimuth,
                double range, double elevation_span, std::vector<std::size_t>& out) {
  out.clear();
  const Vec3& t = sonar_pose.translation();
  const Vec3 a = range * (sonar_pose.rotation() * Vec3(std::cos(azimuth), std::sin(azimuth), 0.0));
  const Vec3 b = range * sonar_pose.rotation().col(2);
  const double lo = -0.5 * elevation_span;
  const double hi = 0.5 * elevation_span;

  auto point_at = [&](double phi) -> Vec3 { return t + std::cos(phi) * a + std::sin(phi) * b; };

  double angles[64];
  int n_angles = 0;
  std::vector<double> spill;  // rare: very long arcs relative to the voxel size
  auto push_angle = [&](double phi) {
    if (n_angles < 64) {
      angles[n_angles++] = phi;
    } else {
      spill.push_back(phi);
    }
  };
  push_angle(lo);
  push_angle(hi);

  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  auto wrap_into = [&](double phi) -> std::optional<double> {
    // Shift by whole turns into [lo, hi] if possible.
    const double k = std::round((0.5 * (lo + hi) - phi) / kTwoPi);
    const double shifted = phi + k * kTwoPi;
    if (shifted > lo && shifted < hi) return shifted;
    return std::nullopt;
  };

  for (int axis = 0; axis < 3; ++axis) {
    const double ak = a[axis];
    const double bk = b[axis];
    const double rho = std::hypot(ak, bk);
    if (rho < 1e-15) continue;
    const double psi = std::atan2(bk, ak);
    double fmin = std::min(point_at(lo)[axis], point_at(hi)[axis]);
    double fmax = std::max(point_at(lo)[axis], point_at(hi)[axis]);
    if (wrap_into(psi)) fmax = t[axis] + rho;
    if (wrap_into(psi + std::numbers::pi)) fmin = t[axis] - rho;
    const double o = spec.origin[axis];
    const double res = spec.resolution;
    const long m_begin = static_cast<long>(std::floor((fmin - o) / res)) + 1;
    const long m_end = static_cast<long>(std::ceil((fmax - o) / res)) - 1;
    for (long m = m_begin; m <= m_end; ++m) {
      const double ratio = (o + m * res - t[axis]) / rho;
      if (ratio < -1.0 || ratio > 1.0) continue;
      const double alpha = std::acos(ratio);
      if (auto phi = wrap_into(psi + alpha)) push_angle(*phi);
      if (alpha > 0.0) {
        if (auto phi = wrap_into(psi - alpha)) push_angle(*phi);
      }
    }
  }

  std::vector<double> all(angles, angles + n_angles);
  all.insert(all.end(), spill.begin(), spill.end());
  std::sort(all.begin(), all.end());
  auto add_voxel = [&](double phi) {
    if (auto idx = spec.world_to_index(point_at(phi))) out.push_back(spec.linear(*idx));
  };
  if (all.size() == 2 && all[1] - all[0] <= 0.0) {
    add_voxel(all[0]);
  } else {
    for (std::size_t k = 0; k + 1 < all.size(); ++k) {
      if (all[k + 1] - all[k] > 1e-12) add_voxel(0.5 * (all[k] + all[k + 1]));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

namespace {

struct BeamScratch {
  std::vector<std::uint32_t> hit_stamp;
  std::vector<std::uint32_t> miss_stamp;
  std::vector<std::size_t> arc;

  explicit BeamScratch(std::size_t voxels) : hit_stamp(voxels, 0), miss_stamp(voxels, 0) {}
};

void accumulate_beam(const GridSpec& spec, const SonarScan& scan, int beam, double threshold,
                     std::uint32_t* hits, std::uint32_t* misses, BeamScratch& scratch) {
  const SonarGeometry& g = scan.geometry;
  int first = -1;
  for (int bin = 0; bin < g.bin_count; ++bin) {
    if (scan.at(beam, bin) > threshold) {
      first = bin;
      break;
    }
  }
  if (first < 0) return;

  const std::uint32_t stamp = static_cast<std::uint32_t>(beam) + 1;
  const double azimuth = g.beam_azimuth(beam);
  for (int bin = first; bin < g.bin_count; ++bin) {
    if (!(scan.at(beam, bin) > threshold)) continue;
    arc_voxels(spec, scan.pose, azimuth, g.bin_range(bin), g.v_fov, scratch.arc);
    for (std::size_t v : scratch.arc) {
      hits[v] += 1;
      scratch.hit_stamp[v] = stamp;
    }
  }
  for (int bin = 0; bin < first; ++bin) {
    arc_voxels(spec, scan.pose, azimuth, g.bin_range(bin), g.v_fov, scratch.arc);
    for (std::size_t v : scratch.arc) {
      if (scratch.hit_stamp[v] == stamp || scratch.miss_stamp[v] == stamp) continue;
      scratch.miss_stamp[v] = stamp;
      misses[v] += 1;
    }
  }
}

void check_scan(const SonarScan& scan) {
  scan.geometry.validate();
  if (!scan.pose.is_finite()) throw Error("integrate_scan: non-finite sonar pose");
  if (scan.intensities.size() !=
      static_cast<std::size_t>(scan.geometry.beam_count) * scan.geometry.bin_count) {
    throw Error("integrate_scan: intensity array does not match geometry");
  }
}

}  // namespace

void integrate_scan(OccupancyGrid& grid, const SonarScan& scan, double intensity_threshold) {
  check_scan(scan);
  const GridSpec& spec = grid.spec();
  const std::size_t n = spec.voxel_count();
  const int beams = scan.geometry.beam_count;

  std::vector<std::uint32_t> hits(n, 0);
  std::vector<std::uint32_t> misses(n, 0);
#pragma omp parallel
  {
    std::vector<std::uint32_t> local_hits(n, 0);
    std::vector<std::uint32_t> local_misses(n, 0);
    BeamScratch scratch(n);
#pragma omp for schedule(dynamic, 8) nowait
    for (int beam = 0; beam < beams; ++beam) {
      accumulate_beam(spec, scan, beam, intensity_threshold, local_hits.data(),
                      local_misses.data(), scratch);
    }
#pragma omp critical(oaf_integrate_merge)
    {
      for (std::size_t k = 0; k < n; ++k) {
        hits[k] += local_hits[k];
        misses[k] += local_misses[k];
      }
    }
  }
  grid.add_counts(hits, misses);
}

double sweep_coverage(const OccupancyGrid& grid) {
  const auto& h = grid.hit_counts();
  const auto& m = grid.miss_counts();
  if (h.empty()) return 0.0;
  std::size_t seen = 0;
  for (std::size_t k = 0; k < h.size(); ++k) seen += (h[k] + m[k] > 0) ? 1 : 0;
  return static_cast<double>(seen) / static_cast<double>(h.size());
}

// ---------------------------------------------------------------------------
// Depth rendering

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double voxel_entry(const GridSpec& spec, const VoxelIndex& c, const Vec3& o, const Vec3& d) {
  double entry = 0.0;
  const Vec3 lo = spec.voxel_min_corner(c);
  for (int k = 0; k < 3; ++k) {
    if (d[k] == 0.0) continue;
    const double ta = (lo[k] - o[k]) / d[k];
    const double tb = (lo[k] + spec.resolution - o[k]) / d[k];
    entry = std::max(entry, std::min(ta, tb));
  }
  return entry;
}

float quantize_hit(double entry, double step, double max_range) {
  const double k = std::max(1.0, std::ceil(entry / step - 1e-9));
  const double depth = k * step;
  if (depth > max_range + 1e-9) return DepthImage::kInvalid;
  return static_cast<float>(depth);
}

struct Dda {
  VoxelIndex cell;
  VoxelIndex step;
  Vec3 t_max;
  Vec3 t_delta;

  Dda(const GridSpec& spec, const Vec3& o, const Vec3& d, const VoxelIndex& start) : cell(start) {
    for (int k = 0; k < 3; ++k) {
      if (d[k] > 0) {
        step[k] = 1;
        t_max[k] = (spec.origin[k] + (cell[k] + 1) * spec.resolution - o[k]) / d[k];
        t_delta[k] = spec.resolution / d[k];
      } else if (d[k] < 0) {
        step[k] = -1;
        t_max[k] = (spec.origin[k] + cell[k] * spec.resolution - o[k]) / d[k];
        t_delta[k] = -spec.resolution / d[k];
      } else {
        step[k] = 0;
        t_max[k] = kInf;
        t_delta[k] = kInf;
      }
    }
  }

  /// Advances one cell; returns the ray parameter at which the new cell is entered.
  double advance() {
    int axis = 0;
    if (t_max[1] < t_max[axis]) axis = 1;
    if (t_max[2] < t_max[axis]) axis = 2;
    const double t = t_max[axis];
    cell[axis] += step[axis];
    t_max[axis] += t_delta[axis];
    return t;
  }
};

bool clip_to_grid(const GridSpec& spec, const Vec3& o, const Vec3& d, double& t0, double& t1) {
  const Vec3 lo = spec.origin;
  const Vec3 hi = spec.origin + spec.extent();
  for (int k = 0; k < 3; ++k) {
    if (d[k] == 0.0) {
      if (o[k] < lo[k] || o[k] >= hi[k]) return false;
      continue;
    }
    double ta = (lo[k] - o[k]) / d[k];
    double tb = (hi[k] - o[k]) / d[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  return t0 <= t1;
}

double resolve_range(const OccupancyGrid& grid, const RenderOptions& opts) {
  return opts.max_range > 0 ? opts.max_range : grid.spec().diagonal();
}

}  // namespace

float render_ray(const OccupancyGrid& grid, const Vec3& origin, const Vec3& direction,
                 double max_range) {
  const GridSpec& spec = grid.spec();
  double t0 = 0.0;
  double t1 = max_range;
  VoxelIndex start = spec.cell_of(origin);
  if (!spec.in_bounds(start)) {
    if (!clip_to_grid(spec, origin, direction, t0, t1)) return DepthImage::kInvalid;
    // The entry cell is clamped against round-off at the grid faces.
    start = spec.cell_of(origin + direction * t0);
    for (int k = 0; k < 3; ++k) start[k] = std::clamp(start[k], 0, spec.dims[k] - 1);
  }
  Dda dda(spec, origin, direction, start);
  for (;;) {
    if (!spec.in_bounds(dda.cell)) return DepthImage::kInvalid;
    if (grid.occupied(dda.cell)) {
      return quantize_hit(voxel_entry(spec, dda.cell, origin, direction), spec.resolution,
                          max_range);
    }
    if (dda.advance() > t1) return DepthImage::kInvalid;
  }
}

DepthImage render_depth(const OccupancyGrid& grid, const PinholeCamera& cam,
                        const RigidTransform& world_from_camera, const RenderOptions& opts) {
  const double max_range = resolve_range(grid, opts);
  DepthImage out(cam.width(), cam.height());
  const Vec3 origin = world_from_camera.translation();
  const Mat3& rot = world_from_camera.rotation();
  const int w = cam.width();
#pragma omp parallel for schedule(dynamic, 4)
  for (int v = 0; v < cam.height(); ++v) {
    for (int u = 0; u < w; ++u) {
      out.set(u, v, render_ray(grid, origin, rot * cam.ray(u, v), max_range));
    }
  }
  return out;
}

namespace reference {

void integrate_scan(OccupancyGrid& grid, const SonarScan& scan, double intensity_threshold) {
  check_scan(scan);
  const GridSpec& spec = grid.spec();
  const std::size_t n = spec.voxel_count();
  std::vector<std::uint32_t> hits(n, 0);
  std::vector<std::uint32_t> misses(n, 0);
  BeamScratch scratch(n);
  for (int beam = 0; beam < scan.geometry.beam_count; ++beam) {
    accumulate_beam(spec, scan, beam, intensity_threshold, hits.data(), misses.data(), scratch);
  }
  grid.add_counts(hits, misses);
}

DepthImage render_depth(const OccupancyGrid& grid, const PinholeCamera& cam,
                        const RigidTransform& world_from_camera, const RenderOptions& opts) {
  // Walks the unbounded lattice from the camera's own cell, with no grid
  // clipping, testing occupancy only inside the grid.
  const GridSpec& spec = grid.spec();
  const double max_range = resolve_range(grid, opts);
  DepthImage out(cam.width(), cam.height());
  const Vec3 o = world_from_camera.translation();
  for (int v = 0; v < cam.height(); ++v) {
    for (int u = 0; u < cam.width(); ++u) {
      const Vec3 d = world_from_camera.rotation() * cam.ray(u, v);
      Dda dda(spec, o, d, spec.cell_of(o));
      double t = 0.0;
      float depth = DepthImage::kInvalid;
      while (t <= max_range) {
        if (spec.in_bounds(dda.cell) && grid.occupied(dda.cell)) {
          depth = quantize_hit(voxel_entry(spec, dda.cell, o, d), spec.resolution, max_range);
          break;
        }
        t = dda.advance();
      }
      out.set(u, v, depth);
    }
  }
  return out;
}

}  // namespace reference

}  // namespace oaf
