#pragma once

#include "oaf/geometry.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace oaf {

/// Fan geometry of a multibeam imaging sonar. Sonar frame: x forward,
/// y left, z up. Beams spread in azimuth about z; each beam integrates
/// returns across the full elevation aperture.
struct SonarGeometry {
  int beam_count = 512;
  int bin_count = 256;
  double h_fov = 130.0 * std::numbers::pi / 180.0;
  double v_fov = 20.0 * std::numbers::pi / 180.0;
  double max_range = 2.0;
  double gain = 10.0;

  void validate() const;

  double bin_range(int bin) const { return (bin + 0.5) * max_range / bin_count; }
  double beam_azimuth(int beam) const {
    return -0.5 * h_fov + (beam + 0.5) * h_fov / beam_count;
  }
  /// Bin index holding returns at `range`, or -1 beyond max range.
  int range_to_bin(double range) const {
    if (!(range >= 0.0) || range >= max_range) return -1;
    return static_cast<int>(range / max_range * bin_count);
  }
};

inline Vec3 sonar_direction(double azimuth, double elevation) {
  return {std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth),
          std::sin(elevation)};
}

/// One polar intensity image (beams x range bins), beam-major.
struct SonarScan {
  SonarGeometry geometry;
  RigidTransform pose;  // world-from-sonar
  std::vector<float> intensities;

  SonarScan() = default;
  SonarScan(const SonarGeometry& g, const RigidTransform& p)
      : geometry(g),
        pose(p),
        intensities(static_cast<std::size_t>(g.beam_count) * g.bin_count, 0.0f) {}

  float at(int beam, int bin) const {
    return intensities[static_cast<std::size_t>(beam) * geometry.bin_count + bin];
  }
  float& at(int beam, int bin) {
    return intensities[static_cast<std::size_t>(beam) * geometry.bin_count + bin];
  }
};

}  // namespace oaf
