#pragma once

#include "oaf/geometry.hpp"
#include "oaf/image.hpp"
#include "oaf/occupancy_grid.hpp"
#include "oaf/pipeline.hpp"
#include "oaf/pointmap.hpp"
#include "oaf/scene.hpp"
#include "oaf/sonar.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace oaf {

namespace fs = std::filesystem;

// Depth image: "OADP", u32 height, u32 width, u32 reserved (0), then
// height*width float32 row-major. Invalid pixels are written as 0.
void write_depth(const fs::path& path, const DepthImage& depth);
DepthImage read_depth(const fs::path& path);

// Grid: "OAGR", u32 version (1), f64 origin[3], f64 resolution, u32 dims[3],
// u32 k_hit, f64 r_occ, u64 run count, runs of (u8 value, u32 length) over
// the linear occupancy order, then u32 hits[N] and u32 misses[N].
void write_grid(const fs::path& path, const OccupancyGrid& grid);
OccupancyGrid read_grid(const fs::path& path);

// Prediction cache: "OAPM", u32 height, u32 width, u32 feature_dim, then
// float32 arrays X_ii (3/px), X_ij (3/px), C_i, C_j, D_i (d/px), D_j (d/px),
// Q_i, Q_j.
void write_prediction(const fs::path& path, const PointmapPrediction& pred);
PointmapPrediction read_prediction(const fs::path& path);

// Sonar scan: "OASN", u32 version (2), u32 beams, u32 bins, f64 h_fov,
// f64 v_fov, f64 max_range, f64 gain (radians, meters), f64 t[3],
// f64 R[9] row-major world-from-sonar, then beams*bins float32,
// beam-major.
void write_sonar(const fs::path& path, const SonarScan& scan);
SonarScan read_sonar(const fs::path& path);

/// Binary little-endian PLY: float x, y, z and uchar red, green, blue.
void write_ply(const fs::path& path, const FusedCloud& cloud);
void write_ply(std::ostream& os, const FusedCloud& cloud);
FusedCloud read_ply(const fs::path& path);

/// 8-bit RGB PNG.
void write_png(const fs::path& path, const Image& img);
Image read_png(const fs::path& path);
/// Raw fallback: "ORGB", u32 width, u32 height, then width*height*3 bytes.
void write_raw_rgb(const fs::path& path, const Image& img);
Image read_raw_rgb(const fs::path& path);
/// Picks the codec from the extension (.png or .rgb).
Image read_image(const fs::path& path);

/// `key = value` lines; '#' starts a comment. Later keys override earlier ones.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const fs::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  const std::map<std::string, std::string>& values() const { return values_; }
  /// Keys never read through a getter; surfaced as typo warnings.
  std::vector<std::string> unused() const;

 private:
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, bool> used_;
};

PipelineConfig pipeline_config_from(const Config& cfg);
OccupancyRule occupancy_rule_from(const Config& cfg);

struct DatasetManifest {
  int frame_count = 0;
  int sonar_count = 0;
  int width = 512;
  int height = 384;
  double fx = 420.0, fy = 420.0, cx = 255.5, cy = 191.5;
  SonarGeometry sonar;
  double ntu = 0.0;
  double beta = 0.25;
  std::uint64_t seed = 1;
  std::string trajectory = "object_centric";
  std::string image_format = "png";
  GridSpec grid;
  Scene scene;

  PinholeCamera camera() const { return {fx, fy, cx, cy, width, height}; }
};

void write_manifest(const fs::path& path, const DatasetManifest& m);
DatasetManifest read_manifest(const fs::path& path);

/// frames/NNNNNN.<ext>, sonar/NNNNNN.bin.
fs::path frame_path(const fs::path& dataset, int index, const std::string& format);
fs::path sonar_path(const fs::path& dataset, int index);

/// Checks that the manifest's files exist and images match the intrinsics.
void validate_dataset(const fs::path& dataset, const DatasetManifest& m);

}  // namespace oaf
