#pragma once

#include "oaf/io.hpp"
#include "oaf/oracle_provider.hpp"
#include "oaf/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace oaf {

struct SimulateOptions {
  std::string scene = "default";  // default | single_box | empty
  std::string trajectory = "object_centric";  // camera path: object_centric | sweep
  int frames = 200;
  int sonar_scans = 240;
  double ntu = 0.0;
  double beta = 0.25;
  double resolution = 0.05;
  int width = 512;
  int height = 384;
  double focal = 420.0;
  std::string image_format = "png";
  std::uint64_t seed = 1;
  TrajectoryConfig trajectory_cfg;
  SonarSimOptions sonar_sim;

  static SimulateOptions from_config(const Config& cfg);
};

Scene scene_by_name(const std::string& name);

/// Camera on the same wrist as the sonar, looking along the sonar's x axis.
RigidTransform camera_from_sonar_mount();

/// Writes frames/, sonar/, poses.txt and scene.json. Deterministic in the options.
DatasetManifest simulate_dataset(const fs::path& out, const SimulateOptions& opts);

inline constexpr double kDefaultSonarThreshold = 2.5;

/// Integrates every sonar scan of the dataset into its manifest grid.
OccupancyGrid map_dataset(const fs::path& dataset, const OccupancyRule& rule,
                          double intensity_threshold = kDefaultSonarThreshold);

struct ReconstructOptions {
  PipelineConfig pipeline;
  std::string provider = "oracle";  // oracle | external
  std::string provider_command;
  std::chrono::milliseconds provider_timeout{30000};
  OracleConfig oracle;
  /// 0 = replay every frame; otherwise frames arriving while one is being
  /// processed are dropped, as with a live stream at this rate.
  double realtime_fps = 0.0;
  int max_frames = -1;

  static ReconstructOptions from_config(const Config& cfg, std::uint64_t seed);
};

struct ReconstructResult {
  FusedCloud cloud;
  std::vector<FrameDiagnostics> diagnostics;
  std::string graph_dump;
  std::size_t keyframes = 0;
  std::size_t skipped = 0;
  std::size_t dropped = 0;
  std::size_t recovery_entries = 0;
  bool initialized = false;
  std::vector<double> frame_seconds;  // per processed frame, provider excluded
};

/// Oracle provider for a simulated dataset (ground-truth scene and poses).
std::unique_ptr<OracleProvider> make_oracle(const fs::path& dataset, const DatasetManifest& m,
                                            const OracleConfig& cfg);

ReconstructResult reconstruct_dataset(const fs::path& dataset, const OccupancyGrid& grid,
                                      const ReconstructOptions& opts,
                                      PointmapProvider* provider_override = nullptr);

/// Per-object measurement rows for every object in the manifest.
std::vector<MeasureResult> measure_cloud(const FusedCloud& cloud, const DatasetManifest& m);
void print_measurements(std::ostream& os, const std::vector<MeasureResult>& rows);

}  // namespace oaf
