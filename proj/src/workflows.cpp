#include "oaf/workflows.hpp"

#include "oaf/errors.hpp"
#include "oaf/external_provider.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <thread>

namespace oaf {

Scene scene_by_name(const std::string& name) {
  if (name == "default") return default_scene();
  if (name == "single_box") return single_box_scene();
  if (name == "empty") {
    Scene s;
    s.floor.enabled = false;
    return s;
  }
  throw Error("unknown scene '" + name + "' (expected default, single_box or empty)");
}

SimulateOptions SimulateOptions::from_config(const Config& c) {
  SimulateOptions o;
  o.scene = c.get("scene", o.scene);
  o.trajectory = c.get("trajectory", o.trajectory);
  o.frames = static_cast<int>(c.get_int("frames", o.frames));
  o.sonar_scans = static_cast<int>(c.get_int("sonar_scans", o.sonar_scans));
  o.ntu = c.get_double("ntu", o.ntu);
  o.beta = c.get_double("beta", o.beta);
  o.resolution = c.get_double("grid_resolution", o.resolution);
  o.width = static_cast<int>(c.get_int("image_width", o.width));
  o.height = static_cast<int>(c.get_int("image_height", o.height));
  o.focal = c.get_double("focal_length", o.focal);
  o.image_format = c.get("image_format", o.image_format);
  o.seed = static_cast<std::uint64_t>(c.get_int("seed", static_cast<long long>(o.seed)));
  o.sonar_sim.elevation_rays =
      static_cast<int>(c.get_int("sonar_elevation_rays", o.sonar_sim.elevation_rays));
  return o;
}

RigidTransform camera_from_sonar_mount() {
  // Camera z = sonar x, camera x = -sonar y, camera y = -sonar z.
  Mat3 r;
  r << 0, 0, 1,  //
      -1, 0, 0,  //
      0, -1, 0;
  return {r, Vec3::Zero()};
}

DatasetManifest simulate_dataset(const fs::path& out, const SimulateOptions& o) {
  if (o.frames < 1) throw Error("simulate: frames must be >= 1");
  if (o.sonar_scans < 0) throw Error("simulate: sonar_scans must be >= 0");
  if (o.ntu < 0) throw Error("simulate: ntu must be >= 0");
  if (o.image_format != "png" && o.image_format != "rgb") {
    throw Error("simulate: image_format must be png or rgb");
  }
  const auto [fw, fh] = fit_within(o.width, o.height, kMaxPredictorDim);
  if (fw != o.width || fh != o.height) {
    throw Error("simulate: images must not exceed 512 pixels on either side");
  }
  DatasetManifest m;
  m.frame_count = o.frames;
  m.sonar_count = o.sonar_scans;
  m.width = o.width;
  m.height = o.height;
  m.fx = m.fy = o.focal;
  m.cx = 0.5 * (o.width - 1);
  m.cy = 0.5 * (o.height - 1);
  m.ntu = o.ntu;
  m.beta = o.beta;
  m.seed = o.seed;
  m.trajectory = o.trajectory;
  m.image_format = o.image_format;
  m.grid = default_grid_spec(o.resolution);
  m.scene = scene_by_name(o.scene);
  const PinholeCamera cam = m.camera();

  std::vector<RigidTransform> cam_poses;
  if (o.trajectory == "object_centric") {
    cam_poses = gen_trajectory(TrajectoryKind::ObjectCentric, m.scene, o.frames, o.trajectory_cfg);
  } else if (o.trajectory == "sweep") {
    for (const auto& p : gen_trajectory(TrajectoryKind::Sweep, m.scene, o.frames, o.trajectory_cfg)) {
      cam_poses.push_back(p * camera_from_sonar_mount());
    }
  } else {
    throw Error("simulate: unknown trajectory '" + o.trajectory + "'");
  }

  fs::create_directories(out / "frames");
  fs::create_directories(out / "sonar");
  const TurbidityModel turb{o.ntu, o.beta};
  std::vector<PoseRecord> records;
  for (int i = 0; i < o.frames; ++i) {
    const RaycastResult rc = raycast(m.scene, cam, cam_poses[static_cast<std::size_t>(i)], turb);
    const fs::path p = frame_path(out, i, o.image_format);
    if (o.image_format == "png") {
      write_png(p, rc.color);
    } else {
      write_raw_rgb(p, rc.color);
    }
    records.push_back({i, cam_poses[static_cast<std::size_t>(i)]});
  }
  write_pose_file(out / "poses.txt", records);

  if (o.sonar_scans > 0) {
    const auto sonar_poses =
        gen_trajectory(TrajectoryKind::Sweep, m.scene, o.sonar_scans, o.trajectory_cfg);
    for (int i = 0; i < o.sonar_scans; ++i) {
      write_sonar(sonar_path(out, i),
                  simulate_sonar(m.scene, sonar_poses[static_cast<std::size_t>(i)], m.sonar,
                                 o.sonar_sim));
    }
  }
  write_manifest(out / "scene.json", m);
  return m;
}

OccupancyGrid map_dataset(const fs::path& dataset, const OccupancyRule& rule,
                          double intensity_threshold) {
  const DatasetManifest m = read_manifest(dataset / "scene.json");
  if (m.sonar_count < 1) throw Error("map: dataset has no sonar scans");
  OccupancyGrid grid(m.grid, rule);
  for (int i = 0; i < m.sonar_count; ++i) {
    const fs::path p = sonar_path(dataset, i);
    if (!fs::exists(p)) throw Error("map: missing sonar scan " + p.string());
    integrate_scan(grid, read_sonar(p), intensity_threshold);
  }
  return grid;
}

ReconstructOptions ReconstructOptions::from_config(const Config& c, std::uint64_t seed) {
  ReconstructOptions o;
  o.pipeline = pipeline_config_from(c);
  o.provider = c.get("provider", o.provider);
  o.provider_command = c.get("provider_command", o.provider_command);
  o.provider_timeout = std::chrono::milliseconds(c.get_int("provider_timeout_ms", o.provider_timeout.count()));
  o.oracle.noise_sigma = c.get_double("oracle_noise_sigma", o.oracle.noise_sigma);
  o.oracle.scale_min = c.get_double("oracle_scale_min", o.oracle.scale_min);
  o.oracle.scale_max = c.get_double("oracle_scale_max", o.oracle.scale_max);
  o.oracle.feature_noise = c.get_double("oracle_feature_noise", o.oracle.feature_noise);
  o.oracle.seed = static_cast<std::uint64_t>(c.get_int("oracle_seed", static_cast<long long>(seed)));
  if (!c.has("ransac_seed")) o.pipeline.ransac.seed = seed;
  o.realtime_fps = c.get_double("realtime_fps", o.realtime_fps);
  o.max_frames = static_cast<int>(c.get_int("max_frames", o.max_frames));
  if (o.provider != "oracle" && o.provider != "external") {
    throw Error("config: provider must be oracle or external");
  }
  if (o.provider == "external" && o.provider_command.empty()) {
    throw Error("config: provider = external needs provider_command");
  }
  return o;
}

std::unique_ptr<OracleProvider> make_oracle(const fs::path& dataset, const DatasetManifest& m,
                                            const OracleConfig& cfg) {
  std::map<std::int64_t, RigidTransform> poses;
  for (const PoseRecord& r : read_pose_file(dataset / "poses.txt")) poses[r.frame_id] = r.pose;
  OracleConfig oc = cfg;
  oc.beta = m.beta;
  const double ntu = m.ntu;
  return std::make_unique<OracleProvider>(m.scene, m.camera(), std::move(poses), oc,
                                          [ntu](std::int64_t) { return ntu; });
}

ReconstructResult reconstruct_dataset(const fs::path& dataset, const OccupancyGrid& grid,
                                      const ReconstructOptions& opts,
                                      PointmapProvider* provider_override) {
  const DatasetManifest m = read_manifest(dataset / "scene.json");
  validate_dataset(dataset, m);
  if (!(grid.spec() == m.grid)) throw Error("reconstruct: grid does not match the dataset");
  const std::vector<PoseRecord> poses = read_pose_file(dataset / "poses.txt");
  if (static_cast<int>(poses.size()) < m.frame_count) {
    throw Error("reconstruct: poses.txt has fewer poses than frames");
  }

  std::unique_ptr<PointmapProvider> owned;
  PointmapProvider* provider = provider_override;
  if (!provider) {
    if (opts.provider == "external") {
      owned = std::make_unique<ExternalProvider>(opts.provider_command, opts.provider_timeout);
    } else {
      owned = make_oracle(dataset, m, opts.oracle);
    }
    provider = owned.get();
  }

  Pipeline pipe(*provider, grid, m.camera(), opts.pipeline);
  ReconstructResult res;
  const int n = opts.max_frames >= 0 ? std::min(opts.max_frames, m.frame_count) : m.frame_count;
  const auto t_start = std::chrono::steady_clock::now();
  for (int i = 0; i < n; ++i) {
    if (opts.realtime_fps > 0.0) {
      const double now =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
      const int latest = std::min(n - 1, static_cast<int>(now * opts.realtime_fps));
      if (latest > i) {
        res.dropped += static_cast<std::size_t>(latest - i);
        i = latest;
      }
    }
    Image img = read_image(frame_path(dataset, i, m.image_format));
    img.frame_id = poses[static_cast<std::size_t>(i)].frame_id;
    pipe.step(img, poses[static_cast<std::size_t>(i)].pose);
    res.frame_seconds.push_back(pipe.last_frame_seconds());
  }
  res.initialized = pipe.mode() != Mode::Initializing;
  res.diagnostics = pipe.diagnostics();
  res.keyframes = pipe.graph().size();
  res.skipped = pipe.skipped_count();
  res.recovery_entries = pipe.recovery_entries();
  std::ostringstream gd;
  pipe.graph().dump(gd);
  res.graph_dump = gd.str();
  if (res.initialized) res.cloud = pipe.export_cloud();
  return res;
}

std::vector<MeasureResult> measure_cloud(const FusedCloud& cloud, const DatasetManifest& m) {
  std::vector<MeasureResult> rows;
  const std::optional<double> floor =
      m.scene.floor.enabled ? std::optional<double>(m.scene.floor.height) : std::nullopt;
  for (const Primitive& obj : m.scene.objects) rows.push_back(measure_object(cloud, obj, floor));
  return rows;
}

void print_measurements(std::ostream& os, const std::vector<MeasureResult>& rows) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-16s %10s %10s %9s %8s\n", "object", "measured_m", "truth_m",
                "error_%", "points");
  os << buf;
  for (const MeasureResult& r : rows) {
    if (r.detected) {
      std::snprintf(buf, sizeof buf, "%-16s %10.4f %10.4f %9.2f %8zu\n", r.name.c_str(),
                    r.measured, r.ground_truth, r.percent_error(), r.points);
    } else {
      std::snprintf(buf, sizeof buf, "%-16s %10s %10.4f %9s %8zu\n", r.name.c_str(), "ND",
                    r.ground_truth, "ND", r.points);
    }
    os << buf;
  }
}

}  // namespace oaf
