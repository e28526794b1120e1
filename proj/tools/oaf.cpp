// Command-line front end: simulate -> map -> reconstruct -> measure.

#include "oaf/errors.hpp"
#include "oaf/io.hpp"
#include "oaf/workflows.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace oaf;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

Config load_config(const Globals& g) {
  Config c = g.config_path.empty() ? Config{} : Config::load(g.config_path);
  if (g.seed) c.set("seed", std::to_string(*g.seed));
  return c;
}

void warn_unused(const Config& c, const Globals& g) {
  if (!g.verbose) return;
  for (const auto& k : c.unused()) std::cerr << "note: config key '" << k << "' was not used\n";
}

std::uint64_t seed_of(const Config& c, const DatasetManifest& m) {
  return static_cast<std::uint64_t>(c.get_int("seed", static_cast<long long>(m.seed)));
}

void write_lines(const std::string& path, const std::vector<FrameDiagnostics>& diags) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  for (const auto& d : diags) os << format_diagnostic(d) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Opti-acoustic metric reconstruction"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Override every seed");
  app.add_flag("--verbose,-v", g.verbose, "Per-frame diagnostics on stderr");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Write a synthetic dataset");
  std::string sim_out;
  std::optional<std::string> sim_scene, sim_traj, sim_format;
  std::optional<int> sim_frames, sim_scans;
  std::optional<double> sim_ntu, sim_res;
  sim->add_option("--out", sim_out, "Dataset directory")->required();
  sim->add_option("--scene", sim_scene, "default | single_box | empty");
  sim->add_option("--trajectory", sim_traj, "object_centric | sweep");
  sim->add_option("--frames", sim_frames, "Camera frame count");
  sim->add_option("--sonar-scans", sim_scans, "Sonar scan count (sweep trajectory)");
  sim->add_option("--ntu", sim_ntu, "Turbidity in NTU");
  sim->add_option("--resolution", sim_res, "Grid resolution in meters");
  sim->add_option("--image-format", sim_format, "png | rgb");

  // map
  auto* map = app.add_subcommand("map", "Integrate sonar scans into an occupancy grid");
  std::string map_dataset_dir, map_out;
  std::optional<double> map_threshold;
  map->add_option("--dataset", map_dataset_dir)->required()->check(CLI::ExistingDirectory);
  map->add_option("--out", map_out, "Grid file")->required();
  map->add_option("--threshold", map_threshold, "Sonar intensity threshold");

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct", "Run the pipeline and write a PLY cloud");
  std::string rec_dataset, rec_grid, rec_out, rec_diag, rec_graph;
  std::optional<double> rec_fps;
  std::optional<std::string> rec_provider_cmd;
  bool rec_opt_all = false;
  rec->add_option("--dataset", rec_dataset)->required()->check(CLI::ExistingDirectory);
  rec->add_option("--grid", rec_grid)->required()->check(CLI::ExistingFile);
  rec->add_option("--out", rec_out, "PLY output")->required();
  rec->add_option("--diagnostics", rec_diag, "Per-frame diagnostics log");
  rec->add_option("--graph", rec_graph, "Keyframe graph dump");
  rec->add_option("--realtime-fps", rec_fps, "Drop stale frames as a live stream at this rate");
  rec->add_option("--provider-command", rec_provider_cmd, "Use an external predictor process");
  rec->add_flag("--optimize-all", rec_opt_all, "Re-optimize every component on insertion");

  // measure
  auto* meas = app.add_subcommand("measure", "Report object extents in a cloud");
  std::string meas_cloud, meas_manifest;
  meas->add_option("--cloud", meas_cloud)->required()->check(CLI::ExistingFile);
  meas->add_option("--manifest", meas_manifest, "scene.json with the object list")
      ->required()
      ->check(CLI::ExistingFile);

  // render-depth
  auto* rd = app.add_subcommand("render-depth", "Render the acoustic depth image for a pose");
  std::string rd_grid, rd_dataset, rd_out;
  std::optional<int> rd_frame;
  std::vector<double> rd_pose;
  rd->add_option("--grid", rd_grid)->required()->check(CLI::ExistingFile);
  rd->add_option("--dataset", rd_dataset, "Dataset providing intrinsics and poses")
      ->required()
      ->check(CLI::ExistingDirectory);
  rd->add_option("--out", rd_out, "Depth file")->required();
  auto* rd_frame_opt = rd->add_option("--frame", rd_frame, "Use this frame's pose");
  rd->add_option("--pose", rd_pose, "tx ty tz qx qy qz qw")->expected(7)->excludes(rd_frame_opt);

  // graph-dump
  auto* gd = app.add_subcommand("graph-dump", "Run the pipeline and print the keyframe graph");
  std::string gd_dataset, gd_grid;
  gd->add_option("--dataset", gd_dataset)->required()->check(CLI::ExistingDirectory);
  gd->add_option("--grid", gd_grid)->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    Config cfg = load_config(g);

    if (*sim) {
      if (sim_scene) cfg.set("scene", *sim_scene);
      if (sim_traj) cfg.set("trajectory", *sim_traj);
      if (sim_frames) cfg.set("frames", std::to_string(*sim_frames));
      if (sim_scans) cfg.set("sonar_scans", std::to_string(*sim_scans));
      if (sim_ntu) cfg.set("ntu", std::to_string(*sim_ntu));
      if (sim_res) cfg.set("grid_resolution", std::to_string(*sim_res));
      if (sim_format) cfg.set("image_format", *sim_format);
      const SimulateOptions opts = SimulateOptions::from_config(cfg);
      const DatasetManifest m = simulate_dataset(sim_out, opts);
      std::cout << "wrote " << m.frame_count << " frames and " << m.sonar_count
                << " sonar scans to " << sim_out << '\n';
    } else if (*map) {
      const double thr = map_threshold ? *map_threshold : cfg.get_double("sonar_threshold", kDefaultSonarThreshold);
      const OccupancyGrid grid = map_dataset(map_dataset_dir, occupancy_rule_from(cfg), thr);
      write_grid(map_out, grid);
      std::cout << "occupied voxels: " << grid.occupied_count() << '\n'
                << "sweep_coverage: " << sweep_coverage(grid) << '\n';
    } else if (*rec || *gd) {
      const std::string dataset = *rec ? rec_dataset : gd_dataset;
      const DatasetManifest m = read_manifest(fs::path(dataset) / "scene.json");
      if (rec_provider_cmd) {
        cfg.set("provider", "external");
        cfg.set("provider_command", *rec_provider_cmd);
      }
      if (rec_fps) cfg.set("realtime_fps", std::to_string(*rec_fps));
      if (rec_opt_all) cfg.set("optimize_all", "true");
      const ReconstructOptions opts = ReconstructOptions::from_config(cfg, seed_of(cfg, m));
      const OccupancyGrid grid = read_grid(*rec ? rec_grid : gd_grid);
      const ReconstructResult res = reconstruct_dataset(dataset, grid, opts);
      if (g.verbose) {
        for (const auto& d : res.diagnostics) std::cerr << format_diagnostic(d) << '\n';
      }
      if (*gd) {
        std::cout << res.graph_dump;
        return res.initialized ? 0 : 1;
      }
      if (!rec_diag.empty()) write_lines(rec_diag, res.diagnostics);
      if (!rec_graph.empty()) {
        std::ofstream os(rec_graph);
        os << res.graph_dump;
      }
      if (!res.initialized) {
        std::cerr << "initialization never succeeded; last diagnostics:\n";
        const std::size_t n = res.diagnostics.size();
        for (std::size_t i = n > 5 ? n - 5 : 0; i < n; ++i) {
          std::cerr << format_diagnostic(res.diagnostics[i]) << '\n';
        }
        return 1;
      }
      write_ply(rec_out, res.cloud);
      std::cout << "frames: " << res.diagnostics.size() << "  keyframes: " << res.keyframes
                << "  points: " << res.cloud.size() << "  skipped: " << res.skipped
                << "  recovery_entries: " << res.recovery_entries << '\n';
    } else if (*meas) {
      const FusedCloud cloud = read_ply(meas_cloud);
      const DatasetManifest m = read_manifest(meas_manifest);
      print_measurements(std::cout, measure_cloud(cloud, m));
    } else if (*rd) {
      const DatasetManifest m = read_manifest(fs::path(rd_dataset) / "scene.json");
      RigidTransform pose;
      if (!rd_pose.empty()) {
        pose = RigidTransform::from_quaternion(
            Eigen::Quaterniond(rd_pose[6], rd_pose[3], rd_pose[4], rd_pose[5]).normalized(),
            Vec3(rd_pose[0], rd_pose[1], rd_pose[2]));
      } else {
        const int f = rd_frame.value_or(0);
        const auto poses = read_pose_file(fs::path(rd_dataset) / "poses.txt");
        auto it = std::find_if(poses.begin(), poses.end(),
                               [&](const PoseRecord& r) { return r.frame_id == f; });
        if (it == poses.end()) throw Error("render-depth: no pose for frame " + std::to_string(f));
        pose = it->pose;
      }
      const DepthImage d = render_depth(read_grid(rd_grid), m.camera(), pose);
      write_depth(rd_out, d);
      std::cout << "valid pixels: " << d.valid_count() << " / " << d.size() << '\n';
    }
    warn_unused(cfg, g);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
