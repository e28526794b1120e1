#include "oaf/errors.hpp"
#include "oaf/external_provider.hpp"
#include "oaf/io.hpp"
#include "oaf/workflows.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <sys/wait.h>

using namespace oaf;
using test::TempDir;
using test::slurp;

namespace {

void truncate_to(const fs::path& p, std::uintmax_t n) { fs::resize_file(p, n); }

void poke(const fs::path& p, std::size_t offset, char c) {
  std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(static_cast<std::streamoff>(offset));
  f.put(c);
}

DepthImage sample_depth() {
  DepthImage d(7, 5);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (i % 4) d.set(i, 0.25f + 0.1f * static_cast<float>(i));
  }
  return d;
}

PointmapPrediction sample_prediction() {
  PointmapPrediction p(5, 4, 3);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (auto* v : {&p.X_ii, &p.X_ij}) {
    for (auto& x : *v) x = Vec3f(u(rng), u(rng), u(rng));
  }
  p.X_ii[3] = Vec3f::Constant(std::numeric_limits<float>::quiet_NaN());
  for (auto* v : {&p.C_i, &p.C_j, &p.D_i, &p.D_j, &p.Q_i, &p.Q_j}) {
    for (auto& x : *v) x = u(rng);
  }
  return p;
}

SonarScan sample_scan() {
  SonarGeometry g;
  g.beam_count = 8;
  g.bin_count = 16;
  SonarScan s(g, RigidTransform::from_axis_angle(Vec3(0, 0, 1), 0.3, Vec3(0.1, 0.2, 0.3)));
  for (std::size_t i = 0; i < s.intensities.size(); ++i) s.intensities[i] = 0.01f * i;
  return s;
}

OccupancyGrid sample_grid() {
  GridSpec spec;
  spec.origin = Vec3(-0.5, 0.25, 0.0);
  spec.resolution = 0.1;
  spec.dims = {6, 5, 4};
  OccupancyGrid g(spec, OccupancyRule{2, 0.4});
  std::vector<std::uint32_t> hits(spec.voxel_count()), misses(spec.voxel_count());
  for (std::size_t k = 0; k < hits.size(); ++k) {
    hits[k] = static_cast<std::uint32_t>(k % 5);
    misses[k] = static_cast<std::uint32_t>(k % 3);
  }
  g.add_counts(hits, misses);
  return g;
}

Image sample_image() {
  Image img(6, 4);
  for (std::size_t i = 0; i < img.rgb.size(); ++i) img.rgb[i] = static_cast<std::uint8_t>(37 * i);
  return img;
}

SimulateOptions small(const std::string& scene, int frames, int scans) {
  SimulateOptions o;
  o.scene = scene;
  o.frames = frames;
  o.sonar_scans = scans;
  o.width = 128;
  o.height = 96;
  o.focal = 105.0;
  return o;
}

OccupancyGrid truth_grid(const DatasetManifest& m) {
  OccupancyGrid g(m.grid);
  for (std::size_t k : voxelize_surfaces(m.scene, m.grid)) g.force_occupied(m.grid.unlinear(k));
  return g;
}

ReconstructOptions oracle_options(const DatasetManifest& m) {
  ReconstructOptions o;
  o.oracle.seed = m.seed;
  o.pipeline.ransac.seed = m.seed;
  return o;
}

std::string fake(const std::string& mode, const fs::path& dataset, const fs::path& cache) {
  return std::string(OAF_FAKE_PROVIDER) + " " + mode + " " + dataset.string() + " " +
         cache.string();
}

int run(const std::string& cmd) {
  const int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Formats, DepthRoundTrip) {
  TempDir dir("depth");
  const DepthImage d = sample_depth();
  write_depth(dir / "a", d);
  const DepthImage back = read_depth(dir / "a");
  write_depth(dir / "b", back);
  EXPECT_EQ(slurp(dir / "a"), slurp(dir / "b"));
  ASSERT_EQ(back.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(back.valid(i), d.valid(i));
    if (d.valid(i)) {
      EXPECT_EQ(back[i], d[i]);
    }
  }
  EXPECT_EQ(fs::file_size(dir / "a"), 16u + 4u * 35u);
}

TEST(Formats, GridRoundTrip) {
  TempDir dir("grid");
  const OccupancyGrid g = sample_grid();
  write_grid(dir / "a", g);
  const OccupancyGrid back = read_grid(dir / "a");
  EXPECT_EQ(back.spec(), g.spec());
  EXPECT_EQ(back.rule().k_hit, 2u);
  EXPECT_EQ(back.rule().r_occ, 0.4);
  EXPECT_EQ(back.occupancy(), g.occupancy());
  EXPECT_EQ(back.hit_counts(), g.hit_counts());
  EXPECT_EQ(back.miss_counts(), g.miss_counts());
  write_grid(dir / "b", back);
  EXPECT_EQ(slurp(dir / "a"), slurp(dir / "b"));
}

TEST(Formats, PredictionRoundTrip) {
  TempDir dir("pred");
  const PointmapPrediction p = sample_prediction();
  write_prediction(dir / "a", p);
  const PointmapPrediction back = read_prediction(dir / "a");
  EXPECT_NO_THROW(back.validate());
  EXPECT_EQ(back.C_j, p.C_j);
  EXPECT_EQ(back.D_i, p.D_i);
  EXPECT_FALSE(back.X_ii[3].allFinite());
  EXPECT_EQ(back.X_ij, p.X_ij);
  write_prediction(dir / "b", back);
  EXPECT_EQ(slurp(dir / "a"), slurp(dir / "b"));
}

TEST(Formats, SonarRoundTrip) {
  TempDir dir("sonar");
  const SonarScan s = sample_scan();
  write_sonar(dir / "a", s);
  const SonarScan back = read_sonar(dir / "a");
  EXPECT_EQ(back.intensities, s.intensities);
  EXPECT_EQ(back.geometry.beam_count, 8);
  EXPECT_NEAR(back.geometry.h_fov, s.geometry.h_fov, 0.0);
  EXPECT_LT(translation_distance(back.pose, s.pose), 1e-15);
  EXPECT_EQ(back.pose.rotation(), s.pose.rotation());
  write_sonar(dir / "b", back);
  EXPECT_EQ(slurp(dir / "a"), slurp(dir / "b"));
}

TEST(Formats, PlyRoundTrip) {
  TempDir dir("ply");
  FusedCloud c;
  for (int i = 0; i < 10; ++i) {
    c.points.push_back(Vec3f(0.1f * i, -0.2f * i, 1.5f));
    c.colors.push_back({static_cast<std::uint8_t>(i), 100, 255});
  }
  write_ply(dir / "a", c);
  const FusedCloud back = read_ply(dir / "a");
  EXPECT_EQ(back.points, c.points);
  EXPECT_EQ(back.colors, c.colors);
  write_ply(dir / "b", back);
  EXPECT_EQ(slurp(dir / "a"), slurp(dir / "b"));
  const std::string text = slurp(dir / "a");
  EXPECT_EQ(text.rfind("ply\nformat binary_little_endian 1.0\n", 0), 0u);
  EXPECT_NE(text.find("element vertex 10\n"), std::string::npos);

  FusedCloud bad = c;
  bad.colors.pop_back();
  EXPECT_THROW(write_ply(dir / "c", bad), Error);
}

TEST(Formats, ImageRoundTrips) {
  TempDir dir("img");
  const Image img = sample_image();
  write_png(dir / "a.png", img);
  write_raw_rgb(dir / "a.rgb", img);
  const Image png = read_image(dir / "a.png");
  const Image raw = read_image(dir / "a.rgb");
  EXPECT_EQ(png.rgb, img.rgb);
  EXPECT_EQ(raw.rgb, img.rgb);
  EXPECT_EQ(png.width, 6);
  EXPECT_EQ(png.source, dir / "a.png");
  write_png(dir / "b.png", png);
  write_raw_rgb(dir / "b.rgb", raw);
  EXPECT_EQ(slurp(dir / "a.png"), slurp(dir / "b.png"));
  EXPECT_EQ(slurp(dir / "a.rgb"), slurp(dir / "b.rgb"));
  EXPECT_THROW(read_image(dir / "a.jpg"), Error);
}

TEST(Formats, CorruptFilesRaiseFormatError) {
  TempDir dir("corrupt");
  write_depth(dir / "d", sample_depth());
  write_grid(dir / "g", sample_grid());
  write_prediction(dir / "p", sample_prediction());
  write_sonar(dir / "s", sample_scan());
  FusedCloud c;
  c.points.push_back(Vec3f(1, 2, 3));
  c.colors.push_back({1, 2, 3});
  write_ply(dir / "y", c);
  write_png(dir / "i.png", sample_image());
  write_raw_rgb(dir / "i.rgb", sample_image());

  for (const char* name : {"d", "g", "p", "s", "y", "i.png", "i.rgb"}) {
    const fs::path p = dir / name;
    const fs::path t = dir / (std::string("t_") + name);
    fs::copy_file(p, t, fs::copy_options::overwrite_existing);
    truncate_to(t, fs::file_size(p) / 2);
    const fs::path m = dir / (std::string("m_") + name);
    fs::copy_file(p, m, fs::copy_options::overwrite_existing);
    poke(m, 1, 'Z');
  }
  EXPECT_THROW(read_depth(dir / "t_d"), FormatError);
  EXPECT_THROW(read_grid(dir / "t_g"), FormatError);
  EXPECT_THROW(read_prediction(dir / "t_p"), FormatError);
  EXPECT_THROW(read_sonar(dir / "t_s"), FormatError);
  EXPECT_THROW(read_ply(dir / "t_y"), FormatError);
  EXPECT_THROW(read_png(dir / "t_i.png"), FormatError);
  EXPECT_THROW(read_raw_rgb(dir / "t_i.rgb"), FormatError);
  EXPECT_THROW(read_depth(dir / "m_d"), FormatError);
  EXPECT_THROW(read_grid(dir / "m_g"), FormatError);
  EXPECT_THROW(read_prediction(dir / "m_p"), FormatError);
  EXPECT_THROW(read_sonar(dir / "m_s"), FormatError);
  EXPECT_THROW(read_ply(dir / "m_y"), FormatError);
  EXPECT_THROW(read_png(dir / "m_i.png"), FormatError);
  EXPECT_THROW(read_raw_rgb(dir / "m_i.rgb"), FormatError);

  // Trailing bytes are rejected too.
  { std::ofstream(dir / "d", std::ios::app) << 'x'; }
  EXPECT_THROW(read_depth(dir / "d"), FormatError);
  EXPECT_THROW(read_depth(dir / "missing"), Error);
}

TEST(Formats, ManifestRoundTrip) {
  TempDir dir("manifest");
  DatasetManifest m;
  m.frame_count = 3;
  m.sonar_count = 2;
  m.ntu = 4.5;
  m.seed = 77;
  m.grid = default_grid_spec(0.05);
  m.scene = default_scene();
  write_manifest(dir / "a.json", m);
  const DatasetManifest back = read_manifest(dir / "a.json");
  EXPECT_EQ(back.frame_count, 3);
  EXPECT_EQ(back.ntu, 4.5);
  EXPECT_EQ(back.seed, 77u);
  EXPECT_EQ(back.grid, m.grid);
  ASSERT_EQ(back.scene.objects.size(), m.scene.objects.size());
  for (std::size_t i = 0; i < m.scene.objects.size(); ++i) {
    EXPECT_EQ(back.scene.objects[i].name, m.scene.objects[i].name);
    EXPECT_EQ(back.scene.objects[i].size(), m.scene.objects[i].size());
    EXPECT_LT(rotation_distance(back.scene.objects[i].pose, m.scene.objects[i].pose), 1e-14);
    EXPECT_EQ(back.scene.objects[i].pose.translation(), m.scene.objects[i].pose.translation());
  }

  { std::ofstream(dir / "c.json") << "{\"format\": \"something else\"}"; }
  EXPECT_THROW(read_manifest(dir / "c.json"), FormatError);
  { std::ofstream(dir / "d.json") << "{ not json"; }
  EXPECT_THROW(read_manifest(dir / "d.json"), FormatError);
}

TEST(ConfigFile, ParsesAndTracksUse) {
  const Config c = Config::parse(
      "# comment\n"
      "tau_k = 0.4   # trailing comment\n"
      "\n"
      "  ransac_iterations=50\n"
      "optimize_all = yes\n"
      "tau_k = 0.35\n"
      "tua_r = 0.1\n");
  const PipelineConfig p = pipeline_config_from(c);
  EXPECT_EQ(p.tau_k, 0.35);
  EXPECT_EQ(p.ransac.iterations, 50);
  EXPECT_TRUE(p.optimize_all);
  EXPECT_EQ(p.tau_r, PipelineConfig{}.tau_r);
  EXPECT_EQ(c.unused(), std::vector<std::string>{"tua_r"});
}

TEST(ConfigFile, RejectsMalformedInput) {
  EXPECT_THROW(Config::parse("just words\n"), FormatError);
  EXPECT_THROW(Config::parse(" = 3\n"), FormatError);
  EXPECT_THROW(Config::parse("tau_k = abc").get_double("tau_k", 0), FormatError);
  EXPECT_THROW(Config::parse("frames = 1.5").get_int("frames", 0), FormatError);
  EXPECT_THROW(Config::parse("optimize_all = maybe").get_bool("optimize_all", false), FormatError);
  EXPECT_THROW(pipeline_config_from(Config::parse("tau_r = 0.5\ntau_k = 0.3")), Error);
  EXPECT_THROW(occupancy_rule_from(Config::parse("k_hit = 0")), Error);
  EXPECT_THROW(occupancy_rule_from(Config::parse("r_occ = 1.5")), Error);
  const OccupancyRule r = occupancy_rule_from(Config::parse("k_hit = 5\nr_occ = 0.5"));
  EXPECT_EQ(r.k_hit, 5u);
  EXPECT_EQ(r.r_occ, 0.5);
}

TEST(Simulate, WritesTheDatasetLayout) {
  TempDir dir("sim");
  const DatasetManifest m = simulate_dataset(dir.path(), small("default", 5, 3));
  EXPECT_EQ(m.frame_count, 5);
  EXPECT_EQ(m.sonar_count, 3);
  EXPECT_NO_THROW(validate_dataset(dir.path(), m));
  EXPECT_EQ(read_pose_file(dir / "poses.txt").size(), 5u);
  EXPECT_TRUE(fs::exists(frame_path(dir.path(), 4, "png")));
  EXPECT_TRUE(fs::exists(sonar_path(dir.path(), 2)));
  EXPECT_EQ(read_image(frame_path(dir.path(), 0, "png")).width, 128);
  EXPECT_EQ(read_manifest(dir / "scene.json").camera().fx(), 105.0);

  fs::remove(frame_path(dir.path(), 2, "png"));
  EXPECT_THROW(validate_dataset(dir.path(), m), Error);
}

TEST(Simulate, RejectsBadOptions) {
  TempDir dir("simbad");
  SimulateOptions o = small("default", 2, 0);
  o.width = 640;
  EXPECT_THROW(simulate_dataset(dir.path(), o), Error);
  EXPECT_THROW(simulate_dataset(dir.path(), small("nowhere", 2, 0)), Error);
  o = small("default", 0, 0);
  EXPECT_THROW(simulate_dataset(dir.path(), o), Error);
}

TEST(Simulate, IsDeterministic) {
  TempDir a("sim_a"), b("sim_b");
  SimulateOptions o = small("default", 3, 2);
  o.image_format = "rgb";
  simulate_dataset(a.path(), o);
  simulate_dataset(b.path(), o);
  for (const auto& entry : fs::recursive_directory_iterator(a.path())) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a.path());
    EXPECT_EQ(slurp(entry.path()), slurp(b.path() / rel)) << rel;
  }
}

TEST(Simulate, TurbidityLowersOracleConfidence) {
  TempDir clear("sim_clear"), murky("sim_murky");
  SimulateOptions o = small("default", 2, 0);
  const DatasetManifest mc = simulate_dataset(clear.path(), o);
  o.ntu = 12.0;
  const DatasetManifest mm = simulate_dataset(murky.path(), o);
  auto mean_conf = [](const fs::path& ds, const DatasetManifest& m) {
    auto oracle = make_oracle(ds, m, OracleConfig{});
    Image img = read_image(frame_path(ds, 0, "png"));
    img.frame_id = 0;
    const PointmapPrediction p = oracle->predict(img, img);
    return mean_of(p.C_i);
  };
  EXPECT_LT(mean_conf(murky.path(), mm), 0.5 * mean_conf(clear.path(), mc));
}

TEST(Map, EmptySceneHasNoOccupiedVoxels) {
  TempDir dir("map_empty");
  simulate_dataset(dir.path(), small("empty", 1, 40));
  const OccupancyGrid g = map_dataset(dir.path(), OccupancyRule{}, kDefaultSonarThreshold);
  EXPECT_EQ(g.occupied_count(), 0u);
}

TEST(Map, SingleBoxIsCloseToItsSurface) {
  TempDir dir("map_box");
  const DatasetManifest m = simulate_dataset(dir.path(), small("single_box", 1, 240));
  const OccupancyGrid g = map_dataset(dir.path(), OccupancyRule{}, kDefaultSonarThreshold);
  const double surface = static_cast<double>(voxelize_surfaces(m.scene, m.grid).size());
  EXPECT_NEAR(static_cast<double>(g.occupied_count()), surface, 0.5 * surface);

  const OccupancyGrid again = map_dataset(dir.path(), OccupancyRule{}, kDefaultSonarThreshold);
  write_grid(dir / "a.grid", g);
  write_grid(dir / "b.grid", again);
  EXPECT_EQ(slurp(dir / "a.grid"), slurp(dir / "b.grid"));
}

TEST(Map, NeedsSonarScans) {
  TempDir dir("map_none");
  simulate_dataset(dir.path(), small("default", 1, 0));
  EXPECT_THROW(map_dataset(dir.path(), OccupancyRule{}, kDefaultSonarThreshold), Error);
}

TEST(Reconstruct, SmokeRun) {
  TempDir dir("rec");
  const DatasetManifest m = simulate_dataset(dir.path(), small("default", 20, 0));
  const OccupancyGrid grid = truth_grid(m);
  const ReconstructResult r = reconstruct_dataset(dir.path(), grid, oracle_options(m));
  EXPECT_TRUE(r.initialized);
  EXPECT_EQ(r.diagnostics.size(), 20u);
  EXPECT_GE(r.keyframes, 1u);
  EXPECT_FALSE(r.cloud.empty());
  EXPECT_EQ(r.frame_seconds.size(), 20u);
  EXPECT_NE(r.graph_dump.find("keyframe "), std::string::npos);

  OccupancyGrid wrong(default_grid_spec(0.1));
  EXPECT_THROW(reconstruct_dataset(dir.path(), wrong, oracle_options(m)), Error);

  ReconstructOptions capped = oracle_options(m);
  capped.max_frames = 4;
  EXPECT_EQ(reconstruct_dataset(dir.path(), grid, capped).diagnostics.size(), 4u);
}

TEST(ExternalProvider, EchoMatchesInProcessOracle) {
  TempDir dir("ext_echo");
  const DatasetManifest m = simulate_dataset(dir.path(), small("default", 10, 0));
  const OccupancyGrid grid = truth_grid(m);
  const ReconstructResult local = reconstruct_dataset(dir.path(), grid, oracle_options(m));
  ExternalProvider ext(fake("echo", dir.path(), dir / "cache"), std::chrono::seconds(30));
  const ReconstructResult remote = reconstruct_dataset(dir.path(), grid, oracle_options(m), &ext);
  ASSERT_TRUE(local.initialized);
  EXPECT_EQ(remote.skipped, 0u);
  EXPECT_EQ(remote.cloud.points, local.cloud.points);
  ASSERT_EQ(remote.diagnostics.size(), local.diagnostics.size());
  for (std::size_t i = 0; i < local.diagnostics.size(); ++i) {
    EXPECT_EQ(format_diagnostic(remote.diagnostics[i]), format_diagnostic(local.diagnostics[i]));
  }
}

TEST(ExternalProvider, TimeoutsSkipFrames) {
  TempDir dir("ext_timeout");
  const DatasetManifest m = simulate_dataset(dir.path(), small("default", 7, 0));
  ExternalProvider ext(fake("timeout", dir.path(), dir / "cache"), std::chrono::milliseconds(1500));
  const ReconstructResult r = reconstruct_dataset(dir.path(), truth_grid(m), oracle_options(m), &ext);
  EXPECT_TRUE(r.initialized);
  EXPECT_GE(r.skipped, 2u);
  EXPECT_LT(r.skipped, 7u);
  std::size_t flagged = 0;
  for (const auto& d : r.diagnostics) flagged += d.skipped ? 1 : 0;
  EXPECT_EQ(flagged, r.skipped);
}

TEST(ExternalProvider, BadResponsesSkipFrames) {
  TempDir dir("ext_bad");
  const DatasetManifest m = simulate_dataset(dir.path(), small("default", 4, 0));
  const OccupancyGrid grid = truth_grid(m);
  for (const char* mode : {"garbage", "corrupt", "error", "exit"}) {
    ExternalProvider ext(fake(mode, dir.path(), dir / "cache"), std::chrono::seconds(30));
    const ReconstructResult r = reconstruct_dataset(dir.path(), grid, oracle_options(m), &ext);
    EXPECT_EQ(r.skipped, 4u) << mode;
    EXPECT_FALSE(r.initialized) << mode;
  }
}

TEST(ExternalProvider, ReportsErrorsAsProviderError) {
  TempDir dir("ext_err");
  simulate_dataset(dir.path(), small("default", 1, 0));
  Image img = read_image(frame_path(dir.path(), 0, "png"));
  ExternalProvider err(fake("error", dir.path(), dir / "cache"), std::chrono::seconds(30));
  EXPECT_THROW(err.predict(img, img), ProviderError);
  ExternalProvider garbage(fake("garbage", dir.path(), dir / "cache"), std::chrono::seconds(30));
  EXPECT_THROW(garbage.predict(img, img), ProviderError);
  ExternalProvider corrupt(fake("corrupt", dir.path(), dir / "cache"), std::chrono::seconds(30));
  EXPECT_THROW(corrupt.predict(img, img), FormatError);
  ExternalProvider echo(fake("echo", dir.path(), dir / "cache"), std::chrono::seconds(30));
  EXPECT_EQ(echo.predict(img, img).pixel_count(), img.pixel_count());
  Image no_source = img;
  no_source.source.clear();
  EXPECT_THROW(echo.predict(no_source, img), ProviderError);
  EXPECT_THROW(ExternalProvider("", std::chrono::seconds(1)), Error);
}

TEST(Cli, EndToEnd) {
  TempDir dir("cli");
  const std::string cli = OAF_CLI;
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "image_width = 128\nimage_height = 96\nfocal_length = 105\n";
  }
  const std::string ds = (dir / "ds").string();
  const std::string cfg = " --config " + (dir / "run.cfg").string();
  ASSERT_EQ(run(cli + cfg + " simulate --out " + ds + " --frames 12 --sonar-scans 240"), 0);
  ASSERT_EQ(run(cli + " map --dataset " + ds + " --out " + (dir / "g.grid").string()), 0);
  ASSERT_EQ(run(cli + cfg + " reconstruct --dataset " + ds + " --grid " + (dir / "g.grid").string() +
                " --out " + (dir / "a.ply").string() + " --diagnostics " +
                (dir / "diag.txt").string() + " --graph " + (dir / "graph.txt").string()),
            0);
  ASSERT_EQ(run(cli + cfg + " reconstruct --dataset " + ds + " --grid " + (dir / "g.grid").string() +
                " --out " + (dir / "b.ply").string()),
            0);
  EXPECT_EQ(slurp(dir / "a.ply"), slurp(dir / "b.ply"));
  EXPECT_NE(slurp(dir / "diag.txt").find("frame=11 "), std::string::npos);
  EXPECT_NE(slurp(dir / "graph.txt").find("component"), std::string::npos);
  EXPECT_EQ(run(cli + " measure --cloud " + (dir / "a.ply").string() + " --manifest " + ds +
                "/scene.json"),
            0);
  EXPECT_EQ(run(cli + " render-depth --grid " + (dir / "g.grid").string() + " --dataset " + ds +
                " --frame 3 --out " + (dir / "d.bin").string()),
            0);
  EXPECT_EQ(read_depth(dir / "d.bin").width(), 128);
  EXPECT_EQ(run(cli + " graph-dump --dataset " + ds + " --grid " + (dir / "g.grid").string()), 0);
}

TEST(Cli, ExitCodes) {
  TempDir dir("cli_codes");
  const std::string cli = OAF_CLI;
  EXPECT_NE(run(cli), 0);
  EXPECT_NE(run(cli + " frobnicate"), 0);
  EXPECT_NE(run(cli + " map --dataset " + (dir / "nope").string() + " --out x"), 0);
  EXPECT_NE(run(cli + " simulate --out " + (dir / "ds").string() + " --scene atlantis"), 0);
  { std::ofstream(dir / "bad.cfg") << "frames = many\n"; }
  EXPECT_EQ(run(cli + " --config " + (dir / "bad.cfg").string() + " simulate --out " +
                (dir / "ds2").string()),
            1);
  // A grid with nothing occupied never yields a scale, so nothing is written.
  ASSERT_EQ(run(cli + " simulate --out " + (dir / "e").string() +
                " --scene empty --frames 2 --sonar-scans 4 --resolution 0.1"),
            0);
  ASSERT_EQ(run(cli + " map --dataset " + (dir / "e").string() + " --out " + (dir / "e.grid").string()), 0);
  EXPECT_EQ(run(cli + " reconstruct --dataset " + (dir / "e").string() + " --grid " +
                (dir / "e.grid").string() + " --out " + (dir / "e.ply").string()),
            1);
  EXPECT_FALSE(fs::exists(dir / "e.ply"));
  EXPECT_EQ(run(cli + " --help"), 0);
}
