#include "oaf/io.hpp"

#include "oaf/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace oaf {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written with the host byte order, which must be little-endian");

class Writer {
 public:
  explicit Writer(const fs::path& path) : path_(path), os_(path, std::ios::binary) {
    if (!os_) throw Error("cannot open " + path.string() + " for writing");
  }
  void magic(const char (&m)[5]) { os_.write(m, 4); }
  template <typename T>
  void put(T v) {
    os_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  template <typename T>
  void put_array(const T* data, std::size_t n) {
    os_.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(T)));
  }
  void close() {
    os_.close();
    if (!os_) throw Error("write failed: " + path_.string());
  }

 private:
  fs::path path_;
  std::ofstream os_;
};

class Reader {
 public:
  explicit Reader(const fs::path& path) : path_(path), is_(path, std::ios::binary) {
    if (!is_) throw Error("cannot open " + path.string());
  }
  void magic(const char (&m)[5]) {
    char got[4];
    read_raw(got, 4);
    if (std::memcmp(got, m, 4) != 0) fail("bad magic, expected " + std::string(m, 4));
  }
  template <typename T>
  T get() {
    T v;
    read_raw(&v, sizeof(T));
    return v;
  }
  template <typename T>
  void get_array(T* data, std::size_t n) {
    read_raw(data, n * sizeof(T));
  }
  void expect_end() {
    if (is_.peek() != std::char_traits<char>::eof()) fail("trailing bytes");
  }
  [[noreturn]] void fail(const std::string& why) const {
    throw FormatError(path_.string() + ": " + why);
  }

 private:
  void read_raw(void* dst, std::size_t n) {
    is_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) fail("truncated");
  }
  fs::path path_;
  std::ifstream is_;
};

constexpr std::uint32_t kMaxDim = 1u << 15;

void check_dims(Reader& r, std::uint32_t h, std::uint32_t w) {
  if (h == 0 || w == 0 || h > kMaxDim || w > kMaxDim) r.fail("implausible image dimensions");
}

}  // namespace

void write_depth(const fs::path& path, const DepthImage& depth) {
  Writer w(path);
  w.magic("OADP");
  w.put<std::uint32_t>(static_cast<std::uint32_t>(depth.height()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(depth.width()));
  w.put<std::uint32_t>(0);
  std::vector<float> out(depth.size());
  for (std::size_t i = 0; i < depth.size(); ++i) out[i] = depth.valid(i) ? depth[i] : 0.0f;
  w.put_array(out.data(), out.size());
  w.close();
}

DepthImage read_depth(const fs::path& path) {
  Reader r(path);
  r.magic("OADP");
  const auto h = r.get<std::uint32_t>();
  const auto w = r.get<std::uint32_t>();
  if (r.get<std::uint32_t>() != 0) r.fail("reserved header field is not zero");
  check_dims(r, h, w);
  DepthImage d(static_cast<int>(w), static_cast<int>(h));
  std::vector<float> buf(d.size());
  r.get_array(buf.data(), buf.size());
  r.expect_end();
  for (std::size_t i = 0; i < buf.size(); ++i) {
    if (std::isfinite(buf[i]) && buf[i] > 0.0f) d.set(i, buf[i]);
  }
  return d;
}

void write_grid(const fs::path& path, const OccupancyGrid& grid) {
  const GridSpec& s = grid.spec();
  Writer w(path);
  w.magic("OAGR");
  w.put<std::uint32_t>(1);
  for (int a = 0; a < 3; ++a) w.put<double>(s.origin[a]);
  w.put<double>(s.resolution);
  for (int a = 0; a < 3; ++a) w.put<std::uint32_t>(static_cast<std::uint32_t>(s.dims[a]));
  w.put<std::uint32_t>(grid.rule().k_hit);
  w.put<double>(grid.rule().r_occ);
  const auto& occ = grid.occupancy();
  std::vector<std::pair<std::uint8_t, std::uint32_t>> runs;
  for (std::size_t i = 0; i < occ.size();) {
    std::size_t j = i;
    while (j < occ.size() && occ[j] == occ[i] && j - i < 0xffffffffu) ++j;
    runs.emplace_back(occ[i], static_cast<std::uint32_t>(j - i));
    i = j;
  }
  w.put<std::uint64_t>(runs.size());
  for (const auto& [v, n] : runs) {
    w.put<std::uint8_t>(v);
    w.put<std::uint32_t>(n);
  }
  w.put_array(grid.hit_counts().data(), grid.hit_counts().size());
  w.put_array(grid.miss_counts().data(), grid.miss_counts().size());
  w.close();
}

OccupancyGrid read_grid(const fs::path& path) {
  Reader r(path);
  r.magic("OAGR");
  if (r.get<std::uint32_t>() != 1) r.fail("unsupported grid version");
  GridSpec s;
  for (int a = 0; a < 3; ++a) s.origin[a] = r.get<double>();
  s.resolution = r.get<double>();
  for (int a = 0; a < 3; ++a) {
    const auto d = r.get<std::uint32_t>();
    if (d == 0 || d > 4096) r.fail("implausible grid dimensions");
    s.dims[static_cast<std::size_t>(a)] = static_cast<int>(d);
  }
  try {
    s.validate();
  } catch (const Error& e) {
    r.fail(e.what());
  }
  OccupancyRule rule;
  rule.k_hit = r.get<std::uint32_t>();
  rule.r_occ = r.get<double>();
  const std::size_t n = s.voxel_count();
  const auto run_count = r.get<std::uint64_t>();
  if (run_count > n) r.fail("too many occupancy runs");
  std::vector<std::uint8_t> occ;
  occ.reserve(n);
  for (std::uint64_t k = 0; k < run_count; ++k) {
    const auto v = r.get<std::uint8_t>();
    const auto len = r.get<std::uint32_t>();
    if (v > 1) r.fail("occupancy value out of range");
    if (len == 0 || occ.size() + len > n) r.fail("occupancy runs do not cover the grid");
    occ.insert(occ.end(), len, v);
  }
  if (occ.size() != n) r.fail("occupancy runs do not cover the grid");
  std::vector<std::uint32_t> hits(n), misses(n);
  r.get_array(hits.data(), n);
  r.get_array(misses.data(), n);
  r.expect_end();
  OccupancyGrid grid(s, rule);
  grid.restore(std::move(occ), std::move(hits), std::move(misses));
  return grid;
}

void write_prediction(const fs::path& path, const PointmapPrediction& pred) {
  pred.validate();
  Writer w(path);
  w.magic("OAPM");
  w.put<std::uint32_t>(static_cast<std::uint32_t>(pred.height));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(pred.width));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(pred.feature_dim));
  w.put_array(pred.X_ii.front().data(), pred.X_ii.size() * 3);
  w.put_array(pred.X_ij.front().data(), pred.X_ij.size() * 3);
  w.put_array(pred.C_i.data(), pred.C_i.size());
  w.put_array(pred.C_j.data(), pred.C_j.size());
  w.put_array(pred.D_i.data(), pred.D_i.size());
  w.put_array(pred.D_j.data(), pred.D_j.size());
  w.put_array(pred.Q_i.data(), pred.Q_i.size());
  w.put_array(pred.Q_j.data(), pred.Q_j.size());
  w.close();
}

PointmapPrediction read_prediction(const fs::path& path) {
  Reader r(path);
  r.magic("OAPM");
  const auto h = r.get<std::uint32_t>();
  const auto w = r.get<std::uint32_t>();
  const auto d = r.get<std::uint32_t>();
  check_dims(r, h, w);
  if (d == 0 || d > 4096) r.fail("implausible feature dimension");
  PointmapPrediction p(static_cast<int>(w), static_cast<int>(h), static_cast<int>(d));
  static_assert(sizeof(Vec3f) == 3 * sizeof(float));
  r.get_array(p.X_ii.front().data(), p.X_ii.size() * 3);
  r.get_array(p.X_ij.front().data(), p.X_ij.size() * 3);
  r.get_array(p.C_i.data(), p.C_i.size());
  r.get_array(p.C_j.data(), p.C_j.size());
  r.get_array(p.D_i.data(), p.D_i.size());
  r.get_array(p.D_j.data(), p.D_j.size());
  r.get_array(p.Q_i.data(), p.Q_i.size());
  r.get_array(p.Q_j.data(), p.Q_j.size());
  r.expect_end();
  return p;
}

void write_sonar(const fs::path& path, const SonarScan& scan) {
  const SonarGeometry& g = scan.geometry;
  Writer w(path);
  w.magic("OASN");
  w.put<std::uint32_t>(2);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(g.beam_count));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(g.bin_count));
  w.put<double>(g.h_fov);
  w.put<double>(g.v_fov);
  w.put<double>(g.max_range);
  w.put<double>(g.gain);
  const Vec3& t = scan.pose.translation();
  const Mat3& rot = scan.pose.rotation();
  for (int a = 0; a < 3; ++a) w.put<double>(t[a]);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) w.put<double>(rot(i, j));
  w.put_array(scan.intensities.data(), scan.intensities.size());
  w.close();
}

SonarScan read_sonar(const fs::path& path) {
  Reader r(path);
  r.magic("OASN");
  if (r.get<std::uint32_t>() != 2) r.fail("unsupported sonar version");
  SonarGeometry g;
  const auto beams = r.get<std::uint32_t>();
  const auto bins = r.get<std::uint32_t>();
  if (beams == 0 || bins == 0 || beams > kMaxDim || bins > kMaxDim) r.fail("implausible fan size");
  g.beam_count = static_cast<int>(beams);
  g.bin_count = static_cast<int>(bins);
  g.h_fov = r.get<double>();
  g.v_fov = r.get<double>();
  g.max_range = r.get<double>();
  g.gain = r.get<double>();
  try {
    g.validate();
  } catch (const Error& e) {
    r.fail(e.what());
  }
  Vec3 t;
  for (int a = 0; a < 3; ++a) t[a] = r.get<double>();
  Mat3 rot;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) rot(i, j) = r.get<double>();
  if (!((rot.transpose() * rot - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-6) ||
      !(rot.determinant() > 0.0)) {
    r.fail("pose rotation is not orthonormal");
  }
  SonarScan scan(g, RigidTransform(rot, t));
  r.get_array(scan.intensities.data(), scan.intensities.size());
  r.expect_end();
  return scan;
}

void write_ply(std::ostream& os, const FusedCloud& cloud) {
  if (cloud.colors.size() != cloud.points.size()) throw Error("write_ply: colors do not match points");
  os << "ply\nformat binary_little_endian 1.0\nelement vertex " << cloud.size()
     << "\nproperty float x\nproperty float y\nproperty float z\n"
        "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  std::vector<char> buf(cloud.size() * 15);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    char* p = buf.data() + 15 * i;
    std::memcpy(p, cloud.points[i].data(), 12);
    std::memcpy(p + 12, cloud.colors[i].data(), 3);
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_ply(const fs::path& path, const FusedCloud& cloud) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  write_ply(os, cloud);
  os.close();
  if (!os) throw Error("write failed: " + path.string());
}

FusedCloud read_ply(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  auto fail = [&](const std::string& why) -> void {
    throw FormatError(path.string() + ": " + why);
  };
  std::string line;
  std::getline(is, line);
  if (line != "ply") fail("not a PLY file");
  std::size_t count = 0;
  std::vector<std::string> props;
  bool binary_le = false;
  while (std::getline(is, line)) {
    if (line == "end_header") break;
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "format") {
      std::string fmt;
      ls >> fmt;
      binary_le = fmt == "binary_little_endian";
    } else if (kw == "element") {
      std::string name;
      ls >> name >> count;
      if (name != "vertex") fail("unexpected element " + name);
    } else if (kw == "property") {
      std::string type, name;
      ls >> type >> name;
      props.push_back(type + " " + name);
    }
  }
  if (line != "end_header") fail("missing end_header");
  if (!binary_le) fail("only binary_little_endian is supported");
  const std::vector<std::string> expected{"float x",     "float y",     "float z",
                                          "uchar red",   "uchar green", "uchar blue"};
  if (props != expected) fail("unsupported vertex layout");
  FusedCloud cloud;
  std::vector<char> buf(count * 15);
  is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(is.gcount()) != buf.size()) fail("truncated vertex data");
  cloud.points.resize(count);
  cloud.colors.resize(count);
  cloud.source.assign(count, -1);
  for (std::size_t i = 0; i < count; ++i) {
    std::memcpy(cloud.points[i].data(), buf.data() + 15 * i, 12);
    std::memcpy(cloud.colors[i].data(), buf.data() + 15 * i + 12, 3);
  }
  return cloud;
}

void write_raw_rgb(const fs::path& path, const Image& img) {
  Writer w(path);
  w.magic("ORGB");
  w.put<std::uint32_t>(static_cast<std::uint32_t>(img.width));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(img.height));
  w.put_array(img.rgb.data(), img.rgb.size());
  w.close();
}

Image read_raw_rgb(const fs::path& path) {
  Reader r(path);
  r.magic("ORGB");
  const auto w = r.get<std::uint32_t>();
  const auto h = r.get<std::uint32_t>();
  check_dims(r, h, w);
  Image img(static_cast<int>(w), static_cast<int>(h));
  r.get_array(img.rgb.data(), img.rgb.size());
  r.expect_end();
  img.source = path;
  return img;
}

Image read_image(const fs::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".png") return read_png(path);
  if (ext == ".rgb") return read_raw_rgb(path);
  throw Error("unsupported image format: " + path.string());
}

// ---------------------------------------------------------------- config

Config Config::parse(const std::string& text) {
  Config c;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw FormatError("config line " + std::to_string(lineno) + ": empty key");
    c.values_[key] = trim(line.substr(eq + 1));
  }
  return c;
}

Config Config::load(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse(ss.str());
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  used_[key] = true;
  return it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key, "");
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw FormatError("config: " + key + " expects a number, got '" + v + "'");
  }
}

long long Config::get_int(const std::string& key, long long fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key, "");
  try {
    std::size_t pos = 0;
    const long long d = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw FormatError("config: " + key + " expects an integer, got '" + v + "'");
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key, "");
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw FormatError("config: " + key + " expects a boolean, got '" + v + "'");
}

std::vector<std::string> Config::unused() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    if (!used_.count(k)) out.push_back(k);
  }
  return out;
}

PipelineConfig pipeline_config_from(const Config& c) {
  PipelineConfig p;
  p.tau_k = c.get_double("tau_k", p.tau_k);
  p.tau_r = c.get_double("tau_r", p.tau_r);
  p.tau_i = c.get_double("tau_i", p.tau_i);
  p.graph.tau_c = c.get_double("tau_c", p.graph.tau_c);
  p.graph.tau_q = c.get_double("tau_q", p.graph.tau_q);
  p.graph.tau_f = c.get_double("tau_f", p.graph.tau_f);
  p.graph.match.delta_depth = c.get_double("match_delta_depth", p.graph.match.delta_depth);
  p.graph.match.rho_feat = c.get_double("match_rho_feat", p.graph.match.rho_feat);
  p.graph.max_edge_matches =
      static_cast<std::size_t>(c.get_int("max_edge_matches", static_cast<long long>(p.graph.max_edge_matches)));
  p.min_keyframe_coverage = c.get_double("min_keyframe_coverage", p.min_keyframe_coverage);
  p.optimize_all = c.get_bool("optimize_all", p.optimize_all);
  p.optimize.max_iters = static_cast<int>(c.get_int("optimizer_max_iters", p.optimize.max_iters));
  p.optimize.w_prior = c.get_double("w_prior", p.optimize.w_prior);
  p.optimize.w_scale_prior = c.get_double("w_scale_prior", p.optimize.w_scale_prior);
  p.ransac.iterations = static_cast<int>(c.get_int("ransac_iterations", p.ransac.iterations));
  p.ransac.epsilon_in = c.get_double("ransac_epsilon_in_meters", p.ransac.epsilon_in);
  p.ransac.min_inlier_fraction =
      c.get_double("ransac_min_inlier_fraction", p.ransac.min_inlier_fraction);
  p.ransac.seed = static_cast<std::uint64_t>(c.get_int("ransac_seed", static_cast<long long>(p.ransac.seed)));
  p.validate();
  return p;
}

OccupancyRule occupancy_rule_from(const Config& c) {
  OccupancyRule r;
  const long long k = c.get_int("k_hit", r.k_hit);
  if (k < 1) throw Error("config: k_hit must be >= 1");
  r.k_hit = static_cast<std::uint32_t>(k);
  r.r_occ = c.get_double("r_occ", r.r_occ);
  if (!(r.r_occ >= 0.0 && r.r_occ <= 1.0)) throw Error("config: r_occ must lie in [0, 1]");
  return r;
}

// ---------------------------------------------------------------- manifest

namespace {

using nlohmann::json;

const char* kind_name(PrimitiveKind k) {
  switch (k) {
    case PrimitiveKind::Box: return "box";
    case PrimitiveKind::Cylinder: return "cylinder";
    case PrimitiveKind::Sphere: return "sphere";
  }
  return "box";
}

PrimitiveKind kind_from(const std::string& s) {
  if (s == "box") return PrimitiveKind::Box;
  if (s == "cylinder") return PrimitiveKind::Cylinder;
  if (s == "sphere") return PrimitiveKind::Sphere;
  throw FormatError("manifest: unknown primitive kind " + s);
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
Vec3 vec_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }
json rgb_json(const Rgb& c) { return json::array({c[0], c[1], c[2]}); }
Rgb rgb_from(const json& j) {
  return {j.at(0).get<std::uint8_t>(), j.at(1).get<std::uint8_t>(), j.at(2).get<std::uint8_t>()};
}

}  // namespace

void write_manifest(const fs::path& path, const DatasetManifest& m) {
  json j;
  j["format"] = "oaf-dataset";
  j["version"] = 1;
  j["frame_count"] = m.frame_count;
  j["sonar_count"] = m.sonar_count;
  j["image"] = {{"width", m.width}, {"height", m.height}, {"fx", m.fx},    {"fy", m.fy},
                {"cx", m.cx},       {"cy", m.cy},         {"format", m.image_format}};
  j["sonar"] = {{"beams", m.sonar.beam_count},   {"bins", m.sonar.bin_count},
                {"h_fov_rad", m.sonar.h_fov},     {"v_fov_rad", m.sonar.v_fov},
                {"max_range", m.sonar.max_range}, {"gain", m.sonar.gain}};
  j["ntu"] = m.ntu;
  j["beta"] = m.beta;
  j["seed"] = m.seed;
  j["trajectory"] = m.trajectory;
  j["grid"] = {{"origin", vec_json(m.grid.origin)},
               {"resolution", m.grid.resolution},
               {"dims", json::array({m.grid.dims[0], m.grid.dims[1], m.grid.dims[2]})}};
  j["floor"] = {{"enabled", m.scene.floor.enabled},
                {"height", m.scene.floor.height},
                {"color", rgb_json(m.scene.floor.color)}};
  j["sediment"] = rgb_json(m.scene.sediment);
  json objs = json::array();
  for (const Primitive& p : m.scene.objects) {
    const Eigen::Quaterniond q = p.pose.quaternion();
    objs.push_back({{"name", p.name},
                    {"kind", kind_name(p.kind)},
                    {"center", vec_json(p.pose.translation())},
                    {"rotation_xyzw", json::array({q.x(), q.y(), q.z(), q.w()})},
                    {"dims", vec_json(p.dims)},
                    {"color", rgb_json(p.color)},
                    {"size", p.size()}});
  }
  j["objects"] = objs;
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
  if (!os) throw Error("write failed: " + path.string());
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open manifest " + path.string());
  DatasetManifest m;
  try {
    const json j = json::parse(is);
    if (j.value("format", "") != "oaf-dataset") throw FormatError("not an oaf dataset manifest");
    m.frame_count = j.at("frame_count").get<int>();
    m.sonar_count = j.value("sonar_count", 0);
    const json& im = j.at("image");
    m.width = im.at("width").get<int>();
    m.height = im.at("height").get<int>();
    m.fx = im.at("fx").get<double>();
    m.fy = im.at("fy").get<double>();
    m.cx = im.at("cx").get<double>();
    m.cy = im.at("cy").get<double>();
    m.image_format = im.value("format", "png");
    const json& so = j.at("sonar");
    m.sonar.beam_count = so.at("beams").get<int>();
    m.sonar.bin_count = so.at("bins").get<int>();
    m.sonar.h_fov = so.at("h_fov_rad").get<double>();
    m.sonar.v_fov = so.at("v_fov_rad").get<double>();
    m.sonar.max_range = so.at("max_range").get<double>();
    m.sonar.gain = so.at("gain").get<double>();
    m.ntu = j.value("ntu", 0.0);
    m.beta = j.value("beta", 0.25);
    m.seed = j.value("seed", std::uint64_t{1});
    m.trajectory = j.value("trajectory", std::string("object_centric"));
    const json& g = j.at("grid");
    m.grid.origin = vec_from(g.at("origin"));
    m.grid.resolution = g.at("resolution").get<double>();
    for (std::size_t a = 0; a < 3; ++a) m.grid.dims[a] = g.at("dims").at(a).get<int>();
    const json& fl = j.at("floor");
    m.scene.floor.enabled = fl.at("enabled").get<bool>();
    m.scene.floor.height = fl.at("height").get<double>();
    m.scene.floor.color = rgb_from(fl.at("color"));
    if (j.contains("sediment")) m.scene.sediment = rgb_from(j.at("sediment"));
    for (const json& o : j.at("objects")) {
      Primitive p;
      p.name = o.at("name").get<std::string>();
      p.kind = kind_from(o.at("kind").get<std::string>());
      const json& q = o.at("rotation_xyzw");
      p.pose = RigidTransform::from_quaternion(
          Eigen::Quaterniond(q.at(3).get<double>(), q.at(0).get<double>(), q.at(1).get<double>(),
                             q.at(2).get<double>()),
          vec_from(o.at("center")));
      p.dims = vec_from(o.at("dims"));
      p.color = rgb_from(o.at("color"));
      p.validate();
      m.scene.objects.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  m.sonar.validate();
  m.grid.validate();
  (void)m.camera();  // validates intrinsics
  return m;
}

fs::path frame_path(const fs::path& dataset, int index, const std::string& format) {
  char name[32];
  std::snprintf(name, sizeof name, "%06d.%s", index, format == "png" ? "png" : "rgb");
  return dataset / "frames" / name;
}

fs::path sonar_path(const fs::path& dataset, int index) {
  char name[32];
  std::snprintf(name, sizeof name, "%06d.bin", index);
  return dataset / "sonar" / name;
}

void validate_dataset(const fs::path& dataset, const DatasetManifest& m) {
  if (!fs::exists(dataset / "poses.txt")) throw Error("dataset: missing poses.txt");
  for (int i = 0; i < m.frame_count; ++i) {
    if (!fs::exists(frame_path(dataset, i, m.image_format))) {
      throw Error("dataset: missing " + frame_path(dataset, i, m.image_format).string());
    }
  }
  for (int i = 0; i < m.sonar_count; ++i) {
    if (!fs::exists(sonar_path(dataset, i))) {
      throw Error("dataset: missing " + sonar_path(dataset, i).string());
    }
  }
  if (m.frame_count > 0) {
    const Image first = read_image(frame_path(dataset, 0, m.image_format));
    if (first.width != m.width || first.height != m.height) {
      throw Error("dataset: frame size does not match the intrinsics");
    }
  }
}

}  // namespace oaf
