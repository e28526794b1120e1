#include "oaf/scene.hpp"

#include "oaf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace oaf {

namespace {

constexpr double kEps = 1e-9;
constexpr double kPi = std::numbers::pi;

std::optional<std::pair<double, Vec3>> hit_box(const Vec3& o, const Vec3& d, const Vec3& half) {
  double t_near = -1e300;
  double t_far = 1e300;
  int near_axis = 0;
  int far_axis = 0;
  double near_sign = 1.0;
  double far_sign = 1.0;
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) < 1e-300) {
      if (o[k] < -half[k] || o[k] > half[k]) return std::nullopt;
      continue;
    }
    double ta = (-half[k] - o[k]) / d[k];
    double tb = (half[k] - o[k]) / d[k];
    double sa = -1.0;
    double sb = 1.0;
    if (ta > tb) {
      std::swap(ta, tb);
      std::swap(sa, sb);
    }
    if (ta > t_near) {
      t_near = ta;
      near_axis = k;
      near_sign = sa;
    }
    if (tb < t_far) {
      t_far = tb;
      far_axis = k;
      far_sign = sb;
    }
  }
  if (t_near > t_far || t_far <= kEps) return std::nullopt;
  Vec3 n = Vec3::Zero();
  if (t_near > kEps) {
    n[near_axis] = near_sign;
    return std::make_pair(t_near, n);
  }
  n[far_axis] = far_sign;
  return std::make_pair(t_far, n);
}

std::optional<std::pair<double, Vec3>> hit_cylinder(const Vec3& o, const Vec3& d, double r,
                                                    double hh) {
  double best = 1e300;
  Vec3 normal = Vec3::Zero();
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a > 1e-300) {
    const double b = 2.0 * (o.x() * d.x() + o.y() * d.y());
    const double c = o.x() * o.x() + o.y() * o.y() - r * r;
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
        if (t <= kEps || t >= best) continue;
        const double z = o.z() + t * d.z();
        if (std::abs(z) > hh) continue;
        best = t;
        normal = Vec3(o.x() + t * d.x(), o.y() + t * d.y(), 0.0).normalized();
      }
    }
  }
  if (std::abs(d.z()) > 1e-300) {
    for (double cap : {-hh, hh}) {
      const double t = (cap - o.z()) / d.z();
      if (t <= kEps || t >= best) continue;
      const double x = o.x() + t * d.x();
      const double y = o.y() + t * d.y();
      if (x * x + y * y > r * r) continue;
      best = t;
      normal = Vec3(0, 0, cap > 0 ? 1.0 : -1.0);
    }
  }
  if (best == 1e300) return std::nullopt;
  return std::make_pair(best, normal);
}

std::optional<std::pair<double, Vec3>> hit_sphere(const Vec3& o, const Vec3& d, double r) {
  const double b = o.dot(d);
  const double c = o.squaredNorm() - r * r;
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  double t = -b - sq;
  if (t <= kEps) t = -b + sq;
  if (t <= kEps) return std::nullopt;
  return std::make_pair(t, (o + t * d).normalized());
}

Rgb shade(const Rgb& base, double incidence, double m, const Rgb& sediment, double texture) {
  Rgb out;
  for (int c = 0; c < 3; ++c) {
    const double lit = base[c] * (0.55 + 0.45 * incidence) + texture;
    const double hazed = lit * m + sediment[c] * (1.0 - m);
    out[c] = static_cast<std::uint8_t>(std::clamp(std::lround(hazed), 0L, 255L));
  }
  return out;
}

}  // namespace

void Primitive::validate() const {
  if (!(dims.minCoeff() > 0)) throw Error("primitive '" + name + "': dimensions must be > 0");
}

double Primitive::size() const {
  switch (kind) {
    case PrimitiveKind::Box:
      return dims.maxCoeff();
    case PrimitiveKind::Cylinder:
      return std::max(dims.x(), dims.z());
    case PrimitiveKind::Sphere:
      return dims.x();
  }
  return 0.0;
}

std::pair<Vec3, Vec3> Primitive::bounds() const {
  Vec3 half;
  switch (kind) {
    case PrimitiveKind::Box:
      half = 0.5 * dims;
      break;
    case PrimitiveKind::Cylinder:
      half = Vec3(0.5 * dims.x(), 0.5 * dims.x(), 0.5 * dims.z());
      break;
    case PrimitiveKind::Sphere:
      half = Vec3::Constant(0.5 * dims.x());
      break;
  }
  const Vec3 ext = pose.rotation().cwiseAbs() * half;
  return {pose.translation() - ext, pose.translation() + ext};
}

Scene default_scene() {
  Scene s;
  auto on_floor = [](double x, double y, double height, double yaw) {
    return RigidTransform::from_axis_angle(Vec3::UnitZ(), yaw, Vec3(x, y, 0.5 * height));
  };
  s.objects.push_back({"brick", PrimitiveKind::Box, on_floor(0.35, 0.15, 0.057, 0.35),
                       Vec3(0.202, 0.097, 0.057), Rgb{170, 72, 52}});
  // Close to the sediment colour: the first object to fade as turbidity rises.
  s.objects.push_back({"cinder_block", PrimitiveKind::Box, on_floor(-0.33, 0.3, 0.195, -0.25),
                       Vec3(0.395, 0.195, 0.195), Rgb{150, 138, 108}});
  s.objects.push_back({"pipe", PrimitiveKind::Cylinder, on_floor(0.3, -0.35, 0.09, 0.0),
                       Vec3(0.097, 0.097, 0.09), Rgb{40, 90, 165}});
  s.objects.push_back({"mug", PrimitiveKind::Cylinder, on_floor(-0.3, -0.35, 0.1, 0.0),
                       Vec3(0.118, 0.118, 0.1), Rgb{232, 230, 220}});
  return s;
}

Scene single_box_scene(double side) {
  Scene s;
  s.floor.enabled = false;
  s.objects.push_back({"box", PrimitiveKind::Box,
                       RigidTransform::from_axis_angle(Vec3::UnitZ(), 0.3,
                                                       Vec3(0.0, 0.0, 0.5 * side)),
                       Vec3::Constant(side), Rgb{180, 90, 60}});
  return s;
}

std::optional<RayHit> intersect(const Scene& scene, const Vec3& origin, const Vec3& dir,
                                double t_max) {
  std::optional<RayHit> best;
  auto consider = [&](double t, const Vec3& n, int obj) {
    if (t > kEps && t < t_max && (!best || t < best->t)) best = RayHit{t, n, obj};
  };
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const Primitive& p = scene.objects[i];
    const Mat3 rt = p.pose.rotation().transpose();
    const Vec3 o = rt * (origin - p.pose.translation());
    const Vec3 d = rt * dir;
    std::optional<std::pair<double, Vec3>> h;
    switch (p.kind) {
      case PrimitiveKind::Box:
        h = hit_box(o, d, 0.5 * p.dims);
        break;
      case PrimitiveKind::Cylinder:
        h = hit_cylinder(o, d, 0.5 * p.dims.x(), 0.5 * p.dims.z());
        break;
      case PrimitiveKind::Sphere:
        h = hit_sphere(o, d, 0.5 * p.dims.x());
        break;
    }
    if (h) consider(h->first, p.pose.rotation() * h->second, static_cast<int>(i));
  }
  if (scene.floor.enabled && std::abs(dir.z()) > 1e-300) {
    const double t = (scene.floor.height - origin.z()) / dir.z();
    consider(t, Vec3(0, 0, origin.z() >= scene.floor.height ? 1.0 : -1.0), -1);
  }
  return best;
}

double TurbidityModel::multiplier(double range) const {
  return std::exp(-beta * ntu * std::max(0.0, range));
}

void attenuate_confidence(std::span<float> conf, const DepthImage& depth,
                          const TurbidityModel& model) {
  if (conf.size() != depth.size()) throw Error("attenuate_confidence: size mismatch");
  for (std::size_t i = 0; i < conf.size(); ++i) {
    conf[i] = depth.valid(i) ? static_cast<float>(conf[i] * model.multiplier(depth[i])) : 0.0f;
  }
}

RaycastResult raycast(const Scene& scene, const PinholeCamera& cam,
                      const RigidTransform& world_from_camera, const TurbidityModel& turbidity) {
  RaycastResult out;
  out.depth = DepthImage(cam.width(), cam.height());
  out.color = Image(cam.width(), cam.height());
  out.incidence.assign(cam.pixel_count(), 0.0f);
  out.object.assign(cam.pixel_count(), -2);
  const Vec3 origin = world_from_camera.translation();
  const int w = cam.width();
#pragma omp parallel for schedule(dynamic, 4)
  for (int v = 0; v < cam.height(); ++v) {
    for (int u = 0; u < w; ++u) {
      const std::size_t idx = static_cast<std::size_t>(v) * w + u;
      const Vec3 d = world_from_camera.rotation() * cam.ray(u, v);
      const auto hit = intersect(scene, origin, d);
      std::uint8_t* px = out.color.at(u, v);
      if (!hit) {
        const double m = turbidity.multiplier(3.0);
        for (int c = 0; c < 3; ++c) {
          px[c] = static_cast<std::uint8_t>(std::lround(20.0 * m + scene.sediment[c] * (1.0 - m)));
        }
        continue;
      }
      const double incidence = std::abs(hit->normal.dot(d));
      out.depth.set(idx, static_cast<float>(hit->t));
      out.incidence[idx] = static_cast<float>(incidence);
      out.object[idx] = hit->object;
      const Vec3 p = origin + hit->t * d;
      Rgb base;
      double texture = 0.0;
      if (hit->object < 0) {
        base = scene.floor.color;
        const long cx = std::lround(std::floor(p.x() / 0.1));
        const long cy = std::lround(std::floor(p.y() / 0.1));
        texture = ((cx + cy) % 2 == 0) ? 14.0 : -14.0;
      } else {
        base = scene.objects[hit->object].color;
      }
      const Rgb c = shade(base, incidence, turbidity.multiplier(hit->t), scene.sediment, texture);
      px[0] = c[0];
      px[1] = c[1];
      px[2] = c[2];
    }
  }
  return out;
}

SonarScan simulate_sonar(const Scene& scene, const RigidTransform& world_from_sonar,
                         const SonarGeometry& geometry, const SonarSimOptions& opts) {
  geometry.validate();
  SonarScan scan(geometry, world_from_sonar);
  const int rays = std::max(1, opts.elevation_rays);
  const Vec3 origin = world_from_sonar.translation();
#pragma omp parallel for schedule(static)
  for (int beam = 0; beam < geometry.beam_count; ++beam) {
    const double az = geometry.beam_azimuth(beam);
    for (int j = 0; j < rays; ++j) {
      const double el = -0.5 * geometry.v_fov + (j + 0.5) * geometry.v_fov / rays;
      const Vec3 d = world_from_sonar.rotation() * sonar_direction(az, el);
      const auto hit = intersect(scene, origin, d, geometry.max_range);
      if (!hit) continue;
      const int bin = geometry.range_to_bin(hit->t);
      if (bin >= 0) scan.at(beam, bin) += static_cast<float>(geometry.gain / rays);
    }
  }
  return scan;
}

RigidTransform look_at(const Vec3& eye, const Vec3& target) {
  const Vec3 z = (target - eye).normalized();
  Vec3 x = z.cross(Vec3::UnitZ());
  if (x.norm() < 1e-9) x = Vec3::UnitX();
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return {r, eye};
}

RigidTransform sonar_pose(const Vec3& position, double yaw, double pitch, double roll) {
  const Mat3 r = (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
                  Eigen::AngleAxisd(roll, Vec3::UnitX()))
                     .toRotationMatrix();
  return {r, position};
}

double distance_to_objects(const Scene& scene, const Vec3& p) {
  double best = 1e300;
  for (const Primitive& obj : scene.objects) {
    const Vec3 q = obj.pose.rotation().transpose() * (p - obj.pose.translation());
    double dist = 0.0;
    switch (obj.kind) {
      case PrimitiveKind::Box: {
        const Vec3 h = 0.5 * obj.dims;
        const Vec3 outside = (q.cwiseAbs() - h).cwiseMax(0.0);
        const double inside = std::min((q.cwiseAbs() - h).maxCoeff(), 0.0);
        dist = outside.norm() + inside;
        break;
      }
      case PrimitiveKind::Cylinder: {
        const double dr = std::hypot(q.x(), q.y()) - 0.5 * obj.dims.x();
        const double dz = std::abs(q.z()) - 0.5 * obj.dims.z();
        dist = std::hypot(std::max(dr, 0.0), std::max(dz, 0.0)) + std::min(std::max(dr, dz), 0.0);
        break;
      }
      case PrimitiveKind::Sphere:
        dist = q.norm() - 0.5 * obj.dims.x();
        break;
    }
    best = std::min(best, std::abs(dist));
  }
  return best;
}

namespace {

void sample_primitive_surface(const Primitive& obj, double h, std::vector<Vec3>& out) {
  auto steps = [h](double len) { return std::max(1, static_cast<int>(std::ceil(len / h))); };
  switch (obj.kind) {
    case PrimitiveKind::Box: {
      const Vec3 half = 0.5 * obj.dims;
      for (int axis = 0; axis < 3; ++axis) {
        const int a1 = (axis + 1) % 3;
        const int a2 = (axis + 2) % 3;
        const int n1 = steps(obj.dims[a1]);
        const int n2 = steps(obj.dims[a2]);
        for (double sign : {-1.0, 1.0}) {
          for (int i = 0; i <= n1; ++i) {
            for (int j = 0; j <= n2; ++j) {
              Vec3 q;
              q[axis] = sign * half[axis];
              q[a1] = -half[a1] + obj.dims[a1] * i / n1;
              q[a2] = -half[a2] + obj.dims[a2] * j / n2;
              out.push_back(obj.pose * q);
            }
          }
        }
      }
      break;
    }
    case PrimitiveKind::Cylinder: {
      const double r = 0.5 * obj.dims.x();
      const double hh = 0.5 * obj.dims.z();
      const int na = steps(2.0 * kPi * r);
      const int nz = steps(obj.dims.z());
      const int nr = steps(r);
      for (int i = 0; i < na; ++i) {
        const double a = 2.0 * kPi * i / na;
        for (int j = 0; j <= nz; ++j) {
          out.push_back(obj.pose * Vec3(r * std::cos(a), r * std::sin(a), -hh + obj.dims.z() * j / nz));
        }
        for (int j = 0; j <= nr; ++j) {
          const double rr = r * j / nr;
          out.push_back(obj.pose * Vec3(rr * std::cos(a), rr * std::sin(a), hh));
          out.push_back(obj.pose * Vec3(rr * std::cos(a), rr * std::sin(a), -hh));
        }
      }
      break;
    }
    case PrimitiveKind::Sphere: {
      const double r = 0.5 * obj.dims.x();
      const int nt = steps(kPi * r);
      for (int i = 0; i <= nt; ++i) {
        const double th = kPi * i / nt;
        const int np = steps(2.0 * kPi * r * std::sin(th));
        for (int j = 0; j < np; ++j) {
          const double ph = 2.0 * kPi * j / np;
          out.push_back(obj.pose * Vec3(r * std::sin(th) * std::cos(ph),
                                        r * std::sin(th) * std::sin(ph), r * std::cos(th)));
        }
      }
      break;
    }
  }
}

}  // namespace

std::vector<std::size_t> voxelize_surfaces(const Scene& scene, const GridSpec& spec,
                                           double spacing) {
  const double h = spacing > 0 ? spacing : spec.resolution / 8.0;
  std::vector<Vec3> pts;
  for (const Primitive& obj : scene.objects) sample_primitive_surface(obj, h, pts);
  if (scene.floor.enabled) {
    const Vec3 ext = spec.extent();
    const int nx = static_cast<int>(std::ceil(ext.x() / h));
    const int ny = static_cast<int>(std::ceil(ext.y() / h));
    for (int i = 0; i <= nx; ++i) {
      for (int j = 0; j <= ny; ++j) {
        pts.emplace_back(spec.origin.x() + ext.x() * i / nx, spec.origin.y() + ext.y() * j / ny,
                         scene.floor.height);
      }
    }
  }
  std::vector<std::size_t> out;
  for (const Vec3& p : pts) {
    if (auto idx = spec.world_to_index(p)) out.push_back(spec.linear(*idx));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

GridSpec default_grid_spec(double resolution) {
  GridSpec g;
  g.resolution = resolution;
  g.origin = Vec3(-1.05, -1.05, -0.125);
  g.dims = {static_cast<int>(std::ceil(2.1 / resolution - 1e-9)),
            static_cast<int>(std::ceil(2.1 / resolution - 1e-9)),
            static_cast<int>(std::ceil(1.0 / resolution - 1e-9))};
  return g;
}

// ---------------------------------------------------------------------------
// Trajectories

namespace {

double ease(double s) { return 0.5 - 0.5 * std::cos(kPi * std::clamp(s, 0.0, 1.0)); }

std::vector<RigidTransform> sweep(const Scene& scene, int n, const TrajectoryConfig& cfg) {
  std::vector<RigidTransform> out;
  out.reserve(n);
  const bool closed = cfg.sweep_arc >= 2.0 * kPi - 1e-9;
  const double start = -0.5 * kPi;
  for (int k = 0; k < n; ++k) {
    const double s = n == 1 ? 0.0 : (closed ? static_cast<double>(k) / n
                                            : static_cast<double>(k) / (n - 1));
    const double az = start + s * cfg.sweep_arc;
    Vec3 pos(cfg.sweep_radius * std::cos(az), cfg.sweep_radius * std::sin(az), cfg.sweep_height);
    // Lift until the standoff constraint holds.
    for (int guard = 0; guard < 200 && !scene.objects.empty() &&
                        distance_to_objects(scene, pos) < cfg.min_standoff;
         ++guard) {
      pos.z() += 0.01;
    }
    const double tilt = 0.5 - 0.5 * std::cos(2.0 * kPi * cfg.sweep_tilt_cycles * s);
    const double pitch = cfg.sweep_pitch_min + tilt * (cfg.sweep_pitch_max - cfg.sweep_pitch_min);
    const double roll = cfg.sweep_roll_max * std::sin(2.0 * kPi * cfg.sweep_roll_cycles * s);
    out.push_back(sonar_pose(pos, az + kPi, pitch, roll));
  }
  return out;
}

struct Segment {
  Vec3 eye0, eye1, target0, target1;
  int frames;
};

std::vector<RigidTransform> object_centric(const Scene& scene, int n, const TrajectoryConfig& cfg) {
  const Vec3 center = Vec3::Zero();
  std::vector<Segment> segments;
  if (scene.objects.empty()) {
    const Vec3 eye1 = center + (cfg.stowed_position - center) * 0.5;
    segments.push_back({cfg.stowed_position, eye1, center, center, n});
  } else {
    const int per_obj = std::max(1, n / static_cast<int>(scene.objects.size()));
    Vec3 eye = cfg.stowed_position;
    Vec3 target = center;
    int used = 0;
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
      const Vec3 c = scene.objects[i].pose.translation();
      Vec3 horiz = Vec3(eye.x() - c.x(), eye.y() - c.y(), 0.0);
      if (horiz.norm() < 1e-6) horiz = Vec3(0, -1, 0);
      horiz.normalize();
      const Vec3 dir = std::cos(cfg.approach_elevation) * horiz +
                       std::sin(cfg.approach_elevation) * Vec3::UnitZ();
      const Vec3 far = c + cfg.approach_far * dir;
      const Vec3 near = c + cfg.approach_near * dir;
      int budget = (i + 1 == scene.objects.size()) ? n - used : per_obj;
      budget = std::max(budget, 0);
      const int transit = std::min(budget, static_cast<int>(std::lround(budget * cfg.transit_fraction)));
      segments.push_back({eye, far, target, c, transit});
      segments.push_back({far, near, c, c, budget - transit});
      used += budget;
      eye = near;
      target = c;
    }
  }
  std::vector<RigidTransform> out;
  out.reserve(n);
  for (const Segment& seg : segments) {
    for (int k = 0; k < seg.frames; ++k) {
      const double s = ease(seg.frames == 1 ? 1.0 : static_cast<double>(k + 1) / seg.frames);
      const Vec3 eye = seg.eye0 + s * (seg.eye1 - seg.eye0);
      const Vec3 tgt = seg.target0 + s * (seg.target1 - seg.target0);
      out.push_back(look_at(eye, tgt));
    }
  }
  if (out.empty()) out.push_back(look_at(cfg.stowed_position, center));
  out.resize(static_cast<std::size_t>(n), out.back());
  return out;
}

}  // namespace

std::vector<RigidTransform> gen_trajectory(TrajectoryKind kind, const Scene& scene, int n_frames,
                                           const TrajectoryConfig& cfg) {
  if (n_frames < 1) throw Error("gen_trajectory: n_frames must be >= 1");
  return kind == TrajectoryKind::Sweep ? sweep(scene, n_frames, cfg)
                                       : object_centric(scene, n_frames, cfg);
}

}  // namespace oaf
