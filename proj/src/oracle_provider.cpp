#include "oaf/oracle_provider.hpp"

#include "oaf/errors.hpp"

#include <cmath>
#include <random>
#include <string>

namespace oaf {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t pair_seed(std::uint64_t seed, std::int64_t a, std::int64_t b) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(a) * 0x100000001b3ULL ^
                                      splitmix64(static_cast<std::uint64_t>(b))));
}

struct SideGeometry {
  std::vector<double> depth;      // NaN where no hit
  std::vector<double> incidence;  // |cos|
  std::vector<Vec3> world;
};

SideGeometry cast_side(const Scene& scene, const PinholeCamera& cam, const RigidTransform& pose) {
  SideGeometry g;
  const std::size_t n = cam.pixel_count();
  g.depth.assign(n, std::numeric_limits<double>::quiet_NaN());
  g.incidence.assign(n, 0.0);
  g.world.assign(n, Vec3::Zero());
  const Vec3 o = pose.translation();
  const int w = cam.width();
#pragma omp parallel for schedule(dynamic, 4)
  for (int v = 0; v < cam.height(); ++v) {
    for (int u = 0; u < w; ++u) {
      const std::size_t idx = static_cast<std::size_t>(v) * w + u;
      const Vec3 d = pose.rotation() * cam.ray(u, v);
      if (auto hit = intersect(scene, o, d)) {
        g.depth[idx] = hit->t;
        g.incidence[idx] = std::abs(hit->normal.dot(d));
        g.world[idx] = o + hit->t * d;
      }
    }
  }
  return g;
}

}  // namespace

OracleProvider::OracleProvider(Scene scene, PinholeCamera camera,
                               std::map<std::int64_t, RigidTransform> poses, OracleConfig cfg,
                               NtuFn ntu)
    : scene_(std::move(scene)),
      camera_(camera),
      poses_(std::move(poses)),
      cfg_(cfg),
      ntu_(std::move(ntu)) {
  if (cfg_.feature_dim < 1) throw Error("oracle: feature_dim must be >= 1");
  if (!(cfg_.scale_min > 0) || cfg_.scale_max < cfg_.scale_min) {
    throw Error("oracle: invalid scale range");
  }
}

const RigidTransform& OracleProvider::pose_of(std::int64_t id) const {
  auto it = poses_.find(id);
  if (it == poses_.end()) throw ProviderError("oracle: no pose for frame " + std::to_string(id));
  return it->second;
}

double OracleProvider::injected_scale(std::int64_t id_i, std::int64_t id_j) const {
  if (cfg_.forced_scale) return *cfg_.forced_scale;
  std::mt19937_64 rng(pair_seed(cfg_.seed, id_i, id_j));
  std::uniform_real_distribution<double> dist(cfg_.scale_min, cfg_.scale_max);
  return dist(rng);
}

void OracleProvider::feature_at(const Vec3& world, std::span<float> out) const {
  const Vec3 g = world / cfg_.feature_cell;
  const Vec3 base(std::floor(g.x()), std::floor(g.y()), std::floor(g.z()));
  const Vec3 f = g - base;
  std::fill(out.begin(), out.end(), 0.0f);
  const std::uint64_t salt = splitmix64(cfg_.seed ^ 0x5eedf00dULL);
  for (int corner = 0; corner < 8; ++corner) {
    const int dx = corner & 1;
    const int dy = (corner >> 1) & 1;
    const int dz = (corner >> 2) & 1;
    const double w = (dx ? f.x() : 1.0 - f.x()) * (dy ? f.y() : 1.0 - f.y()) *
                     (dz ? f.z() : 1.0 - f.z());
    if (w == 0.0) continue;
    std::uint64_t h = salt;
    h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(base.x()) + dx));
    h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(base.y()) + dy));
    h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(base.z()) + dz));
    for (std::size_t k = 0; k < out.size(); ++k) {
      h = splitmix64(h);
      const double r = static_cast<double>(h >> 11) * (2.0 / 9007199254740992.0) - 1.0;
      out[k] += static_cast<float>(w * r);
    }
  }
}

PointmapPrediction OracleProvider::predict(const Image& img_i, const Image& img_j) {
  if (img_i.width != camera_.width() || img_i.height != camera_.height() ||
      img_j.width != camera_.width() || img_j.height != camera_.height()) {
    throw Error("oracle: image size does not match the camera");
  }
  const RigidTransform& pose_i = pose_of(img_i.frame_id);
  const RigidTransform& pose_j = pose_of(img_j.frame_id);
  const double scale = injected_scale(img_i.frame_id, img_j.frame_id);
  const TurbidityModel turb_i{ntu(img_i.frame_id), cfg_.beta};
  const TurbidityModel turb_j{ntu(img_j.frame_id), cfg_.beta};

  const int d = cfg_.feature_dim;
  PointmapPrediction pred(camera_.width(), camera_.height(), d);
  const std::size_t n = pred.pixel_count();

  const SideGeometry gi = cast_side(scene_, camera_, pose_i);
  const bool same = img_i.frame_id == img_j.frame_id;
  const SideGeometry gj = same ? gi : cast_side(scene_, camera_, pose_j);
  const RigidTransform i_from_world = pose_i.inverse();

  auto fill_side = [&](const SideGeometry& g, const TurbidityModel& turb, std::vector<Vec3f>& pts,
                       std::vector<float>& conf, std::vector<float>& feat,
                       std::vector<float>& fconf) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(n); ++s) {
      const auto idx = static_cast<std::size_t>(s);
      if (!std::isfinite(g.depth[idx])) continue;
      pts[idx] = (scale * (i_from_world * g.world[idx])).cast<float>();
      const double m = turb.multiplier(g.depth[idx]);
      conf[idx] = static_cast<float>(
          (cfg_.conf_grazing + (cfg_.conf_frontal - cfg_.conf_grazing) * g.incidence[idx]) * m);
      fconf[idx] = static_cast<float>(cfg_.feat_conf * std::sqrt(m));
      feature_at(g.world[idx], std::span<float>(feat).subspan(idx * d, d));
    }
  };
  fill_side(gi, turb_i, pred.X_ii, pred.C_i, pred.D_i, pred.Q_i);
  if (same) {
    pred.C_j = pred.C_i;
    pred.Q_j = pred.Q_i;
  } else {
    fill_side(gj, turb_j, pred.X_ij, pred.C_j, pred.D_j, pred.Q_j);
  }

  // Noise is drawn serially in pixel order so results do not depend on threads.
  std::mt19937_64 rng(pair_seed(cfg_.seed, img_i.frame_id, img_j.frame_id) ^ 0xabcdefULL);
  std::normal_distribution<double> unit(0.0, 1.0);
  auto perturb = [&](std::vector<Vec3f>& pts, std::vector<float>& feat) {
    for (std::size_t idx = 0; idx < n; ++idx) {
      if (!pts[idx].allFinite()) continue;
      if (cfg_.noise_sigma > 0) {
        const Vec3 e(unit(rng), unit(rng), unit(rng));
        pts[idx] += (scale * cfg_.noise_sigma * e).cast<float>();
      }
      if (cfg_.feature_noise > 0) {
        for (int k = 0; k < d; ++k) {
          feat[idx * d + k] += static_cast<float>(cfg_.feature_noise * unit(rng));
        }
      }
    }
  };
  perturb(pred.X_ii, pred.D_i);
  if (same) {
    pred.X_ij = pred.X_ii;
    pred.D_j = pred.D_i;
  } else {
    perturb(pred.X_ij, pred.D_j);
  }
  return pred;
}

}  // namespace oaf
