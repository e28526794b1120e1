#include "oaf/pointmap.hpp"

#include "oaf/errors.hpp"

#include <cmath>
#include <string>

namespace oaf {

PointmapPrediction::PointmapPrediction(int w, int h, int d)
    : width(w), height(h), feature_dim(d) {
  const std::size_t n = static_cast<std::size_t>(w) * h;
  const Vec3f nan = Vec3f::Constant(std::numeric_limits<float>::quiet_NaN());
  X_ii.assign(n, nan);
  X_ij.assign(n, nan);
  C_i.assign(n, 0.0f);
  C_j.assign(n, 0.0f);
  D_i.assign(n * d, 0.0f);
  D_j.assign(n * d, 0.0f);
  Q_i.assign(n, 0.0f);
  Q_j.assign(n, 0.0f);
}

void PointmapPrediction::validate() const {
  if (width <= 0 || height <= 0) throw Error("prediction: empty image dimensions");
  if (feature_dim < 1) throw Error("prediction: feature dimension must be >= 1");
  const std::size_t n = pixel_count();
  const std::size_t nd = n * static_cast<std::size_t>(feature_dim);
  if (X_ii.size() != n || X_ij.size() != n || C_i.size() != n || C_j.size() != n ||
      Q_i.size() != n || Q_j.size() != n || D_i.size() != nd || D_j.size() != nd) {
    throw Error("prediction: array sizes disagree with " + std::to_string(width) + "x" +
                std::to_string(height) + "x" + std::to_string(feature_dim));
  }
}

PointmapView frame_view(const PointmapPrediction& pred) {
  return {pred.width, pred.height, pred.feature_dim, pred.X_ii, pred.D_i, pred.C_i, pred.Q_i};
}

PointmapPrediction predict(PointmapProvider& provider, const Image& img_i, const Image& img_j) {
  if (img_i.width != img_j.width || img_i.height != img_j.height) {
    throw Error("predict: image sizes differ");
  }
  if (std::max(img_i.width, img_i.height) > kMaxPredictorDim) {
    throw Error("predict: images exceed the predictor's maximum dimension of 512");
  }
  PointmapPrediction pred = provider.predict(img_i, img_j);
  pred.validate();
  if (pred.width != img_i.width || pred.height != img_i.height) {
    throw ProviderError("predict: provider returned a prediction of the wrong size");
  }
  return pred;
}

DepthImage optical_depth(const PointmapPrediction& pred) {
  DepthImage out(pred.width, pred.height);
  for (std::size_t i = 0; i < pred.X_ii.size(); ++i) {
    const Vec3f& p = pred.X_ii[i];
    if (!p.allFinite()) continue;
    const float d = p.norm();
    if (d > 0.0f && std::isfinite(d)) out.set(i, d);
  }
  return out;
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += static_cast<double>(a[k]) * b[k];
    na += static_cast<double>(a[k]) * a[k];
    nb += static_cast<double>(b[k]) * b[k];
  }
  if (na <= 0.0 || nb <= 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

namespace {

void check_views(const PointmapView& frame, const PointmapView& keyframe,
                 const PinholeCamera& cam) {
  if (keyframe.width != cam.width() || keyframe.height != cam.height()) {
    throw Error("match_projective: keyframe does not match the camera");
  }
  if (frame.feature_dim != keyframe.feature_dim) {
    throw Error("match_projective: feature dimensions differ");
  }
}

inline bool try_match(const PointmapView& frame, const PointmapView& keyframe,
                      const RigidTransform& t_kf, const PinholeCamera& cam, const MatchConfig& cfg,
                      std::size_t fp, Match& out) {
  const Vec3f& p = frame.points[fp];
  if (!p.allFinite()) return false;
  const Vec3f pk = t_kf.apply(p);
  const auto kp = cam.project_to_index(pk);
  if (!kp) return false;
  const Vec3f& q = keyframe.points[static_cast<std::size_t>(*kp)];
  if (!q.allFinite()) return false;
  if (std::abs(pk.norm() - q.norm()) >= cfg.delta_depth) return false;
  if (cosine_similarity(frame.feature(fp), keyframe.feature(static_cast<std::size_t>(*kp))) <
      cfg.rho_feat) {
    return false;
  }
  out = {static_cast<int>(fp), *kp};
  return true;
}

}  // namespace

MatchSet match_projective(const PointmapView& frame, const PointmapView& keyframe,
                          const RigidTransform& keyframe_from_frame, const PinholeCamera& cam,
                          const MatchConfig& cfg) {
  check_views(frame, keyframe, cam);
  MatchSet out{keyframe.width, keyframe.height, {}};
  const int rows = frame.height;
  std::vector<std::vector<Match>> per_row(static_cast<std::size_t>(rows));
#pragma omp parallel for schedule(dynamic, 8)
  for (int v = 0; v < rows; ++v) {
    auto& row = per_row[static_cast<std::size_t>(v)];
    for (int u = 0; u < frame.width; ++u) {
      Match m;
      if (try_match(frame, keyframe, keyframe_from_frame, cam, cfg,
                    static_cast<std::size_t>(v) * frame.width + u, m)) {
        row.push_back(m);
      }
    }
  }
  std::size_t total = 0;
  for (const auto& row : per_row) total += row.size();
  out.pairs.reserve(total);
  for (const auto& row : per_row) out.pairs.insert(out.pairs.end(), row.begin(), row.end());
  return out;
}

namespace reference {

MatchSet match_projective(const PointmapView& frame, const PointmapView& keyframe,
                          const RigidTransform& keyframe_from_frame, const PinholeCamera& cam,
                          const MatchConfig& cfg) {
  check_views(frame, keyframe, cam);
  MatchSet out{keyframe.width, keyframe.height, {}};
  for (std::size_t fp = 0; fp < frame.points.size(); ++fp) {
    Match m;
    if (try_match(frame, keyframe, keyframe_from_frame, cam, cfg, fp, m)) out.pairs.push_back(m);
  }
  return out;
}

}  // namespace reference

}  // namespace oaf
