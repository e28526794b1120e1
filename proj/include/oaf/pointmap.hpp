#pragma once

#include "oaf/geometry.hpp"
#include "oaf/image.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace oaf {

/// Dense two-view prediction for images (i, j). Both pointmaps live in
/// camera i's frame and share one unknown scale.
struct PointmapPrediction {
  int width = 0;
  int height = 0;
  int feature_dim = 0;
  std::vector<Vec3f> X_ii;  // frame-i points, frame-i coordinates
  std::vector<Vec3f> X_ij;  // frame-j points, frame-i coordinates
  std::vector<float> C_i, C_j;
  std::vector<float> D_i, D_j;  // pixel-major, feature_dim floats per pixel
  std::vector<float> Q_i, Q_j;

  PointmapPrediction() = default;
  PointmapPrediction(int w, int h, int d);

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  /// Throws oaf::Error if any array disagrees with (width, height, feature_dim).
  void validate() const;
};

/// Read-only view over one side of a metric pointmap plus its descriptors,
/// the unit that projective association consumes.
struct PointmapView {
  int width = 0;
  int height = 0;
  int feature_dim = 0;
  std::span<const Vec3f> points;
  std::span<const float> features;
  std::span<const float> conf;
  std::span<const float> feat_conf;

  std::span<const float> feature(std::size_t pixel) const {
    return features.subspan(pixel * feature_dim, feature_dim);
  }
};

PointmapView frame_view(const PointmapPrediction& pred);

struct Match {
  int frame_pixel = 0;     // linear index v * W + u in the frame
  int keyframe_pixel = 0;  // linear index in the keyframe
  bool operator==(const Match&) const = default;
};

/// Pixel correspondences frame -> keyframe. Frame pixels are unique.
struct MatchSet {
  int width = 0;
  int height = 0;
  std::vector<Match> pairs;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

/// Two-view dense predictor seam. Implementations are either safe for
/// concurrent calls or report otherwise.
class PointmapProvider {
 public:
  virtual ~PointmapProvider() = default;
  virtual PointmapPrediction predict(const Image& img_i, const Image& img_j) = 0;
  virtual bool concurrent_safe() const { return false; }
};

/// Longest image side accepted by the predictor contract.
inline constexpr int kMaxPredictorDim = 512;

/// Checks the pair against the predictor contract, then delegates.
PointmapPrediction predict(PointmapProvider& provider, const Image& img_i, const Image& img_j);

/// Per-pixel norm of X_ii; non-finite or zero-length points are invalid.
DepthImage optical_depth(const PointmapPrediction& pred);

struct MatchConfig {
  double delta_depth = 0.075;  // meters
  double rho_feat = 0.7;
};

double cosine_similarity(std::span<const float> a, std::span<const float> b);

/// Projective data association: each frame point is moved into the
/// keyframe camera by `keyframe_from_frame`, projected, and accepted when the
/// ray lengths agree within delta_depth and the descriptors agree within
/// rho_feat. OpenMP over rows; output ordered by frame pixel.
MatchSet match_projective(const PointmapView& frame, const PointmapView& keyframe,
                          const RigidTransform& keyframe_from_frame, const PinholeCamera& cam,
                          const MatchConfig& cfg = {});

namespace reference {
MatchSet match_projective(const PointmapView& frame, const PointmapView& keyframe,
                          const RigidTransform& keyframe_from_frame, const PinholeCamera& cam,
                          const MatchConfig& cfg = {});
}  // namespace reference

}  // namespace oaf
