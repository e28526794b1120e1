#pragma once

#include "oaf/pointmap.hpp"
#include "oaf/scene.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>

namespace oaf {

struct OracleConfig {
  /// Per-axis Gaussian point noise, meters (applied before scaling).
  double noise_sigma = 0.0;
  double scale_min = 0.25;
  double scale_max = 4.0;
  std::optional<double> forced_scale;
  int feature_dim = 16;
  /// Lattice pitch of the descriptor field; nearby surface points get
  /// similar descriptors, points a few cells apart get unrelated ones.
  double feature_cell = 0.02;
  double feature_noise = 0.02;
  double conf_grazing = 2.5;  // confidence at grazing incidence, clear water
  double conf_frontal = 4.0;  // confidence facing the camera, clear water
  double feat_conf = 0.95;
  double beta = 0.25;  // turbidity attenuation per meter per NTU
  std::uint64_t seed = 1;
};

/// Synthetic stand-in for the neural two-view predictor: reads geometry from
/// a known scene and the ground-truth pose of each frame id, then returns it
/// at a random per-call scale with noise and turbidity-attenuated
/// confidences. Stateless apart from the per-call seeded stream, so it is
/// safe to call concurrently.
class OracleProvider : public PointmapProvider {
 public:
  using NtuFn = std::function<double(std::int64_t frame_id)>;

  OracleProvider(Scene scene, PinholeCamera camera, std::map<std::int64_t, RigidTransform> poses,
                 OracleConfig cfg = {}, NtuFn ntu = {});

  PointmapPrediction predict(const Image& img_i, const Image& img_j) override;
  bool concurrent_safe() const override { return true; }

  const OracleConfig& config() const { return cfg_; }
  /// Scale the oracle applies for this ordered pair (what RANSAC must undo).
  double injected_scale(std::int64_t id_i, std::int64_t id_j) const;
  double ntu(std::int64_t frame_id) const { return ntu_ ? ntu_(frame_id) : 0.0; }

  /// Smooth pseudo-random descriptor of a world point.
  void feature_at(const Vec3& world, std::span<float> out) const;

 private:
  const RigidTransform& pose_of(std::int64_t id) const;

  Scene scene_;
  PinholeCamera camera_;
  std::map<std::int64_t, RigidTransform> poses_;
  OracleConfig cfg_;
  NtuFn ntu_;
};

}  // namespace oaf
