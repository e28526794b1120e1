#pragma once

#include "oaf/geometry.hpp"
#include "oaf/image.hpp"
#include "oaf/pointmap.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace oaf {

struct DepthPair {
  double d_o = 0.0;  // optical ray length, prediction units
  double d_a = 0.0;  // acoustic ray length, meters
};

struct DepthPairSet {
  std::vector<DepthPair> pairs;
  std::vector<std::size_t> pixels;  // source pixel of each pair

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

/// Pixels where both depths are positive and finite and the confidence is
/// strictly above the image-wide mean of `conf`.
DepthPairSet filter_depth_pairs(const DepthImage& d_opt, const DepthImage& d_ac,
                                std::span<const float> conf);

struct RansacConfig {
  int iterations = 200;
  double epsilon_in = 0.075;  // meters
  double min_inlier_fraction = 0.15;
  std::uint64_t seed = 7;
};

struct ScaleEstimate {
  double scale = 1.0;
  std::size_t inlier_count = 0;
  double inlier_fraction() const { return total ? static_cast<double>(inlier_count) / total : 0.0; }
  std::size_t total = 0;
};

/// One-point RANSAC for d_a = s * d_o, then least squares over the best
/// consensus set. Throws ScaleUnavailable on empty input and ScaleUnreliable
/// when the consensus fraction is below cfg.min_inlier_fraction.
ScaleEstimate ransac_scale(const DepthPairSet& pairs, const RansacConfig& cfg, std::mt19937_64& rng);

namespace reference {
ScaleEstimate ransac_scale(const DepthPairSet& pairs, const RansacConfig& cfg,
                           std::mt19937_64& rng);
}  // namespace reference

/// Multiplies X_ii and X_ij by s. Throws on s <= 0 or non-finite s.
PointmapPrediction apply_scale(PointmapPrediction pred, double s);
void apply_scale_in_place(PointmapPrediction& pred, double s);

/// argmin_s sum |a_m - s * T b_m|^2 with b_m the frame points moved by T_kf.
double refine_scale(std::span<const Vec3> pts_k, std::span<const Vec3> pts_f,
                    const RigidTransform& keyframe_from_frame);

}  // namespace oaf
