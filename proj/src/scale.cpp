#include "oaf/scale.hpp"

#include "oaf/errors.hpp"

#include <cmath>
#include <sstream>

namespace oaf {

DepthPairSet filter_depth_pairs(const DepthImage& d_opt, const DepthImage& d_ac,
                                std::span<const float> conf) {
  if (d_opt.width() != d_ac.width() || d_opt.height() != d_ac.height() ||
      conf.size() != d_opt.size()) {
    throw Error("filter_depth_pairs: dimensions differ");
  }
  DepthPairSet out;
  if (conf.empty()) return out;
  double sum = 0.0;
  for (float c : conf) sum += c;
  const double mean = sum / static_cast<double>(conf.size());
  for (std::size_t i = 0; i < conf.size(); ++i) {
    if (!d_opt.valid(i) || !d_ac.valid(i)) continue;
    if (!(static_cast<double>(conf[i]) > mean)) continue;
    out.pairs.push_back({d_opt[i], d_ac[i]});
    out.pixels.push_back(i);
  }
  return out;
}

namespace {

std::vector<double> draw_hypotheses(const DepthPairSet& pairs, const RansacConfig& cfg,
                                    std::mt19937_64& rng) {
  if (pairs.empty()) throw ScaleUnavailable("ransac_scale: no depth pairs");
  if (cfg.iterations < 1) throw Error("ransac_scale: iterations must be >= 1");
  std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
  std::vector<double> hyp(static_cast<std::size_t>(cfg.iterations));
  for (double& s : hyp) {
    const DepthPair& p = pairs.pairs[pick(rng)];
    s = p.d_a / p.d_o;
  }
  return hyp;
}

inline bool is_inlier(double s, const DepthPair& p, double eps) {
  return std::abs(s * p.d_o - p.d_a) < eps;
}

ScaleEstimate finish(const DepthPairSet& pairs, const RansacConfig& cfg, double best_s) {
  double num = 0.0;
  double den = 0.0;
  std::size_t count = 0;
  for (const DepthPair& p : pairs.pairs) {
    if (!is_inlier(best_s, p, cfg.epsilon_in)) continue;
    num += p.d_o * p.d_a;
    den += p.d_o * p.d_o;
    ++count;
  }
  ScaleEstimate est;
  est.scale = den > 0.0 ? num / den : best_s;
  est.inlier_count = count;
  est.total = pairs.size();
  if (est.inlier_fraction() < cfg.min_inlier_fraction) {
    std::ostringstream msg;
    msg << "ransac_scale: inlier fraction " << est.inlier_fraction() << " below "
        << cfg.min_inlier_fraction;
    throw ScaleUnreliable(msg.str(), est.scale, est.inlier_fraction());
  }
  return est;
}

}  // namespace

ScaleEstimate ransac_scale(const DepthPairSet& pairs, const RansacConfig& cfg,
                           std::mt19937_64& rng) {
  const std::vector<double> hyp = draw_hypotheses(pairs, cfg, rng);
  const auto n = static_cast<std::ptrdiff_t>(pairs.size());
  std::vector<std::size_t> counts(hyp.size(), 0);
  // Hypotheses are independent; each thread scores its own.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t h = 0; h < static_cast<std::ptrdiff_t>(hyp.size()); ++h) {
    const double s = hyp[static_cast<std::size_t>(h)];
    std::size_t c = 0;
    for (std::ptrdiff_t k = 0; k < n; ++k) {
      c += is_inlier(s, pairs.pairs[static_cast<std::size_t>(k)], cfg.epsilon_in) ? 1 : 0;
    }
    counts[static_cast<std::size_t>(h)] = c;
  }
  std::size_t best = 0;
  for (std::size_t h = 1; h < hyp.size(); ++h) {
    if (counts[h] > counts[best]) best = h;
  }
  return finish(pairs, cfg, hyp[best]);
}

namespace reference {

ScaleEstimate ransac_scale(const DepthPairSet& pairs, const RansacConfig& cfg,
                           std::mt19937_64& rng) {
  const std::vector<double> hyp = draw_hypotheses(pairs, cfg, rng);
  double best_s = hyp.front();
  std::size_t best_count = 0;
  bool first = true;
  for (double s : hyp) {
    std::size_t c = 0;
    for (const DepthPair& p : pairs.pairs) c += is_inlier(s, p, cfg.epsilon_in) ? 1 : 0;
    if (first || c > best_count) {
      best_s = s;
      best_count = c;
      first = false;
    }
  }
  return finish(pairs, cfg, best_s);
}

}  // namespace reference

void apply_scale_in_place(PointmapPrediction& pred, double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw Error("apply_scale: scale must be positive");
  const auto f = static_cast<float>(s);
  for (Vec3f& p : pred.X_ii) p *= f;
  for (Vec3f& p : pred.X_ij) p *= f;
}

PointmapPrediction apply_scale(PointmapPrediction pred, double s) {
  apply_scale_in_place(pred, s);
  return pred;
}

double refine_scale(std::span<const Vec3> pts_k, std::span<const Vec3> pts_f,
                    const RigidTransform& keyframe_from_frame) {
  if (pts_k.size() != pts_f.size()) throw Error("refine_scale: point lists differ in length");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t m = 0; m < pts_k.size(); ++m) {
    const Vec3 b = keyframe_from_frame * pts_f[m];
    num += pts_k[m].dot(b);
    den += b.squaredNorm();
  }
  if (!(den > 0.0)) throw DegenerateRefinement("refine_scale: transformed points are all zero");
  return num / den;
}

}  // namespace oaf
