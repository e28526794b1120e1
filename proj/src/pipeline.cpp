#include "oaf/pipeline.hpp"

#include "oaf/errors.hpp"

#include <Eigen/Eigenvalues>

#include <limits>

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace oaf {

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::Initializing: return "Initializing";
    case Mode::Tracking: return "Tracking";
    case Mode::Recovery: return "Recovery";
  }
  return "?";
}

void PipelineConfig::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(tau_k) || !unit(tau_r) || !unit(graph.tau_f) || !unit(min_keyframe_coverage)) {
    throw Error("config: fractions tau_k, tau_r, tau_f and min_keyframe_coverage must lie in [0, 1]");
  }
  if (!(tau_r < tau_k)) throw Error("config: tau_r must be smaller than tau_k");
  if (graph.tau_c < 0 || graph.tau_q < 0 || tau_i < 0) {
    throw Error("config: confidence thresholds must be non-negative");
  }
  if (ransac.iterations < 1 || !(ransac.epsilon_in > 0) || !unit(ransac.min_inlier_fraction)) {
    throw Error("config: invalid RANSAC settings");
  }
  if (!(graph.match.delta_depth > 0)) throw Error("config: delta_depth must be positive");
  if (optimize.max_iters < 0 || optimize.w_prior < 0 || optimize.w_scale_prior < 0) {
    throw Error("config: invalid optimizer settings");
  }
}

std::string format_diagnostic(const FrameDiagnostics& d) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "frame=%lld mode=%s s_m=%.6g s_p=%.6g alpha_match=%.6f alpha_unique=%.6f "
                "keyframe=%d",
                static_cast<long long>(d.frame_id), mode_name(d.mode), d.s_m, d.s_p,
                d.alpha_match, d.alpha_unique, d.keyframe ? 1 : 0);
  std::string out = buf;
  if (d.scale_fallback) out += " scale_fallback=1";
  if (d.skipped) out += " skipped=1";
  if (!d.note.empty()) out += " note=\"" + d.note + "\"";
  return out;
}

Image color_correct(const Image& img) {
  Image out = img;
  const std::size_t n = img.pixel_count();
  if (n == 0) return out;
  std::vector<double> y(n), cb(n), cr(n);
  std::array<std::size_t, 256> hist{};
  for (std::size_t i = 0; i < n; ++i) {
    const double r = img.rgb[3 * i];
    const double g = img.rgb[3 * i + 1];
    const double b = img.rgb[3 * i + 2];
    y[i] = 0.299 * r + 0.587 * g + 0.114 * b;
    cb[i] = b - y[i];
    cr[i] = r - y[i];
    ++hist[static_cast<std::size_t>(std::clamp(std::lround(y[i]), 0L, 255L))];
  }
  std::size_t occupied_bins = 0;
  for (std::size_t c : hist) occupied_bins += c ? 1 : 0;
  if (occupied_bins <= 1) return out;

  std::array<double, 256> lut{};
  std::size_t cdf = 0;
  for (int v = 0; v < 256; ++v) {
    cdf += hist[static_cast<std::size_t>(v)];
    lut[static_cast<std::size_t>(v)] = std::floor(255.0 * static_cast<double>(cdf) / n);
  }
  auto to_u8 = [](double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  };
  for (std::size_t i = 0; i < n; ++i) {
    const double yn = lut[static_cast<std::size_t>(std::clamp(std::lround(y[i]), 0L, 255L))];
    const double r = yn + cr[i];
    const double b = yn + cb[i];
    const double g = (yn - 0.299 * r - 0.114 * b) / 0.587;
    out.rgb[3 * i] = to_u8(r);
    out.rgb[3 * i + 1] = to_u8(g);
    out.rgb[3 * i + 2] = to_u8(b);
  }
  return out;
}

Pipeline::Pipeline(PointmapProvider& provider, const OccupancyGrid& grid, PinholeCamera cam,
                   PipelineConfig cfg)
    : provider_(provider),
      grid_(grid),
      cam_(cam),
      cfg_(cfg),
      graph_(cam, cfg.graph),
      rng_(cfg.ransac.seed) {
  cfg_.validate();
}

const FrameDiagnostics& Pipeline::step(const Image& frame, const RigidTransform& pose) {
  return mode_ == Mode::Initializing ? initialize(frame, pose) : process_frame(frame, pose);
}

const FrameDiagnostics& Pipeline::finish(FrameDiagnostics d, double provider_seconds,
                                         std::chrono::steady_clock::time_point start) {
  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  last_seconds_ = std::max(0.0, total - provider_seconds);
  ++frames_;
  if (d.skipped) ++skipped_;
  if (d.scale_fallback) ++fallbacks_;
  d.mode = mode_;
  diags_.push_back(std::move(d));
  return diags_.back();
}

bool Pipeline::keyframe_eligible(std::span<const float> conf) const {
  if (conf.empty()) return false;
  std::size_t good = 0;
  for (float c : conf) good += c > cfg_.graph.tau_c ? 1 : 0;
  return static_cast<double>(good) >= cfg_.min_keyframe_coverage * static_cast<double>(conf.size());
}

void Pipeline::insert_keyframe(Keyframe kf) {
  const std::int64_t id = kf.id;
  const std::size_t idx = graph_.add_keyframe_and_edges(std::move(kf));
  if (cfg_.optimize_all) {
    const std::size_t nc = graph_.components().size();
    for (std::size_t c = 0; c < nc; ++c) {
      graph_.optimize_component(c, cfg_.optimize);
      graph_.align_component(c);
    }
  } else {
    const std::size_t c = graph_.component_of(id);
    graph_.optimize_component(c, cfg_.optimize);
    graph_.align_component(c);
  }
  last_kf_ = std::make_shared<const Keyframe>(graph_.keyframe_at(idx));
}

const FrameDiagnostics& Pipeline::initialize(const Image& frame, const RigidTransform& pose) {
  const auto start = std::chrono::steady_clock::now();
  if (mode_ != Mode::Initializing) throw Error("initialize: pipeline already initialized");
  FrameDiagnostics d;
  d.frame_id = frame.frame_id;

  PointmapPrediction pred;
  double provider_s = 0.0;
  try {
    const auto t0 = std::chrono::steady_clock::now();
    pred = predict(provider_, frame, frame);
    provider_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  } catch (const Error& e) {
    d.skipped = true;
    d.note = std::string("provider: ") + e.what();
    return finish(std::move(d), 0.0, start);
  }
  const float max_c = pred.C_i.empty() ? 0.0f : *std::max_element(pred.C_i.begin(), pred.C_i.end());
  if (!(max_c > cfg_.tau_i)) {
    d.note = "confidence below tau_i";
    return finish(std::move(d), provider_s, start);
  }
  const DepthImage d_a = render_depth(grid_, cam_, pose);
  const DepthPairSet pairs = filter_depth_pairs(optical_depth(pred), d_a, pred.C_i);
  try {
    const ScaleEstimate est = ransac_scale(pairs, cfg_.ransac, rng_);
    s_m_ = est.scale;
  } catch (const ScaleUnavailable& e) {
    d.note = e.what();
    return finish(std::move(d), provider_s, start);
  } catch (const ScaleUnreliable& e) {
    d.note = e.what();
    return finish(std::move(d), provider_s, start);
  }
  apply_scale_in_place(pred, s_m_);
  d.s_m = s_m_;
  d.keyframe = true;
  insert_keyframe(make_keyframe(frame.frame_id, frame, pose, std::move(pred), s_m_));
  mode_ = Mode::Tracking;
  return finish(std::move(d), provider_s, start);
}

const FrameDiagnostics& Pipeline::process_frame(const Image& frame, const RigidTransform& pose) {
  const auto start = std::chrono::steady_clock::now();
  if (mode_ == Mode::Initializing) throw Error("process_frame: pipeline not initialized");
  FrameDiagnostics d;
  d.frame_id = frame.frame_id;

  const std::shared_ptr<const Keyframe> ref =
      mode_ == Mode::Recovery ? recovery_->best().frame : last_kf_;

  PointmapPrediction pred;
  double provider_s = 0.0;
  try {
    const auto t0 = std::chrono::steady_clock::now();
    pred = predict(provider_, frame, ref->image);
    provider_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  } catch (const Error& e) {
    d.skipped = true;
    d.note = std::string("provider: ") + e.what();
    return finish(std::move(d), 0.0, start);
  }

  const DepthImage d_a = render_depth(grid_, cam_, pose);
  const DepthPairSet pairs = filter_depth_pairs(optical_depth(pred), d_a, pred.C_i);
  try {
    s_m_ = ransac_scale(pairs, cfg_.ransac, rng_).scale;
  } catch (const ScaleUnavailable&) {
    d.scale_fallback = true;
  } catch (const ScaleUnreliable&) {
    d.scale_fallback = true;
  }
  apply_scale_in_place(pred, s_m_);
  d.s_m = s_m_;

  const RigidTransform t_kf = ref->measured_pose.inverse() * pose;
  const PointmapView fv = frame_view(pred);
  const MatchSet raw = match_projective(fv, ref->view(), t_kf, cam_, cfg_.graph.match);
  const MatchSet filt = filter_matches(raw, pred.C_i, ref->conf, pred.Q_i, ref->feat_conf,
                                       cfg_.graph.tau_c, cfg_.graph.tau_q);
  if (!filt.empty()) {
    std::vector<Vec3> pk;
    std::vector<Vec3> pf;
    pk.reserve(filt.size());
    pf.reserve(filt.size());
    for (const Match& m : filt.pairs) {
      pk.push_back(ref->points[static_cast<std::size_t>(m.keyframe_pixel)].cast<double>());
      pf.push_back(pred.X_ii[static_cast<std::size_t>(m.frame_pixel)].cast<double>());
    }
    try {
      const double s_p = refine_scale(pk, pf, t_kf);
      if (s_p > 0.0 && std::isfinite(s_p)) {
        apply_scale_in_place(pred, s_p);
        d.s_p = s_p;
      }
    } catch (const DegenerateRefinement&) {
    }
  }
  const KeyframeMetrics km = keyframe_metrics(filt, raw, cam_.height(), cam_.width());
  d.alpha_match = km.alpha_match;
  d.alpha_unique = km.alpha_unique;
  const double frame_scale = s_m_ * d.s_p;

  if (mode_ == Mode::Tracking) {
    if (km.alpha_match < cfg_.tau_r) {
      mode_ = Mode::Recovery;
      ++recovery_entries_;
      recovery_.emplace(last_kf_);
      recovery_->push(std::make_shared<const Keyframe>(
          make_keyframe(frame.frame_id, frame, pose, std::move(pred), frame_scale)));
    } else if (should_add_keyframe(km.alpha_match, km.alpha_unique, cfg_.tau_k) &&
               keyframe_eligible(pred.C_i)) {
      d.keyframe = true;
      insert_keyframe(make_keyframe(frame.frame_id, frame, pose, std::move(pred), frame_scale));
    }
  } else {
    if (km.alpha_match >= cfg_.tau_k && keyframe_eligible(pred.C_i)) {
      d.keyframe = true;
      insert_keyframe(make_keyframe(frame.frame_id, frame, pose, std::move(pred), frame_scale));
      recovery_.reset();
      mode_ = Mode::Tracking;
    } else {
      recovery_->push(std::make_shared<const Keyframe>(
          make_keyframe(frame.frame_id, frame, pose, std::move(pred), frame_scale)));
    }
  }
  return finish(std::move(d), provider_s, start);
}

FusedCloud Pipeline::export_cloud() const {
  FusedCloud cloud;
  for (const Keyframe& kf : graph_.keyframes()) {
    const Image colors = color_correct(kf.image);
    const bool has_color = colors.width == kf.width && colors.height == kf.height;
    for (std::size_t i = 0; i < kf.pixel_count(); ++i) {
      if (!(kf.conf[i] > cfg_.graph.tau_c) || !kf.points[i].allFinite()) continue;
      cloud.points.push_back(kf.pose.apply(kf.points[i]));
      if (has_color) {
        cloud.colors.push_back({colors.rgb[3 * i], colors.rgb[3 * i + 1], colors.rgb[3 * i + 2]});
      } else {
        cloud.colors.push_back({255, 255, 255});
      }
      cloud.source.push_back(kf.id);
    }
  }
  return cloud;
}

Vec3 principal_extents(std::span<const Vec3> pts) {
  if (pts.size() < 2) return Vec3::Zero();
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const Vec3& p : pts) mean += p.head<2>();
  mean /= static_cast<double>(pts.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const Vec3& p : pts) {
    const Eigen::Vector2d d = p.head<2>() - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  Vec3 out;
  for (int axis = 0; axis < 2; ++axis) {
    const Eigen::Vector2d dir = eig.eigenvectors().col(1 - axis);  // major axis first
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const Vec3& p : pts) {
      const double s = dir.dot(p.head<2>() - mean);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    out[axis] = hi - lo;
  }
  double zlo = std::numeric_limits<double>::infinity();
  double zhi = -zlo;
  for (const Vec3& p : pts) {
    zlo = std::min(zlo, p.z());
    zhi = std::max(zhi, p.z());
  }
  out[2] = zhi - zlo;
  if (out[1] > out[0]) std::swap(out[0], out[1]);
  return out;
}

namespace {

// Median height of floor points in a band around the footprint, relative to
// the nominal floor. Zero when too few are found.
double observed_floor_offset(const FusedCloud& cloud, const Vec3& clo, const Vec3& chi,
                             double floor_height) {
  constexpr double kBand = 0.1;
  constexpr double kWindow = 0.05;
  constexpr std::size_t kMinPoints = 50;
  std::vector<double> zs;
  for (const Vec3f& pf : cloud.points) {
    const Vec3 p = pf.cast<double>();
    if (std::abs(p.z() - floor_height) > kWindow) continue;
    const bool in_outer = p.x() > clo.x() - kBand && p.x() < chi.x() + kBand &&
                          p.y() > clo.y() - kBand && p.y() < chi.y() + kBand;
    const bool in_inner = p.x() >= clo.x() && p.x() <= chi.x() && p.y() >= clo.y() &&
                          p.y() <= chi.y();
    if (in_outer && !in_inner) zs.push_back(p.z());
  }
  if (zs.size() < kMinPoints) return 0.0;
  auto mid = zs.begin() + static_cast<std::ptrdiff_t>(zs.size() / 2);
  std::nth_element(zs.begin(), mid, zs.end());
  return *mid - floor_height;
}

}  // namespace

MeasureResult measure_object(const FusedCloud& cloud, const Primitive& object,
                             std::optional<double> floor_height, double inflate,
                             double floor_gate) {
  MeasureResult r;
  r.name = object.name;
  r.ground_truth = object.size();
  const auto [lo, hi] = object.bounds();
  const Vec3 pad = 0.5 * inflate * (hi - lo);
  Vec3 clo = lo - pad;
  Vec3 chi = hi + pad;
  double z_gate = -std::numeric_limits<double>::infinity();
  if (floor_height) {
    // The reconstructed floor can sit slightly off its nominal height; anchor
    // the crop to the floor observed around the object.
    const double dz = observed_floor_offset(cloud, clo, chi, *floor_height);
    clo.z() += dz;
    chi.z() += dz;
    z_gate = *floor_height + dz + floor_gate * (hi.z() - lo.z());
  }
  std::vector<Vec3> crop;
  for (const Vec3f& pf : cloud.points) {
    const Vec3 p = pf.cast<double>();
    if ((p.array() < clo.array()).any() || (p.array() > chi.array()).any()) continue;
    if (p.z() <= z_gate) continue;
    crop.push_back(p);
  }
  r.points = crop.size();
  if (crop.size() < 2) return r;
  r.detected = true;
  r.measured = principal_extents(crop).maxCoeff();
  return r;
}

}  // namespace oaf
