#pragma once

#include "oaf/geometry.hpp"
#include "oaf/image.hpp"
#include "oaf/keyframe_graph.hpp"
#include "oaf/occupancy_grid.hpp"
#include "oaf/pointmap.hpp"
#include "oaf/scale.hpp"
#include "oaf/scene.hpp"

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace oaf {

enum class Mode { Initializing, Tracking, Recovery };
const char* mode_name(Mode m);

struct PipelineConfig {
  GraphConfig graph;
  OptimizeConfig optimize;
  RansacConfig ransac;
  double tau_k = 0.3;
  double tau_r = 0.05;
  double tau_i = 2.0;
  /// A frame may become a keyframe only if at least this fraction of its
  /// pixels has confidence above tau_c.
  double min_keyframe_coverage = 0.5;
  /// Re-optimize every component on insertion instead of the affected one.
  bool optimize_all = false;

  void validate() const;
};

struct FrameDiagnostics {
  std::int64_t frame_id = -1;
  Mode mode = Mode::Initializing;
  double s_m = 0.0;
  double s_p = 1.0;
  double alpha_match = 0.0;
  double alpha_unique = 0.0;
  bool keyframe = false;
  bool scale_fallback = false;
  bool skipped = false;
  std::string note;
};

/// One line: frame id, mode, s_m, s_p, alpha_match, alpha_unique, keyframe flag.
std::string format_diagnostic(const FrameDiagnostics& d);

struct FusedCloud {
  std::vector<Vec3f> points;  // world frame, meters
  std::vector<Rgb> colors;
  std::vector<std::int64_t> source;  // keyframe id per point

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Luma histogram equalization with chroma kept.
Image color_correct(const Image& img);

class Pipeline {
 public:
  Pipeline(PointmapProvider& provider, const OccupancyGrid& grid, PinholeCamera cam,
           PipelineConfig cfg = {});

  /// Runs initialize or process_frame depending on the mode.
  const FrameDiagnostics& step(const Image& frame, const RigidTransform& world_from_camera);

  const FrameDiagnostics& initialize(const Image& frame, const RigidTransform& world_from_camera);
  const FrameDiagnostics& process_frame(const Image& frame,
                                        const RigidTransform& world_from_camera);

  Mode mode() const { return mode_; }
  const KeyframeGraph& graph() const { return graph_; }
  KeyframeGraph& graph() { return graph_; }
  double current_scale() const { return s_m_; }
  std::size_t frame_count() const { return frames_; }
  std::size_t skipped_count() const { return skipped_; }
  std::size_t fallback_count() const { return fallbacks_; }
  std::size_t recovery_entries() const { return recovery_entries_; }
  const std::vector<FrameDiagnostics>& diagnostics() const { return diags_; }
  const PipelineConfig& config() const { return cfg_; }
  /// Wall time of the last frame minus the time spent inside the provider.
  double last_frame_seconds() const { return last_seconds_; }

  FusedCloud export_cloud() const;

 private:
  const FrameDiagnostics& finish(FrameDiagnostics d, double provider_seconds,
                                 std::chrono::steady_clock::time_point start);
  void insert_keyframe(Keyframe kf);
  bool keyframe_eligible(std::span<const float> conf) const;

  PointmapProvider& provider_;
  const OccupancyGrid& grid_;
  PinholeCamera cam_;
  PipelineConfig cfg_;
  KeyframeGraph graph_;
  Mode mode_ = Mode::Initializing;
  std::shared_ptr<const Keyframe> last_kf_;
  std::optional<RecoveryBuffer> recovery_;
  double s_m_ = 0.0;
  std::mt19937_64 rng_;
  std::size_t frames_ = 0;
  std::size_t skipped_ = 0;
  std::size_t fallbacks_ = 0;
  std::size_t recovery_entries_ = 0;
  double last_seconds_ = 0.0;
  std::vector<FrameDiagnostics> diags_;
};

struct MeasureResult {
  std::string name;
  bool detected = false;
  double measured = 0.0;
  double ground_truth = 0.0;
  std::size_t points = 0;
  double percent_error() const { return 100.0 * (measured - ground_truth) / ground_truth; }
};

/// Crops the cloud to the object's bounds inflated by `inflate` (each side
/// grown by inflate/2 of the extent), drops points within `floor_gate` of
/// the object height above the floor, and reports the largest extent along
/// the gravity-aligned principal axes.
MeasureResult measure_object(const FusedCloud& cloud, const Primitive& object,
                             std::optional<double> floor_height, double inflate = 0.2,
                             double floor_gate = 0.2);

/// Extents along the two horizontal principal axes (larger first) and
/// along world z. Zero for fewer than 2 points.
Vec3 principal_extents(std::span<const Vec3> pts);

}  // namespace oaf
