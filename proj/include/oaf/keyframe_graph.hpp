#pragma once

#include "oaf/geometry.hpp"
#include "oaf/image.hpp"
#include "oaf/pointmap.hpp"

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

namespace oaf {

/// A retained frame: metric pointmap in its own camera frame plus the
/// confidences and descriptors used for association.
struct Keyframe {
  std::int64_t id = -1;
  Image image;
  RigidTransform pose;           // current (optimized, world-aligned) T_Wk
  RigidTransform measured_pose;  // kinematic T_Wk
  int width = 0;
  int height = 0;
  int feature_dim = 0;
  std::vector<Vec3f> points;
  std::vector<float> conf;
  std::vector<float> features;
  std::vector<float> feat_conf;
  double mean_conf = 0.0;
  /// Product of every scale applied to the stored pointmap.
  double scale = 1.0;

  PointmapView view() const {
    return {width, height, feature_dim, points, features, conf, feat_conf};
  }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

/// Builds a keyframe from side i of an already metric prediction.
Keyframe make_keyframe(std::int64_t id, const Image& image, const RigidTransform& pose,
                       PointmapPrediction metric_pred, double scale);

double mean_of(std::span<const float> v);

/// Keeps matches with C_k > tau_c, C_f > tau_c and sqrt(Q_f * Q_k) > tau_q.
MatchSet filter_matches(const MatchSet& m, std::span<const float> conf_f,
                        std::span<const float> conf_k, std::span<const float> fconf_f,
                        std::span<const float> fconf_k, double tau_c, double tau_q);

struct KeyframeMetrics {
  double alpha_match = 0.0;
  double alpha_unique = 0.0;
};

KeyframeMetrics keyframe_metrics(const MatchSet& filtered, const MatchSet& raw, int height,
                                 int width);

bool should_add_keyframe(double alpha_match, double alpha_unique, double tau_k);

struct GraphConfig {
  MatchConfig match;
  double tau_c = 1.5;
  double tau_q = 0.5;
  double tau_f = 0.05;
  /// Matches kept per edge for optimization (evenly strided subsample).
  std::size_t max_edge_matches = 2000;
};

struct Edge {
  std::int64_t a = 0;  // keyframe side of the stored matches
  std::int64_t b = 0;  // frame side
  double match_fraction = 0.0;
  std::vector<Match> matches;  // frame_pixel in b, keyframe_pixel in a
};

struct OptimizeConfig {
  int max_iters = 15;
  double w_prior = 10.0;
  double w_scale_prior = 0.01;
  double min_relative_decrease = 1e-10;
  int max_halvings = 12;
};

struct OptimizeReport {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  double initial_match_cost = 0.0;
  double final_match_cost = 0.0;
  bool converged = true;
};

class KeyframeGraph {
 public:
  explicit KeyframeGraph(PinholeCamera cam, GraphConfig cfg = {});

  const PinholeCamera& camera() const { return cam_; }
  const GraphConfig& config() const { return cfg_; }

  /// Inserts the keyframe and an edge to every existing keyframe whose
  /// filtered match fraction exceeds tau_f. Returns the new keyframe's index.
  std::size_t add_keyframe_and_edges(Keyframe kf);

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  const std::vector<Keyframe>& keyframes() const { return nodes_; }
  Keyframe& keyframe_at(std::size_t idx) { return nodes_[idx]; }
  const Keyframe& keyframe_at(std::size_t idx) const { return nodes_[idx]; }
  std::optional<std::size_t> index_of(std::int64_t id) const;
  const Keyframe& last() const { return nodes_.back(); }

  const std::vector<Edge>& edges() const { return edges_; }
  /// Adds an edge directly (used by tests and by graph loading).
  void add_edge(Edge e);

  /// Connected components as sorted lists of keyframe ids, ordered by their
  /// smallest id.
  std::vector<std::vector<std::int64_t>> components() const;
  std::size_t component_of(std::int64_t id) const;

  /// Gauss-Newton over pose and log-scale corrections of one component.
  OptimizeReport optimize_component(std::size_t component, const OptimizeConfig& cfg = {});

  /// Re-estimates X for the component and left-applies it to every pose.
  RigidTransform align_component(std::size_t component);

  void dump(std::ostream& os) const;

 private:
  PinholeCamera cam_;
  GraphConfig cfg_;
  std::vector<Keyframe> nodes_;
  std::vector<Edge> edges_;
};

/// Rigid X with measured_k ~= X * optimized_k.
RigidTransform align_to_world(std::span<const RigidTransform> measured,
                              std::span<const RigidTransform> optimized);

struct RecoveryEntry {
  std::shared_ptr<const Keyframe> frame;
  double mean_conf = 0.0;
};

class RecoveryBuffer {
 public:
  static constexpr std::size_t kCapacity = 10;

  explicit RecoveryBuffer(std::shared_ptr<const Keyframe> last_keyframe);

  /// Entry with the highest mean confidence; ties go to the most recent.
  const RecoveryEntry& best() const;
  void push(std::shared_ptr<const Keyframe> frame);

  std::size_t size() const { return entries_.size(); }
  const std::deque<RecoveryEntry>& entries() const { return entries_; }

 private:
  std::deque<RecoveryEntry> entries_;  // oldest first
};

/// Selects the reference for matching, then records the incoming frame.
std::shared_ptr<const Keyframe> recovery_step(RecoveryBuffer& buf,
                                              std::shared_ptr<const Keyframe> incoming);

}  // namespace oaf
