#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace oaf {

using Vec3 = Eigen::Vector3d;
using Vec3f = Eigen::Vector3f;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Proper rigid motion p -> R p + t. Immutable after construction.
class RigidTransform {
 public:
  RigidTransform() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

  /// Rotations drifting more than 1e-7 from orthonormal are projected back
  /// onto SO(3); anything further from a rotation than that is rejected.
  RigidTransform(const Mat3& rotation, const Vec3& translation);

  static RigidTransform identity() { return {}; }
  static RigidTransform from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }
  static RigidTransform from_axis_angle(const Vec3& axis, double angle, const Vec3& t = Vec3::Zero());
  /// Rotation vector (axis * angle).
  static RigidTransform from_rotation_vector(const Vec3& rv, const Vec3& t = Vec3::Zero());
  static RigidTransform from_quaternion(const Eigen::Quaterniond& q, const Vec3& t = Vec3::Zero());

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  Eigen::Quaterniond quaternion() const;
  Eigen::Matrix4d matrix() const;

  Vec3 operator*(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec3f apply(const Vec3f& p) const {
    return (rotation_ * p.cast<double>() + translation_).cast<float>();
  }
  RigidTransform operator*(const RigidTransform& other) const;

  RigidTransform inverse() const;
  bool is_finite() const;

  /// Left perturbation: R' = exp(w) R, t' = exp(w) t + v, with delta = (w, v).
  RigidTransform perturbed(const Vec6& delta) const;

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& t);
std::vector<Vec3> transform_points(const RigidTransform& t, std::span<const Vec3> pts);

/// so(3) helpers.
Mat3 exp_so3(const Vec3& w);
Vec3 log_so3(const Mat3& r);
Mat3 skew(const Vec3& v);

/// Rotation angle (radians) and translation distance between two transforms.
double rotation_distance(const RigidTransform& a, const RigidTransform& b);
double translation_distance(const RigidTransform& a, const RigidTransform& b);

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

/// Pinhole intrinsics. Pixel centers sit at integer coordinates, so a pixel
/// coordinate is in bounds when it rounds to an index inside the image.
class PinholeCamera {
 public:
  PinholeCamera(double fx, double fy, double cx, double cy, int width, int height);

  double fx() const { return fx_; }
  double fy() const { return fy_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }
  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  bool contains(double u, double v) const {
    return u >= -0.5 && u < width_ - 0.5 && v >= -0.5 && v < height_ - 0.5;
  }

  /// Unit-norm viewing ray through (u, v), camera frame.
  Vec3 ray(double u, double v) const;

  /// Point along the pixel ray whose Euclidean norm equals `depth`.
  /// Throws oaf::Error for out-of-bounds pixels or non-positive depth.
  Vec3 backproject(double u, double v, double depth) const;

  /// Perspective projection; empty when the point is not in front of the camera.
  std::optional<Pixel> project(const Vec3& p) const;

  /// Linear index of the pixel a camera-frame point lands on, if in bounds.
  std::optional<int> project_to_index(const Vec3f& p) const;

  PinholeCamera rescaled(int new_width, int new_height) const;

  bool operator==(const PinholeCamera&) const = default;

 private:
  double fx_, fy_, cx_, cy_;
  int width_, height_;
};

PinholeCamera rescale_camera(const PinholeCamera& cam, int new_width, int new_height);

/// Largest size with the same aspect ratio whose longer side is at most
/// `max_dim` (the two-view predictor input limit).
std::pair<int, int> fit_within(int width, int height, int max_dim = 512);

struct PoseRecord {
  std::int64_t frame_id = 0;
  RigidTransform pose;  // world-from-camera
};

/// `frame_id tx ty tz qx qy qz qw` per line; '#' starts a comment.
std::vector<PoseRecord> read_pose_file(const std::filesystem::path& path);
void write_pose_file(const std::filesystem::path& path, std::span<const PoseRecord> poses);

}  // namespace oaf
