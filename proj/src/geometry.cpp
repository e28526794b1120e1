#include "oaf/geometry.hpp"

#include "oaf/errors.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace oaf {

namespace {

constexpr double kOrthoDrift = 1e-7;
constexpr double kOrthoReject = 1e-2;

Mat3 project_to_so3(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

}  // namespace

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  const double drift = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  const double det = rotation.determinant();
  if (!std::isfinite(drift) || drift > kOrthoReject || det <= 0.0) {
    throw Error("RigidTransform: matrix is not a proper rotation");
  }
  if (drift > kOrthoDrift || std::abs(det - 1.0) > kOrthoDrift) {
    rotation_ = project_to_so3(rotation);
  }
}

RigidTransform RigidTransform::from_axis_angle(const Vec3& axis, double angle, const Vec3& t) {
  return {Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix(), t};
}

RigidTransform RigidTransform::from_rotation_vector(const Vec3& rv, const Vec3& t) {
  return {exp_so3(rv), t};
}

RigidTransform RigidTransform::from_quaternion(const Eigen::Quaterniond& q, const Vec3& t) {
  if (q.norm() < 1e-12) throw Error("RigidTransform: zero quaternion");
  return {q.normalized().toRotationMatrix(), t};
}

Eigen::Quaterniond RigidTransform::quaternion() const {
  Eigen::Quaterniond q(rotation_);
  q.normalize();
  if (q.w() < 0) q.coeffs() *= -1.0;
  return q;
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

RigidTransform RigidTransform::operator*(const RigidTransform& other) const {
  RigidTransform out;
  out.rotation_ = rotation_ * other.rotation_;
  out.translation_ = rotation_ * other.translation_ + translation_;
  return out;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform out;
  out.rotation_ = rotation_.transpose();
  out.translation_ = -(out.rotation_ * translation_);
  return out;
}

bool RigidTransform::is_finite() const {
  return rotation_.allFinite() && translation_.allFinite();
}

RigidTransform RigidTransform::perturbed(const Vec6& delta) const {
  const Mat3 dr = exp_so3(delta.head<3>());
  RigidTransform out;
  out.rotation_ = dr * rotation_;
  out.translation_ = dr * translation_ + delta.tail<3>();
  return out;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) { return a * b; }

RigidTransform invert(const RigidTransform& t) { return t.inverse(); }

std::vector<Vec3> transform_points(const RigidTransform& t, std::span<const Vec3> pts) {
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(t * p);
  return out;
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

Mat3 exp_so3(const Vec3& w) {
  const double theta = w.norm();
  if (theta < 1e-12) return Mat3::Identity() + skew(w);
  return Eigen::AngleAxisd(theta, w / theta).toRotationMatrix();
}

Vec3 log_so3(const Mat3& r) {
  Eigen::AngleAxisd aa(r);
  return aa.axis() * aa.angle();
}

double rotation_distance(const RigidTransform& a, const RigidTransform& b) {
  return log_so3(a.rotation().transpose() * b.rotation()).norm();
}

double translation_distance(const RigidTransform& a, const RigidTransform& b) {
  return (a.translation() - b.translation()).norm();
}

PinholeCamera::PinholeCamera(double fx, double fy, double cx, double cy, int width, int height)
    : fx_(fx), fy_(fy), cx_(cx), cy_(cy), width_(width), height_(height) {
  if (!(fx > 0) || !(fy > 0) || width <= 0 || height <= 0 || !(cx >= 0) || cx >= width ||
      !(cy >= 0) || cy >= height) {
    throw Error("PinholeCamera: invalid intrinsics");
  }
}

Vec3 PinholeCamera::ray(double u, double v) const {
  return Vec3((u - cx_) / fx_, (v - cy_) / fy_, 1.0).normalized();
}

Vec3 PinholeCamera::backproject(double u, double v, double depth) const {
  if (!contains(u, v)) throw Error("backproject: pixel out of bounds");
  if (!(depth > 0) || !std::isfinite(depth)) throw Error("backproject: depth must be positive");
  return ray(u, v) * depth;
}

std::optional<Pixel> PinholeCamera::project(const Vec3& p) const {
  if (!(p.z() > 0)) return std::nullopt;
  return Pixel{fx_ * p.x() / p.z() + cx_, fy_ * p.y() / p.z() + cy_};
}

std::optional<int> PinholeCamera::project_to_index(const Vec3f& p) const {
  if (!(p.z() > 0.0f)) return std::nullopt;
  const double u = fx_ * p.x() / p.z() + cx_;
  const double v = fy_ * p.y() / p.z() + cy_;
  if (!contains(u, v)) return std::nullopt;
  const int ui = static_cast<int>(std::lround(u));
  const int vi = static_cast<int>(std::lround(v));
  if (ui < 0 || ui >= width_ || vi < 0 || vi >= height_) return std::nullopt;
  return vi * width_ + ui;
}

PinholeCamera PinholeCamera::rescaled(int new_width, int new_height) const {
  if (new_width <= 0 || new_height <= 0) throw Error("rescale_camera: dimensions must be positive");
  const double sx = static_cast<double>(new_width) / width_;
  const double sy = static_cast<double>(new_height) / height_;
  return {fx_ * sx, fy_ * sy, cx_ * sx, cy_ * sy, new_width, new_height};
}

PinholeCamera rescale_camera(const PinholeCamera& cam, int new_width, int new_height) {
  return cam.rescaled(new_width, new_height);
}

std::pair<int, int> fit_within(int width, int height, int max_dim) {
  const int longest = std::max(width, height);
  if (longest <= max_dim) return {width, height};
  const double s = static_cast<double>(max_dim) / longest;
  return {std::max(1, static_cast<int>(std::lround(width * s))),
          std::max(1, static_cast<int>(std::lround(height * s)))};
}

std::vector<PoseRecord> read_pose_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open pose file " + path.string());
  std::vector<PoseRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    PoseRecord rec;
    double tx, ty, tz, qx, qy, qz, qw;
    if (!(ss >> rec.frame_id)) continue;  // blank line
    if (!(ss >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": malformed pose line");
    }
    rec.pose = RigidTransform::from_quaternion(Eigen::Quaterniond(qw, qx, qy, qz), Vec3(tx, ty, tz));
    out.push_back(rec);
  }
  return out;
}

void write_pose_file(const std::filesystem::path& path, std::span<const PoseRecord> poses) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write pose file " + path.string());
  char buf[256];
  for (const auto& rec : poses) {
    const auto q = rec.pose.quaternion();
    const auto& t = rec.pose.translation();
    std::snprintf(buf, sizeof(buf), "%lld %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n",
                  static_cast<long long>(rec.frame_id), t.x(), t.y(), t.z(), q.x(), q.y(), q.z(),
                  q.w());
    out << buf;
  }
}

}  // namespace oaf
