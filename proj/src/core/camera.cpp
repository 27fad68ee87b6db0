#include "core/camera.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "core/errors.hpp"

namespace recap::camera {

Intrinsics make_intrinsics(int width, int height, double fov_x) {
  if (width < 1) throw ValidationError("width must be >= 1, got " + std::to_string(width), "width");
  if (height < 1) throw ValidationError("height must be >= 1, got " + std::to_string(height), "height");
  if (!(fov_x > 0.0 && fov_x < std::numbers::pi))
    throw ValidationError("fov_x must lie in (0, pi), got " + std::to_string(fov_x), "fov_x");
  Intrinsics k;
  k.width_ = width;
  k.height_ = height;
  k.fov_x_ = fov_x;
  k.focal_px_ = (width / 2.0) / std::tan(fov_x / 2.0);
  return k;
}

Mat4 Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Pose Pose::from_matrix(const Mat4& m) {
  Pose p;
  p.rotation = m.topLeftCorner<3, 3>();
  p.translation = m.topRightCorner<3, 1>();
  return p;
}

bool is_rigid(const Mat3& rotation, double tolerance) {
  const Mat3 gram = rotation.transpose() * rotation;
  if (((gram - Mat3::Identity()).array().abs() > tolerance).any()) return false;
  return std::abs(rotation.determinant() - 1.0) <= tolerance;
}

Pose look_at(const Vec3& position, const Vec3& target, const Vec3& up) {
  const Vec3 view = target - position;
  const double distance = view.norm();
  if (!(distance > 0.0)) throw GeometryError("look_at: position coincides with target");
  const Vec3 forward = view / distance;
  const Vec3 side = forward.cross(up);
  const double side_norm = side.norm();
  if (up.norm() == 0.0 || side_norm <= 1e-12 * up.norm())
    throw GeometryError("look_at: up vector is parallel to the viewing direction");
  const Vec3 right = side / side_norm;
  const Vec3 true_up = right.cross(forward);

  Pose pose;
  pose.rotation.col(0) = right;
  pose.rotation.col(1) = true_up;
  pose.rotation.col(2) = -forward;
  pose.translation = position;
  return pose;
}

Ray pixel_ray(const Intrinsics& k, const Pose& pose, int px, int py) {
  if (px < 0 || px >= k.width() || py < 0 || py >= k.height())
    throw ValidationError("pixel (" + std::to_string(px) + ", " + std::to_string(py) + ") outside image", "pixel");
  const double f = k.focal_px();
  const Vec3 local((px + 0.5 - k.width() / 2.0) / f, -(py + 0.5 - k.height() / 2.0) / f, -1.0);
  Ray ray;
  ray.origin = pose.translation;
  ray.direction = (pose.rotation * local).normalized();
  return ray;
}

bool project(const Intrinsics& k, const Pose& pose, const Vec3& point, double& u, double& v) {
  const Vec3 local = pose.rotation.transpose() * (point - pose.translation);
  if (local.z() >= 0.0) return false;
  const double depth = -local.z();
  u = k.width() / 2.0 + k.focal_px() * local.x() / depth;
  v = k.height() / 2.0 - k.focal_px() * local.y() / depth;
  return true;
}

bool intersect_box(const Ray& ray, const Box& box, double t_min, double t_max, double& t_near, double& t_far) {
  double lo = t_min;
  double hi = t_max;
  for (int a = 0; a < 3; ++a) {
    const double d = ray.direction[a];
    const double o = ray.origin[a];
    if (d == 0.0) {
      if (o < box.min[a] || o > box.max[a]) return false;
      continue;
    }
    double t0 = (box.min[a] - o) / d;
    double t1 = (box.max[a] - o) / d;
    if (t0 > t1) std::swap(t0, t1);
    lo = std::max(lo, t0);
    hi = std::min(hi, t1);
    if (lo > hi) return false;
  }
  if (!(hi > lo)) return false;
  t_near = lo;
  t_far = hi;
  return true;
}

}  // namespace recap::camera
