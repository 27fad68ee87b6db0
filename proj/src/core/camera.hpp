#pragma once

#include <Eigen/Dense>

namespace recap {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

namespace camera {

/// Pinhole camera with square pixels and the principal point at the image
/// center.
class Intrinsics {
 public:
  Intrinsics() = default;

  int width() const { return width_; }
  int height() const { return height_; }
  double fov_x() const { return fov_x_; }
  /// (width / 2) / tan(fov_x / 2)
  double focal_px() const { return focal_px_; }

  bool operator==(const Intrinsics&) const = default;

 private:
  friend Intrinsics make_intrinsics(int width, int height, double fov_x);
  int width_ = 1;
  int height_ = 1;
  double fov_x_ = 1.0;
  double focal_px_ = 1.0;
};

/// Throws ValidationError naming the offending field ("width", "height" or
/// "fov_x") when out of range.
Intrinsics make_intrinsics(int width, int height, double fov_x);

/// World-from-camera rigid transform. The camera looks down its local -Z axis
/// with +Y up and +X to the right.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 position() const { return translation; }
  Vec3 forward() const { return -rotation.col(2); }
  Mat4 matrix() const;
  static Pose from_matrix(const Mat4& m);
  bool operator==(const Pose& o) const { return rotation == o.rotation && translation == o.translation; }
};

/// Checks orthonormality and det = +1 to within `tolerance` per entry.
bool is_rigid(const Mat3& rotation, double tolerance = 1e-9);

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = -Vec3::UnitZ();
};

/// Orients a camera at `position` so that its forward axis points at `target`.
/// Throws GeometryError when position == target or `up` is parallel to the
/// viewing direction.
Pose look_at(const Vec3& position, const Vec3& target, const Vec3& up);

/// Ray through the center of pixel (px, py). Throws ValidationError for
/// out-of-bounds pixels.
Ray pixel_ray(const Intrinsics& intrinsics, const Pose& pose, int px, int py);

/// Projects a world point to continuous pixel coordinates (x right, y down).
/// Returns false when the point is behind the camera.
bool project(const Intrinsics& intrinsics, const Pose& pose, const Vec3& point, double& u, double& v);

/// Axis-aligned box.
struct Box {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
  bool contains(const Vec3& p, double slack = 0.0) const {
    return (p.array() >= min.array() - slack).all() && (p.array() <= max.array() + slack).all();
  }
};

/// Slab test. On hit returns true and the parametric entry/exit distances
/// clipped to [t_min, t_max].
bool intersect_box(const Ray& ray, const Box& box, double t_min, double t_max, double& t_near, double& t_far);

}  // namespace camera
}  // namespace recap
