#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/camera.hpp"
#include "core/image.hpp"
#include "core/pose_dataset.hpp"

namespace recap::scene {

enum class Shape { kSphere, kBox };

/// Volumetric primitive with constant density in its core and a linear
/// falloff to zero over `edge_softness` meters outside the surface.
struct Primitive {
  Shape shape = Shape::kSphere;
  Vec3 center = Vec3::Zero();
  Vec3 size = Vec3::Constant(0.5);  // radius in x for spheres, half-extents for boxes
  double density = 10.0;
  Vec3 albedo = Vec3::Constant(0.5);
  double edge_softness = 0.0;

  /// Distance outside the surface (<= 0 inside).
  double outside_distance(const Vec3& p) const;
};

struct SceneSpec {
  std::vector<Primitive> primitives;
  Vec3 background = Vec3::Zero();
  camera::Box bounds;
};

/// Throws ValidationError on negative density, albedo outside [0,1],
/// nonpositive sizes or primitives poking out of the bounds.
void validate(const SceneSpec& scene);

/// Scene JSON:
///   { "background": [r,g,b], "bounds": {"min": [x,y,z], "max": [x,y,z]},
///     "primitives": [ { "shape": "sphere", "center": [..], "radius": r,
///                       "density": s, "albedo": [..], "edge_softness": e },
///                     { "shape": "box", "center": [..], "half_extents": [..], ... } ] }
/// Unknown keys are rejected.
SceneSpec scene_from_json(const nlohmann::json& j);
nlohmann::json scene_to_json(const SceneSpec& scene);
SceneSpec load_scene(const std::filesystem::path& path);

struct DensityColor {
  double sigma = 0.0;
  Vec3 color = Vec3::Zero();
};

/// Max-density primitive wins; empty space returns (0, black).
DensityColor density_color_at(const SceneSpec& scene, const Vec3& point);

/// Per-pixel emission-absorption render with n_samples midpoint samples over
/// the part of each ray inside the scene bounds.
Image render_ground_truth(const SceneSpec& scene, const camera::Pose& pose, const camera::Intrinsics& intr,
                          int n_samples);

struct PoseJitter {
  double rotation = 0.0;     // radians, std-dev per axis
  double translation = 0.0;  // meters, std-dev per axis
};

struct DegradationSpec {
  double blur_sigma = 0.0;   // pixels
  double noise_sigma = 0.0;  // intensity units
  PoseJitter pose_jitter;
  /// Poses whose position falls inside this box are degraded; no region
  /// means every pose is.
  std::optional<camera::Box> region;

  bool is_identity() const {
    return blur_sigma == 0.0 && noise_sigma == 0.0 && pose_jitter.rotation == 0.0 && pose_jitter.translation == 0.0;
  }
  bool applies_to(const camera::Pose& pose) const { return !region || region->contains(pose.translation); }
};

void validate(const DegradationSpec& deg);

/// Separable Gaussian blur with edge replication; sigma 0 is the identity.
Image gaussian_blur(const Image& image, double sigma);

/// Simulated camera capture: ground-truth render, blur, additive Gaussian
/// noise (clamped to [0,1]) and a perturbed recorded pose. Deterministic in
/// (seed, frame_id).
camera::FrameRecord capture(const SceneSpec& scene, const camera::Pose& pose, const camera::Intrinsics& intr,
                            const DegradationSpec& deg, std::uint64_t seed, const std::string& frame_id,
                            int n_samples);

struct Rectangle {
  Vec3 center = Vec3::Zero();  // only x and y are used
  double half_x = 1.0;
  double half_y = 1.0;
  double altitude = 1.0;  // z of the flight plane
};

/// n_frames poses equally spaced by arc length around the rectangle, starting
/// at the (+half_x, +half_y) corner and heading toward -x, each looking at
/// `target` with world up +Z.
std::vector<camera::Pose> rectangular_trajectory(const Rectangle& rect, int n_frames, const Vec3& target);

}  // namespace recap::scene
