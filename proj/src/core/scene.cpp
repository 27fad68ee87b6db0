#include "core/scene.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <fstream>
#include <ranges>

#include "core/errors.hpp"
#include "core/json_util.hpp"
#include "core/parallel.hpp"
#include "core/random.hpp"
#include "core/volume.hpp"

namespace recap::scene {

using nlohmann::json;

double Primitive::outside_distance(const Vec3& p) const {
  if (shape == Shape::kSphere) return (p - center).norm() - size.x();
  const Vec3 q = (p - center).cwiseAbs() - size;
  const double outside = q.cwiseMax(0.0).norm();
  const double inside = std::min(q.maxCoeff(), 0.0);
  return outside + inside;
}

void validate(const SceneSpec& scene) {
  for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
    const auto& p = scene.primitives[i];
    const std::string where = "primitive " + std::to_string(i);
    if (!(p.density >= 0.0)) throw ValidationError(where + ": density must be >= 0", "density");
    if (!(p.edge_softness >= 0.0)) throw ValidationError(where + ": edge_softness must be >= 0", "edge_softness");
    if ((p.albedo.array() < 0.0).any() || (p.albedo.array() > 1.0).any())
      throw ValidationError(where + ": albedo must lie in [0,1]", "albedo");
    const Vec3 half = p.shape == Shape::kSphere ? Vec3::Constant(p.size.x()) : p.size;
    if ((half.array() <= 0.0).any()) throw ValidationError(where + ": size must be positive", "size");
    if (!scene.bounds.contains(p.center - half, 1e-12) || !scene.bounds.contains(p.center + half, 1e-12))
      throw ValidationError(where + " extends outside the scene bounds", "bounds");
  }
  if ((scene.background.array() < 0.0).any() || (scene.background.array() > 1.0).any())
    throw ValidationError("background must lie in [0,1]", "background");
}

SceneSpec scene_from_json(const json& j) {
  jsonutil::require_keys(j, "scene", {"background", "bounds", "primitives"});
  SceneSpec scene;
  scene.background = jsonutil::vec3(j.at("background"), "background");
  scene.bounds = jsonutil::box(j.at("bounds"), "bounds");
  for (const auto& pj : j.value("primitives", json::array())) {
    Primitive p;
    const std::string shape = pj.at("shape").get<std::string>();
    if (shape == "sphere") {
      jsonutil::require_keys(pj, "sphere", {"shape", "center", "radius", "density", "albedo", "edge_softness"});
      p.shape = Shape::kSphere;
      p.size = Vec3::Constant(pj.at("radius").get<double>());
    } else if (shape == "box") {
      jsonutil::require_keys(pj, "box", {"shape", "center", "half_extents", "density", "albedo", "edge_softness"});
      p.shape = Shape::kBox;
      p.size = jsonutil::vec3(pj.at("half_extents"), "half_extents");
    } else {
      throw ValidationError("unknown primitive shape '" + shape + "'", "shape");
    }
    p.center = jsonutil::vec3(pj.at("center"), "center");
    p.density = pj.at("density").get<double>();
    p.albedo = jsonutil::vec3(pj.at("albedo"), "albedo");
    p.edge_softness = jsonutil::get_or(pj, "edge_softness", 0.0);
    scene.primitives.push_back(p);
  }
  validate(scene);
  return scene;
}

json scene_to_json(const SceneSpec& scene) {
  json prims = json::array();
  for (const auto& p : scene.primitives) {
    json pj = {{"center", jsonutil::to_json(p.center)},
               {"density", p.density},
               {"albedo", jsonutil::to_json(p.albedo)},
               {"edge_softness", p.edge_softness}};
    if (p.shape == Shape::kSphere) {
      pj["shape"] = "sphere";
      pj["radius"] = p.size.x();
    } else {
      pj["shape"] = "box";
      pj["half_extents"] = jsonutil::to_json(p.size);
    }
    prims.push_back(pj);
  }
  return {{"background", jsonutil::to_json(scene.background)},
          {"bounds", jsonutil::to_json(scene.bounds)},
          {"primitives", prims}};
}

SceneSpec load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(LoadFailure::kMissingManifest, "cannot open scene file '" + path.string() + "'");
  try {
    return scene_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw LoadError(LoadFailure::kCorruptManifest, "bad scene file '" + path.string() + "': " + e.what());
  }
}

namespace {

template <class Ids>
DensityColor strongest(const SceneSpec& scene, const Ids& ids, const Vec3& point) {
  DensityColor best;
  for (const std::size_t i : ids) {
    const Primitive& p = scene.primitives[i];
    const double d = p.outside_distance(point);
    double sigma = 0.0;
    if (d <= 0.0)
      sigma = p.density;
    else if (d < p.edge_softness)
      sigma = p.density * (1.0 - d / p.edge_softness);
    if (sigma > best.sigma) {
      best.sigma = sigma;
      best.color = p.albedo;
    }
  }
  return best;
}

/// Primitives whose support (shape grown by edge_softness) the ray segment
/// can reach; every other primitive has zero density along the segment.
std::vector<std::size_t> primitives_on_ray(const SceneSpec& scene, const camera::Ray& ray, double t0, double t1) {
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
    const Primitive& p = scene.primitives[i];
    const Vec3 half = (p.shape == Shape::kSphere ? Vec3::Constant(p.size.x()) : p.size).array() +
                      (p.edge_softness + 1e-9);
    double a = 0.0, b = 0.0;
    if (camera::intersect_box(ray, {p.center - half, p.center + half}, t0, t1, a, b)) ids.push_back(i);
  }
  return ids;
}

}  // namespace

DensityColor density_color_at(const SceneSpec& scene, const Vec3& point) {
  return strongest(scene, std::views::iota(std::size_t{0}, scene.primitives.size()), point);
}

Image render_ground_truth(const SceneSpec& scene, const camera::Pose& pose, const camera::Intrinsics& intr,
                          int n_samples) {
  if (n_samples < 2) throw ValidationError("n_samples must be >= 2", "n_samples");
  Image image(intr.width(), intr.height());
  parallel_for(static_cast<std::size_t>(intr.height()), [&](std::size_t row) {
    const int py = static_cast<int>(row);
    for (int px = 0; px < intr.width(); ++px) {
      const camera::Ray ray = camera::pixel_ray(intr, pose, px, py);
      Vec3 rgb = scene.background;
      double t0 = 0.0, t1 = 0.0;
      if (camera::intersect_box(ray, scene.bounds, 0.0, std::numeric_limits<double>::infinity(), t0, t1)) {
        volume::RaySampleSet s = volume::sample_midpoints(ray, t0, t1, n_samples);
        s.sigma.resize(s.size());
        s.color.resize(3 * s.size());
        const auto ids = primitives_on_ray(scene, ray, t0, t1);
        for (std::size_t i = 0; i < s.size(); ++i) {
          const DensityColor dc = strongest(scene, ids, s.points[i]);
          s.sigma[i] = dc.sigma;
          s.color[3 * i] = dc.color[0];
          s.color[3 * i + 1] = dc.color[1];
          s.color[3 * i + 2] = dc.color[2];
        }
        rgb = volume::volume_render(s, scene.background).color;
      }
      for (int c = 0; c < 3; ++c) image.at(px, py, c) = rgb[c];
    }
  });
  return image;
}

void validate(const DegradationSpec& deg) {
  if (!(deg.blur_sigma >= 0.0)) throw ValidationError("blur_sigma must be >= 0", "blur_sigma");
  if (!(deg.noise_sigma >= 0.0)) throw ValidationError("noise_sigma must be >= 0", "noise_sigma");
  if (!(deg.pose_jitter.rotation >= 0.0) || !(deg.pose_jitter.translation >= 0.0))
    throw ValidationError("pose_jitter components must be >= 0", "pose_jitter");
}

Image gaussian_blur(const Image& image, double sigma) {
  if (sigma <= 0.0) return image;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) sum += kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& k : kernel) k /= sum;

  Image tmp(image.width, image.height);
  Image out(image.width, image.height);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += kernel[i + radius] * image.at(std::clamp(x + i, 0, image.width - 1), y, c);
        tmp.at(x, y, c) = acc;
      }
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += kernel[i + radius] * tmp.at(x, std::clamp(y + i, 0, image.height - 1), c);
        out.at(x, y, c) = acc;
      }
  return out;
}

camera::FrameRecord capture(const SceneSpec& scene, const camera::Pose& pose, const camera::Intrinsics& intr,
                            const DegradationSpec& deg, std::uint64_t seed, const std::string& frame_id,
                            int n_samples) {
  validate(deg);
  camera::FrameRecord frame;
  frame.frame_id = frame_id;
  frame.pose = pose;
  frame.image = render_ground_truth(scene, pose, intr, n_samples);
  if (deg.is_identity() || !deg.applies_to(pose)) return frame;

  const std::uint64_t frame_key = hash_string(frame_id);
  frame.image = gaussian_blur(frame.image, deg.blur_sigma);
  if (deg.noise_sigma > 0.0) {
    for (int py = 0; py < intr.height(); ++py)
      for (int px = 0; px < intr.width(); ++px) {
        Rng rng(derive_seed({seed, frame_key, static_cast<std::uint64_t>(px), static_cast<std::uint64_t>(py)}));
        std::normal_distribution<double> noise(0.0, deg.noise_sigma);
        for (int c = 0; c < 3; ++c) frame.image.at(px, py, c) = std::clamp(frame.image.at(px, py, c) + noise(rng), 0.0, 1.0);
      }
  } else {
    for (double& v : frame.image.data) v = std::clamp(v, 0.0, 1.0);
  }

  if (deg.pose_jitter.rotation > 0.0 || deg.pose_jitter.translation > 0.0) {
    Rng rng(derive_seed({seed, frame_key, 0x706f7365ULL}));
    std::normal_distribution<double> unit(0.0, 1.0);
    const Vec3 axis_angle(unit(rng) * deg.pose_jitter.rotation, unit(rng) * deg.pose_jitter.rotation,
                          unit(rng) * deg.pose_jitter.rotation);
    const Vec3 shift(unit(rng) * deg.pose_jitter.translation, unit(rng) * deg.pose_jitter.translation,
                     unit(rng) * deg.pose_jitter.translation);
    const double angle = axis_angle.norm();
    if (angle > 0.0) frame.pose.rotation = Eigen::AngleAxisd(angle, axis_angle / angle).toRotationMatrix() * pose.rotation;
    frame.pose.translation = pose.translation + shift;
  }
  return frame;
}

std::vector<camera::Pose> rectangular_trajectory(const Rectangle& rect, int n_frames, const Vec3& target) {
  if (n_frames < 4) throw ValidationError("n_frames must be >= 4", "n_frames");
  if (!(rect.half_x > 0.0)) throw ValidationError("half_x must be > 0", "half_x");
  if (!(rect.half_y > 0.0)) throw ValidationError("half_y must be > 0", "half_y");

  const double hx = rect.half_x, hy = rect.half_y;
  const double perimeter = 4.0 * (hx + hy);
  const std::array<Vec3, 4> corners = {Vec3(hx, hy, 0), Vec3(-hx, hy, 0), Vec3(-hx, -hy, 0), Vec3(hx, -hy, 0)};
  const std::array<double, 4> lengths = {2 * hx, 2 * hy, 2 * hx, 2 * hy};

  std::vector<camera::Pose> poses;
  poses.reserve(n_frames);
  for (int k = 0; k < n_frames; ++k) {
    double s = perimeter * k / n_frames;
    int edge = 0;
    while (edge < 3 && s >= lengths[edge]) s -= lengths[edge++];
    const Vec3 a = corners[edge];
    const Vec3 b = corners[(edge + 1) % 4];
    const Vec3 offset = a + (b - a) * (s / lengths[edge]);
    const Vec3 position(rect.center.x() + offset.x(), rect.center.y() + offset.y(), rect.altitude);
    poses.push_back(camera::look_at(position, target, Vec3::UnitZ()));
  }
  return poses;
}

}  // namespace recap::scene
