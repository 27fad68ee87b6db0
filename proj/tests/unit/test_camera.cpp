#include <doctest.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>

#include "core/camera.hpp"
#include "core/errors.hpp"
#include "core/pose_dataset.hpp"
#include "support/oracles.hpp"

using namespace recap;
using namespace recap::camera;

namespace {

double angle_between(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

std::string invalid_field(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    return e.field();
  }
  return "";
}

CaptureDataset two_frame_dataset() {
  CaptureDataset d;
  d.intrinsics = make_intrinsics(8, 6, 1.1);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2; ++i) {
    FrameRecord f;
    f.frame_id = "frame_" + std::to_string(i);
    f.image = quantize8(oracle::random_image(8, 6, rng));
    f.pose = look_at(Vec3(1.0 / 3.0 + i, -2.0 / 7.0, 1.2345678901234567), Vec3(0.1, 0.2, 0.3), Vec3::UnitZ());
    d.frames.push_back(f);
  }
  return d;
}

}  // namespace

TEST_CASE("make_intrinsics focal length") {
  CHECK(make_intrinsics(2, 2, std::numbers::pi / 2).focal_px() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(make_intrinsics(1920, 1080, std::numbers::pi / 2).focal_px() == doctest::Approx(960.0).epsilon(1e-15));
  const auto k = make_intrinsics(64, 48, 1.0);
  CHECK(std::abs(k.focal_px() - 32.0 / std::tan(0.5)) / k.focal_px() < 1e-12);
}

TEST_CASE("make_intrinsics rejects bad arguments by name") {
  CHECK(invalid_field([] { make_intrinsics(0, 4, 1.0); }) == "width");
  CHECK(invalid_field([] { make_intrinsics(4, 0, 1.0); }) == "height");
  CHECK(invalid_field([] { make_intrinsics(4, 4, 0.0); }) == "fov_x");
  CHECK(invalid_field([] { make_intrinsics(4, 4, std::numbers::pi); }) == "fov_x");
}

TEST_CASE("look_at orientation") {
  const Pose top = look_at(Vec3(0, 0, 1), Vec3::Zero(), Vec3::UnitY());
  CHECK((top.forward() - Vec3(0, 0, -1)).norm() < 1e-15);

  const Pose side = look_at(Vec3(1, 0, 0), Vec3::Zero(), Vec3::UnitZ());
  CHECK((side.forward() - Vec3(-1, 0, 0)).norm() < 1e-15);
  const Mat3 rrt = side.rotation * side.rotation.transpose();
  CHECK((rrt - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(side.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(look_at(Vec3(1, 2, 3), Vec3(1, 2, 3), Vec3::UnitZ()), GeometryError);
  CHECK_THROWS_AS(look_at(Vec3(0, 0, 2), Vec3::Zero(), Vec3::UnitZ()), GeometryError);
}

TEST_CASE("pixel_ray basics") {
  const auto k = make_intrinsics(5, 5, 1.2);
  const Ray center = pixel_ray(k, Pose{}, 2, 2);
  CHECK((center.direction - Vec3(0, 0, -1)).norm() < 1e-15);

  const auto k2 = make_intrinsics(2, 2, std::numbers::pi / 2);
  const Ray corner = pixel_ray(k2, Pose{}, 0, 0);
  CHECK((corner.direction - Vec3(-0.5, 0.5, -1).normalized()).norm() < 1e-15);
  double u = 0, v = 0;
  REQUIRE(project(k2, Pose{}, corner.origin + 3.0 * corner.direction, u, v));
  CHECK(u == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(v == doctest::Approx(0.5).epsilon(1e-12));

  CHECK_THROWS_AS(pixel_ray(k, Pose{}, 5, 0), ValidationError);
  CHECK_THROWS_AS(pixel_ray(k, Pose{}, 0, -1), ValidationError);
}

TEST_CASE("rays reproject to their pixel centers") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const auto k = make_intrinsics(17, 11, 0.9);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 pos(u(rng), u(rng), u(rng) + 8.0);
    const Vec3 target(u(rng) * 0.1, u(rng) * 0.1, 0.0);
    const Pose pose = look_at(pos, target, Vec3::UnitZ());
    CHECK(is_rigid(pose.rotation));
    const Ray c = pixel_ray(k, pose, 8, 5);
    CHECK(angle_between(c.direction, target - pos) < 1e-9);
    for (int py = 0; py < k.height(); ++py)
      for (int px = 0; px < k.width(); ++px) {
        const Ray r = pixel_ray(k, pose, px, py);
        CHECK(std::abs(r.direction.norm() - 1.0) < 1e-12);
        double pu = 0, pv = 0;
        REQUIRE(project(k, pose, r.origin + 2.5 * r.direction, pu, pv));
        CHECK(std::abs(pu - (px + 0.5)) < 1e-6);
        CHECK(std::abs(pv - (py + 0.5)) < 1e-6);
      }
  }
}

TEST_CASE("slab test") {
  const Box box{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
  double tn = 0, tf = 0;
  REQUIRE(intersect_box(Ray{Vec3(0, 0, 5), Vec3(0, 0, -1)}, box, 0.0, 100.0, tn, tf));
  CHECK(tn == doctest::Approx(4.0));
  CHECK(tf == doctest::Approx(6.0));
  CHECK_FALSE(intersect_box(Ray{Vec3(3, 0, 5), Vec3(0, 0, -1)}, box, 0.0, 100.0, tn, tf));
  REQUIRE(intersect_box(Ray{Vec3(0, 0, 0), Vec3(1, 0, 0)}, box, 0.05, 100.0, tn, tf));
  CHECK(tn == doctest::Approx(0.05));
  CHECK(tf == doctest::Approx(1.0));
}

TEST_CASE("pose matrix round trip") {
  const Pose p = look_at(Vec3(0.3, -1.7, 2.2), Vec3(0.1, 0.0, 0.4), Vec3::UnitZ());
  CHECK(Pose::from_matrix(p.matrix()) == p);
}

TEST_CASE("pose dataset round trip is exact") {
  oracle::TempDir dir("dataset");
  const auto d = two_frame_dataset();
  const auto manifest = write_pose_dataset(d, dir.path() / "ds");
  CHECK(manifest.filename() == kManifestName);
  const auto back = read_pose_dataset(dir.path() / "ds");
  CHECK(back.intrinsics == d.intrinsics);
  REQUIRE(back.frames.size() == 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(back.frames[i].frame_id == d.frames[i].frame_id);
    CHECK(back.frames[i].pose == d.frames[i].pose);
    CHECK(back.frames[i].image == d.frames[i].image);
  }
}

TEST_CASE("pose dataset load errors are distinct") {
  oracle::TempDir dir("dataset_err");
  const auto kind = [](const std::filesystem::path& p) {
    try {
      read_pose_dataset(p);
    } catch (const LoadError& e) {
      return static_cast<int>(e.kind());
    }
    return -1;
  };
  CHECK(kind(dir.path() / "nothing") == static_cast<int>(LoadFailure::kMissingManifest));

  const auto ds = dir.path() / "ds";
  write_pose_dataset(two_frame_dataset(), ds);
  std::filesystem::remove(ds / "frame_1.png");
  try {
    read_pose_dataset(ds);
    FAIL("expected a load error");
  } catch (const LoadError& e) {
    CHECK(e.kind() == LoadFailure::kMissingImage);
    CHECK(std::string(e.what()).find("frame_1") != std::string::npos);
  }

  write_pose_dataset(two_frame_dataset(), ds);
  { std::ofstream(ds / kManifestName) << "{ not json"; }
  CHECK(kind(ds) == static_cast<int>(LoadFailure::kCorruptManifest));

  auto small = two_frame_dataset();
  write_pose_dataset(small, ds);
  std::mt19937_64 rng(1);
  write_png(oracle::random_image(4, 4, rng), ds / "frame_0.png");
  CHECK(kind(ds) == static_cast<int>(LoadFailure::kDimensionMismatch));
}

TEST_CASE("dataset validation") {
  auto d = two_frame_dataset();
  d.frames[1].frame_id = d.frames[0].frame_id;
  CHECK_THROWS_AS(validate_dataset(d), ValidationError);
  oracle::TempDir dir("dataset_dup");
  CHECK_THROWS_AS(write_pose_dataset(d, dir.path() / "ds"), ValidationError);

  auto skew = two_frame_dataset();
  skew.frames[0].pose.rotation(0, 0) += 1e-3;
  CHECK_THROWS_AS(validate_dataset(skew), ValidationError);

  auto bright = two_frame_dataset();
  bright.frames[0].image.data[0] = 1.5;
  CHECK_THROWS_AS(validate_dataset(bright), ValidationError);
}
