#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "core/errors.hpp"
#include "core/field.hpp"
#include "core/field_train.hpp"
#include "core/metrics.hpp"
#include "core/parallel.hpp"
#include "core/scene.hpp"
#include "support/field_fixtures.hpp"
#include "support/oracles.hpp"

using namespace recap;
using namespace recap::nerf;

namespace {

const camera::Box kUnitBox{Vec3(-1, -1, -1), Vec3(1, 1, 1)};

struct ThreadGuard {
  explicit ThreadGuard(int n) : saved(thread_count()) { set_thread_count(n); }
  ~ThreadGuard() { set_thread_count(saved); }
  int saved;
};

scene::SceneSpec one_sphere() {
  scene::SceneSpec s;
  s.background = Vec3(0.1, 0.1, 0.1);
  s.bounds = kUnitBox;
  scene::Primitive p;
  p.center = Vec3(0.1, 0.0, 0.05);
  p.size = Vec3::Constant(0.45);
  p.density = 40.0;
  p.albedo = Vec3(0.9, 0.5, 0.2);
  p.edge_softness = 0.05;
  s.primitives.push_back(p);
  return s;
}

camera::CaptureDataset orbit_dataset(const scene::SceneSpec& s, int frames, int size) {
  camera::CaptureDataset d;
  d.intrinsics = camera::make_intrinsics(size, size, 0.9);
  for (int i = 0; i < frames; ++i) {
    const double a = 2.0 * std::numbers::pi * i / frames;
    const Vec3 pos(2.6 * std::cos(a), 2.6 * std::sin(a), 1.0 + 0.6 * std::sin(3 * a));
    const auto pose = camera::look_at(pos, Vec3::Zero(), Vec3::UnitZ());
    d.frames.push_back(scene::capture(s, pose, d.intrinsics, {}, 0, "v" + std::to_string(i), 96));
  }
  return d;
}

}  // namespace

TEST_CASE("positional encoding") {
  const auto zero = positional_encode(Vec3::Zero(), 3);
  REQUIRE(zero.size() == 3 + 18);
  for (int l = 0; l < 3; ++l)
    for (int c = 0; c < 3; ++c) {
      CHECK(zero[3 + 6 * l + c] == 0.0);
      CHECK(zero[3 + 6 * l + 3 + c] == 1.0);
    }
  const auto plain = positional_encode(Vec3(0.1, -0.2, 0.3), 0);
  CHECK(plain == std::vector<double>{0.1, -0.2, 0.3});
  const auto one = positional_encode(Vec3(0.5, 0.0, 0.0), 1);
  REQUIRE(one.size() == 9);
  CHECK(one[0] == 0.5);
  CHECK(one[3] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(one[4] == 0.0);
  CHECK(std::abs(one[6]) < 1e-15);
  CHECK(one[7] == 1.0);
  CHECK(one[8] == 1.0);
}

TEST_CASE("zero field outputs") {
  const RadianceField f(FieldConfig{}, kUnitBox, Vec3(0.5, 0.5, 0.5));
  const auto out = field_forward(f, Vec3(0.2, -0.4, 0.1));
  CHECK(out.sigma == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  for (int c = 0; c < 3; ++c) CHECK(out.color[c] == 0.5);

  const auto intr = camera::make_intrinsics(12, 10, 0.8);
  const auto pose = camera::look_at(Vec3(0, 0, 3), Vec3::Zero(), Vec3::UnitY());
  const Image im = render_view(f, pose, intr, 16, 1);
  for (double v : im.data) CHECK(std::abs(v - im.data[0]) < 1e-6);
  CHECK(extract_point_cloud(f, kUnitBox, 8, 5.0).empty());
  CHECK(extract_point_cloud(f, kUnitBox, 2, 0.0).size() <= 8);
}

TEST_CASE("density is never negative") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const auto f = RadianceField::initialized({2, 16, 2}, kUnitBox, Vec3::Zero(), rng());
    Matrix pts(3, 500);
    for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = 3.0 * u(rng);
    Eigen::RowVectorXd sigma;
    Matrix color;
    forward_batch(f, pts, sigma, color);
    CHECK(sigma.minCoeff() >= 0.0);
    CHECK(color.minCoeff() >= 0.0);
    CHECK(color.maxCoeff() <= 1.0);
  }
}

TEST_CASE("pixel loss gradient matches central differences") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    CAPTURE(seed);
    CHECK(fixtures::field_gradient_error(seed) < 1e-4);
  }
}

TEST_CASE("gradient reduction ignores ray order and thread count") {
  const auto field = fixtures::small_field(3, 3, 16, 3);
  auto rays = fixtures::random_rays(field, 150, 8, 17);
  std::vector<double> g1(field.param_count(), 0.0), g2(field.param_count(), 0.0);
  const double l1 = loss_and_gradient(field, rays, g1);
  std::mt19937_64 rng(2);
  std::shuffle(rays.begin(), rays.end(), rng);
  double l2 = 0.0;
  {
    ThreadGuard t(3);
    l2 = loss_and_gradient(field, rays, g2);
  }
  CHECK(std::abs(l1 - l2) < 1e-12);
  double worst = 0.0;
  for (std::size_t i = 0; i < g1.size(); ++i) worst = std::max(worst, std::abs(g1[i] - g2[i]));
  CHECK(worst < 1e-10);
}

TEST_CASE("rendering is deterministic across thread counts") {
  const auto f = fixtures::small_field(8, 3, 16, 2);
  const auto intr = camera::make_intrinsics(16, 12, 0.9);
  const auto pose = camera::look_at(Vec3(2, 1, 1), Vec3::Zero(), Vec3::UnitZ());
  const Image a = render_view(f, pose, intr, 12, 42);
  Image b;
  {
    ThreadGuard t(4);
    b = render_view(f, pose, intr, 12, 42);
  }
  CHECK(a == b);
  CHECK_FALSE(render_view(f, pose, intr, 12, 43) == a);
}

TEST_CASE("checkpoint round trip and corruption") {
  oracle::TempDir dir("field");
  const auto f = fixtures::small_field(9);
  const auto path = dir.path() / "f.ckpt";
  save_field(f, path);
  CHECK(load_field(path) == f);

  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 5));
  }
  CHECK_THROWS_AS(load_field(path), LoadError);
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOTAFIELD" << bytes.substr(9);
  }
  CHECK_THROWS_AS(load_field(path), LoadError);
  CHECK_THROWS_AS(load_field(dir.path() / "missing.ckpt"), LoadError);
}

TEST_CASE("training edge cases") {
  const auto s = one_sphere();
  const auto d = orbit_dataset(s, 4, 8);
  const auto init = RadianceField::initialized({2, 8, 2}, s.bounds, s.background, 1);
  TrainConfig cfg;
  cfg.iterations = 0;
  CHECK(train(d, init, cfg).field == init);

  TrainConfig bad = cfg;
  bad.near = 2.0;
  bad.far = 1.0;
  CHECK_THROWS_AS(train(d, init, bad), ValidationError);
  camera::CaptureDataset empty;
  empty.intrinsics = d.intrinsics;
  CHECK_THROWS_AS(train(empty, init, cfg), ValidationError);

  TrainConfig blowup = cfg;
  blowup.iterations = 50;
  blowup.learning_rate = 1e12;
  try {
    train(d, init, blowup);
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("iteration") != std::string::npos);
  }
}

TEST_CASE("training fits a sphere" * doctest::timeout(600)) {
  const auto s = one_sphere();
  const auto d = orbit_dataset(s, 16, 24);
  const auto init = RadianceField::initialized({4, 32, 3}, s.bounds, s.background, 5);
  TrainConfig cfg;
  cfg.iterations = 1500;
  cfg.rays_per_batch = 128;
  cfg.samples_per_ray = 24;
  cfg.learning_rate = 2e-3;
  cfg.seed = 3;
  const auto a = train(d, init, cfg);
  const auto b = train(d, init, cfg);
  CHECK(a.field == b.field);
  CHECK(a.loss_history == b.loss_history);
  REQUIRE(a.loss_history.size() == 15);
  CHECK(a.loss_history.back() < 0.25 * a.loss_history.front());

  // Held-out view.
  const auto pose = camera::look_at(Vec3(-1.9, 1.7, 0.7), Vec3::Zero(), Vec3::UnitZ());
  const Image truth = scene::render_ground_truth(s, pose, d.intrinsics, 96);
  CHECK(metrics::psnr(render_view(a.field, pose, d.intrinsics, 48, 1), truth) > 22.0);

  // Point cloud stays on the sphere.
  const auto cloud = extract_point_cloud(a.field, s.bounds, 24, 10.0);
  REQUIRE(cloud.size() > 20);
  const double diag = std::sqrt(3.0) * 2.0 / 24;
  std::size_t inside = 0;
  for (const auto& p : cloud)
    if ((p.position - s.primitives[0].center).norm() <= s.primitives[0].size.x() + 2 * diag) ++inside;
  CHECK(static_cast<double>(inside) >= 0.9 * cloud.size());
}

TEST_CASE("PLY export") {
  oracle::TempDir dir("ply");
  std::vector<CloudPoint> cloud{{Vec3(0.5, -1, 2), Vec3(1, 0, 0.5)}, {Vec3(0, 0, 0), Vec3(0, 1, 0)}};
  write_ply(cloud, dir.path() / "c.ply");
  std::ifstream in(dir.path() / "c.ply");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  CHECK(text.rfind("ply\nformat ascii 1.0\n", 0) == 0);
  CHECK(text.find("element vertex 2\n") != std::string::npos);
  CHECK(text.find("property uchar red\n") != std::string::npos);
  CHECK(text.find("end_header\n0.500000 -1.000000 2.000000 255 0 128\n") != std::string::npos);
}
