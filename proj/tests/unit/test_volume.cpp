#include <doctest.h>

#include <cmath>
#include <random>

#include "core/random.hpp"
#include "core/volume.hpp"
#include "support/oracles.hpp"

using namespace recap;
using namespace recap::volume;

TEST_CASE("compositing examples") {
  SUBCASE("empty space returns the background") {
    const std::vector<double> sigma(5, 0.0), rgb(15, 0.7), delta(5, 0.3);
    std::vector<double> w(5, -1.0);
    const auto out = composite(sigma, rgb, delta, Vec3(0.1, 0.2, 0.3), w);
    CHECK(out.color == Vec3(0.1, 0.2, 0.3));
    CHECK(out.transmittance_final == 1.0);
    for (double v : w) CHECK(v == 0.0);
  }
  SUBCASE("saturated single sample") {
    const std::vector<double> sigma{30.0}, rgb{0.2, 0.4, 0.6}, delta{1.0};
    const auto out = composite(sigma, rgb, delta, Vec3::Zero());
    for (int c = 0; c < 3; ++c) CHECK(std::abs(out.color[c] - rgb[c]) < 1e-9);
  }
  SUBCASE("two samples closed form") {
    const std::vector<double> sigma{1.0, 2.0}, rgb{1, 0, 0, 0, 1, 0}, delta{0.5, 0.5};
    std::vector<double> w(2);
    const auto out = composite(sigma, rgb, delta, Vec3::Zero(), w);
    const double w1 = 1.0 - std::exp(-0.5), w2 = std::exp(-0.5) * (1.0 - std::exp(-1.0));
    CHECK(w[0] == doctest::Approx(w1).epsilon(1e-14));
    CHECK(w[1] == doctest::Approx(w2).epsilon(1e-14));
    CHECK(w1 == doctest::Approx(0.393469).epsilon(1e-6));
    CHECK(w2 == doctest::Approx(0.383401).epsilon(1e-6));
    CHECK(out.color.x() == doctest::Approx(w1).epsilon(1e-14));
    CHECK(out.color.y() == doctest::Approx(w2).epsilon(1e-14));
    CHECK(out.color.z() == 0.0);
  }
}

TEST_CASE("compositing matches the scalar definition") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(u(rng) * 20);
    std::vector<double> sigma(n), rgb(3 * n), delta(n);
    for (int i = 0; i < n; ++i) {
      sigma[i] = 10.0 * u(rng) * u(rng);
      delta[i] = 0.01 + 0.3 * u(rng);
      for (int c = 0; c < 3; ++c) rgb[3 * i + c] = u(rng);
    }
    const std::array<double, 3> bg{u(rng), u(rng), u(rng)};
    std::vector<double> w(n);
    const auto got = composite(sigma, rgb, delta, Vec3(bg[0], bg[1], bg[2]), w);
    const auto ref = oracle::scalar_composite(sigma, rgb, delta, bg);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(got.color[c] - ref.color[c]) < 1e-12);
    CHECK(std::abs(got.transmittance_final - ref.t_final) < 1e-12);
    for (int i = 0; i < n; ++i) CHECK(std::abs(w[i] - ref.weights[i]) < 1e-12);
  }
}

TEST_CASE("composite_backward matches finite differences") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 6;
    std::vector<double> sigma(n), rgb(3 * n), delta(n);
    for (int i = 0; i < n; ++i) {
      sigma[i] = 3.0 * u(rng);
      delta[i] = 0.05 + 0.2 * u(rng);
      for (int c = 0; c < 3; ++c) rgb[3 * i + c] = u(rng);
    }
    const Vec3 bg(u(rng), u(rng), u(rng));
    const Vec3 g(u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5);
    const auto loss = [&] { return g.dot(composite(sigma, rgb, delta, bg).color); };
    std::vector<double> gs(n), gc(3 * n);
    composite_backward(sigma, rgb, delta, bg, g, gs, gc);
    const double eps = 1e-6;
    std::vector<double> analytic, numeric;
    for (int i = 0; i < n; ++i) {
      const double s0 = sigma[i];
      sigma[i] = s0 + eps;
      const double up = loss();
      sigma[i] = s0 - eps;
      const double down = loss();
      sigma[i] = s0;
      analytic.push_back(gs[i]);
      numeric.push_back((up - down) / (2 * eps));
    }
    for (int k = 0; k < 3 * n; ++k) {
      const double c0 = rgb[k];
      rgb[k] = c0 + eps;
      const double up = loss();
      rgb[k] = c0 - eps;
      const double down = loss();
      rgb[k] = c0;
      analytic.push_back(gc[k]);
      numeric.push_back((up - down) / (2 * eps));
    }
    CHECK(oracle::max_relative_error(analytic, numeric) < 1e-6);
  }
}

TEST_CASE("stratified sampling") {
  const camera::Ray ray{Vec3(1, 2, 3), Vec3(0, 0, -1)};
  Rng rng(9);
  SUBCASE("single stratum") {
    const auto s = sample_stratified(ray, 0.5, 2.0, 1, rng);
    REQUIRE(s.size() == 1);
    CHECK(s.t[0] >= 0.5);
    CHECK(s.t[0] <= 2.0);
    CHECK(s.delta[0] == doctest::Approx(2.0 - s.t[0]));
  }
  SUBCASE("strata, ordering and points") {
    for (int trial = 0; trial < 100; ++trial) {
      const auto s = sample_stratified(ray, 0.5, 2.5, 8, rng);
      REQUIRE(s.size() == 8);
      for (int i = 0; i < 8; ++i) {
        CHECK(s.t[i] >= 0.5 + i * 0.25);
        CHECK(s.t[i] <= 0.5 + (i + 1) * 0.25);
        CHECK(s.delta[i] > 0.0);
        CHECK((s.points[i] - (ray.origin + s.t[i] * ray.direction)).norm() < 1e-12);
        if (i > 0) CHECK(s.t[i] > s.t[i - 1]);
      }
      CHECK(s.delta[7] == doctest::Approx(2.5 - s.t[7]));
    }
  }
  SUBCASE("mean of a single stratum") {
    const int draws = 100000;
    double sum = 0.0;
    for (int i = 0; i < draws; ++i) sum += sample_stratified(ray, 1.0, 3.0, 1, rng).t[0];
    const double se = 2.0 / std::sqrt(12.0) / std::sqrt(static_cast<double>(draws));
    CHECK(std::abs(sum / draws - 2.0) < 3.0 * se);
  }
  SUBCASE("deterministic given the generator state") {
    Rng a(77), b(77);
    CHECK(sample_stratified(ray, 0.1, 1.0, 5, a).t == sample_stratified(ray, 0.1, 1.0, 5, b).t);
  }
}
