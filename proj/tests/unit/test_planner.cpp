#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "core/camera.hpp"
#include "core/errors.hpp"
#include "core/planner.hpp"
#include "support/oracles.hpp"

using namespace recap;
using namespace recap::planner;

namespace {

ProbabilityGrid grid_from(const std::map<oracle::Cell, double>& cells, double increment = 1.0) {
  ProbabilityGrid g;
  g.spec.increment = increment;
  for (const auto& [c, p] : cells) {
    GridEntry e;
    e.index = c;
    e.pose.translation = Vec3(c[0], c[1], c[2]) * increment;
    e.probability = p;
    g.entries.push_back(e);
  }
  return g;
}

Waypoint waypoint(GridIndex idx, const Vec3& p) {
  Waypoint w;
  w.index = idx;
  w.pose.translation = p;
  return w;
}

camera::Pose at(const Vec3& p) {
  camera::Pose pose;
  pose.translation = p;
  return pose;
}

}  // namespace

TEST_CASE("candidate lattice") {
  const GridSpec unit{{Vec3(0, 0, 0), Vec3(1, 1, 1)}, 0.5};
  const Vec3 target(0.5, 0.5, -1.0);
  const auto poses = sample_candidate_poses(unit, target);
  CHECK(poses.size() == 27);
  for (const auto& c : poses) {
    CHECK(camera::is_rigid(c.pose.rotation));
    CHECK((c.pose.forward() - (target - c.pose.position()).normalized()).norm() < 1e-12);
    CHECK((c.pose.position() - Vec3(c.index[0], c.index[1], c.index[2]) * 0.5).norm() < 1e-12);
  }

  const GridSpec flat{{Vec3(0, 0, 1), Vec3(1, 1, 1)}, 1.0};
  const auto corners = sample_candidate_poses(flat, Vec3(0.5, 0.5, 0));
  REQUIRE(corners.size() == 4);
  CHECK(corners[3].pose.position().isApprox(Vec3(1, 1, 1)));

  // the lattice point at the target is skipped and the one above it is valid
  const auto around = sample_candidate_poses(unit, Vec3(0.5, 0.5, 0.5));
  CHECK(around.size() == 26);

  CHECK_THROWS_AS(sample_candidate_poses({{Vec3(0, 0, 0), Vec3(1, 1, 1)}, 0.0}, target), ValidationError);
  CHECK_THROWS_AS(sample_candidate_poses({{Vec3(1, 0, 0), Vec3(0, 1, 1)}, 0.5}, target), ValidationError);
}

TEST_CASE("select_low_quality") {
  const auto g = grid_from({{{0, 0, 0}, 0.9}, {{1, 0, 0}, 0.2}, {{2, 0, 0}, 0.69}, {{3, 0, 0}, 0.7}});
  CHECK(select_low_quality(g, 0.7) == std::vector<std::size_t>{1, 2});
  CHECK(select_low_quality(g, 0.0).empty());
  CHECK(select_low_quality(g, 1.0).size() == 4);
  CHECK_THROWS_AS(select_low_quality(g, 1.5), ValidationError);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  std::map<oracle::Cell, double> cells;
  for (int i = 0; i < 30; ++i) cells[{i, 0, 0}] = u(rng);
  const auto big = grid_from(cells);
  std::size_t prev = 0;
  for (double tau = 0.0; tau <= 1.0; tau += 0.05) {
    const auto s = select_low_quality(big, tau);
    CHECK(s.size() >= prev);
    prev = s.size();
  }
}

TEST_CASE("filter_abrupt_changes examples") {
  auto g = grid_from({{{0, 0, 0}, 0.1}, {{1, 0, 0}, 0.9}, {{2, 0, 0}, 0.3}, {{5, 5, 5}, 0.0}});
  // cell 0 jumps 0.8 to its neighbor, cell 2 jumps 0.6, the isolated cell has no neighbors
  CHECK(filter_abrupt_changes(g, {0, 2, 3}, 0.5) == std::vector<std::size_t>{3});
  CHECK(filter_abrupt_changes(g, {0, 2, 3}, 0.7) == std::vector<std::size_t>{2, 3});
  CHECK(filter_abrupt_changes(g, {0, 2, 3}, 1.0) == std::vector<std::size_t>{0, 2, 3});
  // a jump exactly at the threshold is kept
  g = grid_from({{{0, 0, 0}, 0.25}, {{0, 1, 0}, 0.75}});
  CHECK(filter_abrupt_changes(g, {0}, 0.5) == std::vector<std::size_t>{0});
  CHECK(filter_abrupt_changes(g, {}, 0.5).empty());
}

TEST_CASE("filter_abrupt_changes matches a brute-force scan") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::map<oracle::Cell, double> cells;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (u(rng) > 0.15) cells[{i, j, 0}] = u(rng);
    const auto g = grid_from(cells);
    const auto selected = select_low_quality(g, 0.7);
    std::vector<oracle::Cell> keys;
    for (std::size_t s : selected) keys.push_back(g.entries[s].index);
    const auto kept = filter_abrupt_changes(g, selected, 0.5);
    std::vector<oracle::Cell> kept_keys;
    for (std::size_t k : kept) kept_keys.push_back(g.entries[k].index);
    CHECK(kept_keys == oracle::brute_filter(cells, keys, 0.5));
    CHECK(filter_abrupt_changes(g, kept, 0.5) == kept);
  }
}

TEST_CASE("plan_path examples") {
  const auto empty = plan_path(at(Vec3(1, 2, 3)), {});
  CHECK(empty.waypoints.empty());
  CHECK(empty.path_length == 0.0);
  CHECK(empty.start.position() == Vec3(1, 2, 3));

  const auto line = plan_path(at(Vec3(0, 0, 0)), {waypoint({3, 0, 0}, Vec3(3, 0, 0)), waypoint({1, 0, 0}, Vec3(1, 0, 0)),
                                                   waypoint({2, 0, 0}, Vec3(2, 0, 0))});
  REQUIRE(line.waypoints.size() == 3);
  CHECK(line.waypoints[0].index == GridIndex{1, 0, 0});
  CHECK(line.waypoints[2].index == GridIndex{3, 0, 0});
  CHECK(line.path_length == doctest::Approx(3.0).epsilon(1e-15));

  // equidistant candidates resolve to the smaller grid index
  const auto tie = plan_path(at(Vec3(0, 0, 0)), {waypoint({2, 0, 0}, Vec3(1, 0, 0)), waypoint({0, 0, 0}, Vec3(-1, 0, 0))});
  CHECK(tie.waypoints[0].index == GridIndex{0, 0, 0});
}

TEST_CASE("plan_path agrees with a step-by-step greedy walk") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> cell(0, 6);
  std::uniform_int_distribution<int> count(1, 7);
  for (int trial = 0; trial < 40; ++trial) {
    std::map<oracle::Cell, bool> used;
    std::vector<Waypoint> wps;
    std::vector<oracle::P3> pts;
    std::vector<oracle::Cell> keys;
    const int n = count(rng);
    while (static_cast<int>(wps.size()) < n) {
      const oracle::Cell c{cell(rng), cell(rng), cell(rng)};
      if (used[c]) continue;
      used[c] = true;
      const Vec3 p = Vec3(c[0], c[1], c[2]) * 0.4;
      wps.push_back(waypoint(c, p));
      pts.push_back({p.x(), p.y(), p.z()});
      keys.push_back(c);
    }
    const oracle::P3 start{0.1, -0.3, 0.2};
    const auto plan = plan_path(at(Vec3(start.x, start.y, start.z)), wps);
    const auto order = oracle::greedy_order(start, pts, keys);
    REQUIRE(plan.waypoints.size() == order.size());
    for (std::size_t i = 0; i < order.size(); ++i) CHECK(plan.waypoints[i].index == keys[order[i]]);
    CHECK(plan.path_length == doctest::Approx(oracle::tour_length(start, pts, order)).epsilon(1e-12));
    CHECK(plan.path_length >= oracle::optimal_length(start, pts) - 1e-12);

    auto shuffled = wps;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto again = plan_path(plan.start, shuffled);
    for (std::size_t i = 0; i < order.size(); ++i) CHECK(again.waypoints[i].index == plan.waypoints[i].index);
  }
}

TEST_CASE("plan JSON round trip") {
  oracle::TempDir dir("plan");
  const auto poses = sample_candidate_poses({{Vec3(0, 0, 1), Vec3(1, 1, 1)}, 1.0}, Vec3(0.3, 0.4, 0));
  std::vector<Waypoint> wps;
  for (const auto& c : poses) wps.push_back({c.index, c.pose});
  const auto plan = plan_path(camera::look_at(Vec3(-1, 0.5, 1.2), Vec3(0, 0, 0), Vec3::UnitZ()), wps);
  write_plan(plan, dir.path() / "plan.json");
  const auto back = read_plan(dir.path() / "plan.json");
  CHECK(back.start == plan.start);
  CHECK(back.path_length == plan.path_length);
  REQUIRE(back.waypoints.size() == plan.waypoints.size());
  for (std::size_t i = 0; i < back.waypoints.size(); ++i) {
    CHECK(back.waypoints[i].index == plan.waypoints[i].index);
    CHECK(back.waypoints[i].pose == plan.waypoints[i].pose);
  }
  CHECK_THROWS_AS(read_plan(dir.path() / "absent.json"), LoadError);
}

TEST_CASE("a zero evaluator scores every candidate at one half") {
  const GridSpec spec{{Vec3(-1, -1, 1), Vec3(1, 1, 1)}, 1.0};
  const auto candidates = sample_candidate_poses(spec, Vec3(0, 0, 0));
  const nerf::RadianceField field(nerf::FieldConfig{2, 8, 2}, {Vec3(-1, -1, -1), Vec3(1, 1, 1)}, Vec3(0.3, 0.3, 0.3));
  evaluator::EvaluatorSpec es;
  es.height = 8;
  es.width = 8;
  es.fc1 = 4;
  es.fc2 = 4;
  const evaluator::EvaluatorModel model(es);
  RenderSettings rs{camera::make_intrinsics(16, 16, 1.0), 8, 1};
  const auto grid = evaluate_field(field, model, candidates, spec, rs);
  REQUIRE(grid.entries.size() == 9);
  for (const auto& e : grid.entries) CHECK(e.probability == 0.5);
  CHECK(select_low_quality(grid, 0.7).size() == 9);
  CHECK(filter_abrupt_changes(grid, select_low_quality(grid, 0.7), 0.5).size() == 9);
}
