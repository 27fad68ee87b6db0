#include "core/planner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "core/errors.hpp"
#include "core/json_util.hpp"
#include "core/text_format.hpp"

namespace recap::planner {

using nlohmann::json;

std::vector<Candidate> sample_candidate_poses(const GridSpec& grid, const Vec3& target) {
  if (!(grid.increment > 0.0)) throw ValidationError("increment must be > 0", "increment");
  const Vec3 extent = grid.bounds.extent();
  if ((extent.array() < 0.0).any()) throw ValidationError("grid bounds are empty", "bounds");
  std::array<int, 3> counts{};
  for (int a = 0; a < 3; ++a) counts[a] = static_cast<int>(std::floor(extent[a] / grid.increment + 1e-9)) + 1;

  std::vector<Candidate> out;
  for (int i = 0; i < counts[0]; ++i)
    for (int j = 0; j < counts[1]; ++j)
      for (int k = 0; k < counts[2]; ++k) {
        const Vec3 position = grid.bounds.min + grid.increment * Vec3(i, j, k);
        if ((position - target).norm() == 0.0) continue;
        camera::Pose pose;
        try {
          pose = camera::look_at(position, target, Vec3::UnitZ());
        } catch (const GeometryError&) {
          pose = camera::look_at(position, target, Vec3::UnitY());
        }
        out.push_back({{i, j, k}, pose});
      }
  return out;
}

ProbabilityGrid evaluate_field(const nerf::RadianceField& field, const evaluator::EvaluatorModel& model,
                               const std::vector<Candidate>& candidates, const GridSpec& spec,
                               const RenderSettings& render) {
  if (candidates.empty()) throw ValidationError("no candidate poses to evaluate", "candidates");
  ProbabilityGrid grid;
  grid.spec = spec;
  std::vector<Image> inputs;
  inputs.reserve(candidates.size());
  for (const auto& c : candidates) {
    try {
      const std::uint64_t seed = derive_seed({render.seed, static_cast<std::uint64_t>(c.index[0]),
                                              static_cast<std::uint64_t>(c.index[1]),
                                              static_cast<std::uint64_t>(c.index[2])});
      const Image view = nerf::render_view(field, c.pose, render.intrinsics, render.samples_per_ray, seed);
      inputs.push_back(evaluator::prepare_input(model.spec(), view));
    } catch (const Error& e) {
      throw Error("candidate (" + std::to_string(c.index[0]) + "," + std::to_string(c.index[1]) + "," +
                  std::to_string(c.index[2]) + "): " + e.what());
    }
  }
  const std::vector<double> probs = evaluator::predict(model, inputs);
  for (std::size_t i = 0; i < candidates.size(); ++i)
    grid.entries.push_back({candidates[i].index, candidates[i].pose, probs[i]});
  return grid;
}

std::vector<std::size_t> select_low_quality(const ProbabilityGrid& grid, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("tau must lie in [0, 1]", "tau");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < grid.entries.size(); ++i)
    if (grid.entries[i].probability < tau) out.push_back(i);
  return out;
}

std::vector<std::size_t> filter_abrupt_changes(const ProbabilityGrid& grid, const std::vector<std::size_t>& selected,
                                               double jump_threshold) {
  if (!(jump_threshold >= 0.0)) throw ValidationError("jump threshold must be >= 0", "jump_threshold");
  std::map<GridIndex, double> lookup;
  for (const auto& e : grid.entries) lookup[e.index] = e.probability;
  static constexpr int kOffsets[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  std::vector<std::size_t> out;
  for (std::size_t s : selected) {
    const GridEntry& e = grid.entries.at(s);
    double max_jump = 0.0;
    for (const auto& o : kOffsets) {
      const auto it = lookup.find({e.index[0] + o[0], e.index[1] + o[1], e.index[2] + o[2]});
      if (it != lookup.end()) max_jump = std::max(max_jump, std::abs(it->second - e.probability));
    }
    if (!(max_jump > jump_threshold)) out.push_back(s);
  }
  return out;
}

MissionPlan plan_path(const camera::Pose& start, const std::vector<Waypoint>& waypoints) {
  MissionPlan plan;
  plan.start = start;
  std::vector<bool> used(waypoints.size(), false);
  Vec3 here = start.translation;
  for (std::size_t step = 0; step < waypoints.size(); ++step) {
    std::size_t best = waypoints.size();
    double best_dist = 0.0;
    for (std::size_t i = 0; i < waypoints.size(); ++i) {
      if (used[i]) continue;
      const double d = (waypoints[i].pose.translation - here).norm();
      if (best == waypoints.size() || d < best_dist ||
          (d == best_dist && waypoints[i].index < waypoints[best].index)) {
        best = i;
        best_dist = d;
      }
    }
    used[best] = true;
    plan.waypoints.push_back(waypoints[best]);
    plan.path_length += best_dist;
    here = waypoints[best].pose.translation;
  }
  return plan;
}

namespace {

json rotation_json(const Mat3& r) {
  json rows = json::array();
  for (int i = 0; i < 3; ++i) rows.push_back({r(i, 0), r(i, 1), r(i, 2)});
  return rows;
}

Mat3 rotation_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ValidationError("orientation must be a 3x3 array", "orientation");
  Mat3 r;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_array() || j[i].size() != 3) throw ValidationError("orientation must be a 3x3 array", "orientation");
    for (int k = 0; k < 3; ++k) r(i, k) = j[i][k].get<double>();
  }
  return r;
}

}  // namespace

void write_plan(const MissionPlan& plan, const std::filesystem::path& path) {
  json waypoints = json::array();
  for (const auto& w : plan.waypoints)
    waypoints.push_back({{"index", w.index},
                         {"position", jsonutil::to_json(w.pose.translation)},
                         {"orientation", rotation_json(w.pose.rotation)}});
  const json doc = {{"start",
                     {{"position", jsonutil::to_json(plan.start.translation)},
                      {"orientation", rotation_json(plan.start.rotation)}}},
                    {"path_length", plan.path_length},
                    {"waypoints", waypoints}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

MissionPlan read_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(LoadFailure::kMissingManifest, "cannot open plan '" + path.string() + "'");
  try {
    const json doc = json::parse(in);
    jsonutil::require_keys(doc, "plan", {"start", "path_length", "waypoints"});
    MissionPlan plan;
    plan.start.translation = jsonutil::vec3(doc.at("start").at("position"), "position");
    plan.start.rotation = rotation_from_json(doc.at("start").at("orientation"));
    plan.path_length = doc.at("path_length").get<double>();
    for (const auto& w : doc.at("waypoints")) {
      jsonutil::require_keys(w, "waypoint", {"index", "position", "orientation"});
      Waypoint wp;
      wp.index = w.at("index").get<GridIndex>();
      wp.pose.translation = jsonutil::vec3(w.at("position"), "position");
      wp.pose.rotation = rotation_from_json(w.at("orientation"));
      plan.waypoints.push_back(wp);
    }
    return plan;
  } catch (const json::exception& e) {
    throw LoadError(LoadFailure::kCorruptManifest, "bad plan file '" + path.string() + "': " + e.what());
  }
}

void write_grid_csv(const ProbabilityGrid& grid, const std::vector<std::size_t>& selected,
                    const std::vector<std::size_t>& kept, const std::filesystem::path& path) {
  std::vector<char> is_selected(grid.entries.size(), 0), is_kept(grid.entries.size(), 0);
  for (std::size_t s : selected) is_selected.at(s) = 1;
  for (std::size_t k : kept) is_kept.at(k) = 1;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "i,j,k,x,y,z,probability,selected,kept\n";
  for (std::size_t n = 0; n < grid.entries.size(); ++n) {
    const auto& e = grid.entries[n];
    out << e.index[0] << ',' << e.index[1] << ',' << e.index[2] << ',' << fmt_exact(e.pose.translation.x()) << ','
        << fmt_exact(e.pose.translation.y()) << ',' << fmt_exact(e.pose.translation.z()) << ','
        << fmt_exact(e.probability) << ',' << int(is_selected[n]) << ',' << int(is_kept[n]) << '\n';
  }
}

}  // namespace recap::planner
