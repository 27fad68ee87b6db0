#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "core/camera.hpp"
#include "core/evaluator.hpp"
#include "core/field.hpp"

namespace recap::planner {

using GridIndex = std::array<int, 3>;

struct Candidate {
  GridIndex index{};
  camera::Pose pose;
};

struct GridSpec {
  camera::Box bounds;
  double increment = 0.5;
};

/// Lattice bounds.min + k * increment per axis (not exceeding bounds.max),
/// each pose looking at `target` with world up +Z (falling back to +Y for
/// lattice points straight above or below the target). A lattice point that
/// coincides with the target is skipped since no orientation faces it.
std::vector<Candidate> sample_candidate_poses(const GridSpec& grid, const Vec3& target);

struct GridEntry {
  GridIndex index{};
  camera::Pose pose;
  double probability = 0.0;
};

struct ProbabilityGrid {
  GridSpec spec;
  std::vector<GridEntry> entries;
};

struct RenderSettings {
  camera::Intrinsics intrinsics;
  int samples_per_ray = 32;
  std::uint64_t seed = 0;
};

/// Renders every candidate from the field, resizes to the evaluator input and
/// records the inference-mode probability of high quality.
ProbabilityGrid evaluate_field(const nerf::RadianceField& field, const evaluator::EvaluatorModel& model,
                               const std::vector<Candidate>& candidates, const GridSpec& spec,
                               const RenderSettings& render);

/// Positions (into grid.entries) with probability < tau, in grid order.
/// Throws ValidationError unless tau is in [0, 1].
std::vector<std::size_t> select_low_quality(const ProbabilityGrid& grid, double tau = 0.7);

/// Drops selected entries whose largest |probability difference| to an
/// existing 6-connected lattice neighbor exceeds jump_threshold. Entries
/// without neighbors are kept.
std::vector<std::size_t> filter_abrupt_changes(const ProbabilityGrid& grid, const std::vector<std::size_t>& selected,
                                               double jump_threshold = 0.5);

struct Waypoint {
  GridIndex index{};
  camera::Pose pose;
};

struct MissionPlan {
  camera::Pose start;
  std::vector<Waypoint> waypoints;
  double path_length = 0.0;
};

/// Greedy nearest neighbor from the start position; equal distances are
/// resolved by the lexicographically smaller grid index.
MissionPlan plan_path(const camera::Pose& start, const std::vector<Waypoint>& waypoints);

/// Plan JSON:
///   { "start": {"position": [x,y,z], "orientation": [[3] x 3]},
///     "path_length": m,
///     "waypoints": [ {"index": [i,j,k], "position": [x,y,z],
///                     "orientation": [[3] x 3]} ] }
/// orientation is the world-from-camera rotation, rows top to bottom.
void write_plan(const MissionPlan& plan, const std::filesystem::path& path);
MissionPlan read_plan(const std::filesystem::path& path);

/// CSV: i,j,k,x,y,z,probability,selected,kept
void write_grid_csv(const ProbabilityGrid& grid, const std::vector<std::size_t>& selected,
                    const std::vector<std::size_t>& kept, const std::filesystem::path& path);

}  // namespace recap::planner
