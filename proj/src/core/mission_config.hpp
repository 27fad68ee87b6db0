#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <json.hpp>

#include "core/camera.hpp"
#include "core/evaluator.hpp"
#include "core/field.hpp"
#include "core/field_train.hpp"
#include "core/labeling.hpp"
#include "core/scene.hpp"

namespace recap::mission {

struct TrajectorySpec {
  scene::Rectangle rectangle;
  int n_frames = 40;
  Vec3 target = Vec3::Zero();
};

struct EvaluatorSettings {
  evaluator::EvaluatorSpec spec;
  evaluator::TrainOptions train;
  double test_fraction = 0.2;
};

/// Poses used to generate the evaluator's labeled renders: a lattice over
/// `bounds` plus `jitter_copies` randomly displaced copies of every lattice
/// point.
struct EvaluatorDatasetSpec {
  camera::Box bounds{Vec3(-2.0, -2.0, 0.6), Vec3(2.0, 2.0, 1.8)};
  double increment = 0.4;
  int jitter_copies = 1;
  double jitter_sigma = 0.15;
  int render_samples = 32;
  evaluator::LabelThresholds thresholds;
};

struct PlannerSpec {
  camera::Box bounds{Vec3(-2.0, -2.0, 0.6), Vec3(2.0, 2.0, 1.8)};
  double increment = 0.5;
  double tau = 0.7;
  double jump_threshold = 0.5;
  int render_samples = 32;
};

/// Held-out poses on a ring around the target: uniform azimuth, radius and
/// altitude ranges, all looking at the target.
struct EvaluationSpec {
  int count = 100;
  double radius_min = 1.8;
  double radius_max = 2.6;
  double altitude_min = 0.8;
  double altitude_max = 1.8;
  int render_samples = 32;
};

struct ReportSpec {
  int point_cloud_resolution = 48;
  double density_threshold = 10.0;
};

/// Thresholds enforced by `mission report --check`.
struct CheckThresholds {
  double min_gain_q10 = 1.0;
  double min_gain_q05 = 1.0;
  double max_median_drop = 0.25;
  double min_accuracy = 0.90;
  double min_auc = 0.95;
};

struct MissionConfig {
  /// Empty when the mission runs on an ingested dataset; oracle stages then
  /// refuse to run.
  std::filesystem::path scene_path;
  std::filesystem::path output_dir = "mission_out";
  std::uint64_t seed = 1;

  camera::Intrinsics camera = camera::make_intrinsics(64, 64, 1.0471975511965976);
  int oracle_samples = 128;

  TrajectorySpec trajectory;
  scene::DegradationSpec degradation;
  /// Degradation applied to second-pass captures. Absent means clean.
  std::optional<scene::DegradationSpec> recapture_degradation;

  nerf::FieldConfig field;
  std::optional<camera::Box> field_bounds;  // defaults to the scene bounds
  std::optional<Vec3> field_background;     // defaults to the scene background
  nerf::TrainConfig train_first;
  nerf::TrainConfig train_second;

  EvaluatorSettings evaluator;
  EvaluatorDatasetSpec evaluator_dataset;
  PlannerSpec planner;
  EvaluationSpec evaluation;
  ReportSpec report;
  CheckThresholds check;
};

/// Parses and validates a config document. Unknown keys anywhere are rejected
/// with ValidationError; relative scene paths resolve against `base_dir`.
MissionConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Reads a config file and checks that the referenced scene file exists.
MissionConfig load_config(const std::filesystem::path& path);

/// Canonical JSON form (every field explicit).
nlohmann::json config_to_json(const MissionConfig& cfg);

}  // namespace recap::mission
