#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "core/mission_config.hpp"
#include "core/pose_dataset.hpp"

namespace recap::mission {

/// Pipeline stages in execution order.
inline constexpr std::string_view kStages[] = {"capture-1",      "train-field-1", "build-evaluator-set",
                                               "train-evaluator", "plan",          "capture-2",
                                               "train-field-2",  "evaluate",      "report"};

bool is_stage(std::string_view name);

/// Artifact locations under a mission output directory.
struct Layout {
  explicit Layout(std::filesystem::path root);

  std::filesystem::path root;
  std::filesystem::path config;
  std::filesystem::path timings;

  std::filesystem::path dataset1;
  std::filesystem::path field1;
  std::filesystem::path loss1;

  std::filesystem::path evaluator_set;
  std::filesystem::path labels;

  std::filesystem::path evaluator;
  std::filesystem::path evaluator_history;
  std::filesystem::path evaluator_metrics;

  std::filesystem::path grid;
  std::filesystem::path plan;

  std::filesystem::path dataset2;
  std::filesystem::path field2;
  std::filesystem::path loss2;

  std::filesystem::path metrics;

  std::filesystem::path report_dir;
  std::filesystem::path quantiles;
  std::filesystem::path cdf_psnr;
  std::filesystem::path cdf_ssim;
  std::filesystem::path plot_psnr;
  std::filesystem::path plot_ssim;
  std::filesystem::path cloud1;
  std::filesystem::path cloud2;
  std::filesystem::path report_json;

  /// The files whose presence marks a stage as complete.
  std::vector<std::filesystem::path> outputs(std::string_view stage) const;
};

struct MetricRow {
  std::string pose_id;
  Vec3 position = Vec3::Zero();
  double psnr_db = 0.0;
  double ssim = 0.0;
  double predicted_probability = 0.0;
  int iteration = 1;
};

/// CSV: pose_id,x,y,z,psnr_db,ssim,predicted_probability,iteration
void write_metric_rows(const std::vector<MetricRow>& rows, const std::filesystem::path& path);
std::vector<MetricRow> read_metric_rows(const std::filesystem::path& path);

struct QuantileRow {
  std::string metric;  // "psnr_db" or "ssim"
  double q = 0.0;
  double iteration_1 = 0.0;
  double iteration_2 = 0.0;
  double delta() const { return iteration_2 - iteration_1; }
};

inline constexpr double kReportQuantiles[] = {0.5, 0.25, 0.1, 0.05};

struct CheckResult {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

struct MissionReport {
  std::vector<MetricRow> rows;
  std::vector<QuantileRow> quantiles;
  std::vector<std::pair<double, double>> cdf_psnr[2];
  std::vector<std::pair<double, double>> cdf_ssim[2];
  double evaluator_accuracy = 0.0;
  double evaluator_auc = 0.0;
  int waypoint_count = 0;
  double path_length = 0.0;
  int frames_first = 0;
  int frames_second = 0;
  std::map<std::string, double> stage_seconds;

  double quantile(std::string_view metric, double q, int iteration) const;
  /// One entry per configured acceptance threshold.
  std::vector<CheckResult> check(const CheckThresholds& thresholds) const;
};

/// Writes the canonical config into the output directory.
void prepare_output(const MissionConfig& cfg);

/// Runs one stage from the artifacts on disk. Throws MissingArtifactError
/// naming the first absent prerequisite and StageError wrapping any other
/// failure.
void run_stage(const MissionConfig& cfg, std::string_view stage);

/// Runs every stage in order. With `resume`, stages whose outputs already
/// exist are skipped.
MissionReport run_mission(const MissionConfig& cfg, bool resume = true);

/// Builds the report from the output directory (metrics, evaluator metrics,
/// plan, datasets, timings).
MissionReport load_report(const std::filesystem::path& output_dir);

/// Validates an external pose dataset and installs it as the first-pass
/// dataset of the mission in cfg.output_dir.
camera::CaptureDataset ingest_external_dataset(const MissionConfig& cfg, const std::filesystem::path& directory);

/// Held-out evaluation poses: seeded ring around the target, each pose at
/// least `min_separation` from every pose in `exclude`.
std::vector<camera::Pose> evaluation_poses(const EvaluationSpec& spec, const Vec3& target, std::uint64_t seed,
                                           const std::vector<Vec3>& exclude, double min_separation = 1e-3);

}  // namespace recap::mission
