#include "core/mission.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "core/errors.hpp"
#include "core/evaluator.hpp"
#include "core/field.hpp"
#include "core/field_train.hpp"
#include "core/labeling.hpp"
#include "core/metrics.hpp"
#include "core/planner.hpp"
#include "core/random.hpp"
#include "core/report.hpp"
#include "core/scene.hpp"
#include "core/text_format.hpp"

namespace recap::mission {

namespace fs = std::filesystem;
using nlohmann::json;

bool is_stage(std::string_view name) {
  return std::find(std::begin(kStages), std::end(kStages), name) != std::end(kStages);
}

Layout::Layout(fs::path r) : root(std::move(r)) {
  config = root / "config.json";
  timings = root / "timings.json";
  dataset1 = root / "iter1" / "dataset";
  field1 = root / "iter1" / "field.ckpt";
  loss1 = root / "iter1" / "loss.csv";
  evaluator_set = root / "evaluator_set";
  labels = evaluator_set / "labels.csv";
  evaluator = root / "evaluator" / "evaluator.ckpt";
  evaluator_history = root / "evaluator" / "history.csv";
  evaluator_metrics = root / "evaluator" / "metrics.json";
  grid = root / "plan" / "grid.csv";
  plan = root / "plan" / "plan.json";
  dataset2 = root / "iter2" / "dataset";
  field2 = root / "iter2" / "field.ckpt";
  loss2 = root / "iter2" / "loss.csv";
  metrics = root / "evaluation" / "metrics.csv";
  report_dir = root / "report";
  quantiles = report_dir / "quantiles.csv";
  cdf_psnr = report_dir / "cdf_psnr.csv";
  cdf_ssim = report_dir / "cdf_ssim.csv";
  plot_psnr = report_dir / "cdf_psnr.svg";
  plot_ssim = report_dir / "cdf_ssim.svg";
  cloud1 = report_dir / "field1.ply";
  cloud2 = report_dir / "field2.ply";
  report_json = report_dir / "report.json";
}

std::vector<fs::path> Layout::outputs(std::string_view stage) const {
  if (stage == "capture-1") return {dataset1 / camera::kManifestName};
  if (stage == "train-field-1") return {field1, loss1};
  if (stage == "build-evaluator-set") return {labels};
  if (stage == "train-evaluator") return {evaluator, evaluator_history, evaluator_metrics};
  if (stage == "plan") return {grid, plan};
  if (stage == "capture-2") return {dataset2 / camera::kManifestName};
  if (stage == "train-field-2") return {field2, loss2};
  if (stage == "evaluate") return {metrics};
  if (stage == "report")
    return {quantiles, cdf_psnr, cdf_ssim, plot_psnr, plot_ssim, cloud1, cloud2, report_json};
  throw ValidationError("unknown stage '" + std::string(stage) + "'", "stage");
}

void write_metric_rows(const std::vector<MetricRow>& rows, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "pose_id,x,y,z,psnr_db,ssim,predicted_probability,iteration\n";
  for (const auto& r : rows)
    out << r.pose_id << ',' << fmt_exact(r.position.x()) << ',' << fmt_exact(r.position.y()) << ','
        << fmt_exact(r.position.z()) << ',' << fmt_exact(r.psnr_db) << ',' << fmt_exact(r.ssim) << ','
        << fmt_exact(r.predicted_probability) << ',' << r.iteration << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<MetricRow> read_metric_rows(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError(path.string(), "missing metrics file '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  if (line != "pose_id,x,y,z,psnr_db,ssim,predicted_probability,iteration")
    throw LoadError(LoadFailure::kCorruptFile, "unexpected metrics header in '" + path.string() + "'");
  std::vector<MetricRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8) throw LoadError(LoadFailure::kCorruptFile, "bad metrics row: " + line);
    MetricRow r;
    r.pose_id = f[0];
    r.position = Vec3(parse_double(f[1]), parse_double(f[2]), parse_double(f[3]));
    r.psnr_db = parse_double(f[4]);
    r.ssim = parse_double(f[5]);
    r.predicted_probability = parse_double(f[6]);
    r.iteration = std::stoi(f[7]);
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

std::uint64_t stage_seed(const MissionConfig& cfg, std::string_view tag) {
  return derive_seed({cfg.seed, hash_string(tag)});
}

void require(const fs::path& path) {
  if (!fs::exists(path)) throw MissingArtifactError(path.string(), "missing artifact '" + path.string() + "'");
}

/// Writes through a sibling ".partial" path and renames, so a stage output
/// exists only once complete.
template <typename Fn>
void publish(const fs::path& path, Fn&& write) {
  fs::create_directories(path.parent_path());
  fs::path partial = path;
  partial += ".partial";
  write(partial);
  fs::rename(partial, path);
}

void publish_dataset(const camera::CaptureDataset& dataset, const fs::path& directory) {
  fs::path partial = directory;
  partial += ".partial";
  fs::remove_all(partial);
  camera::write_pose_dataset(dataset, partial);
  fs::remove_all(directory);
  fs::create_directories(directory.parent_path());
  fs::rename(partial, directory);
}

void write_text(const fs::path& path, const std::string& text) {
  publish(path, [&](const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw IoError("cannot write '" + p.string() + "'");
  });
}

scene::SceneSpec require_scene(const MissionConfig& cfg) {
  if (cfg.scene_path.empty())
    throw ValidationError("this stage needs the scene oracle but the config names no scene", "scene");
  return scene::load_scene(cfg.scene_path);
}

bool stage_needs_scene(const MissionConfig& cfg, std::string_view stage) {
  if (stage == "capture-1" || stage == "build-evaluator-set" || stage == "capture-2" || stage == "evaluate")
    return true;
  if (stage == "train-field-1" || stage == "train-field-2") return !cfg.field_bounds || !cfg.field_background;
  return false;
}

camera::Box field_bounds(const MissionConfig& cfg) {
  if (cfg.field_bounds) return *cfg.field_bounds;
  return require_scene(cfg).bounds;
}

Vec3 field_background(const MissionConfig& cfg) {
  if (cfg.field_background) return *cfg.field_background;
  return require_scene(cfg).background;
}

std::string grid_id(const char* prefix, const planner::GridIndex& idx) {
  return std::string(prefix) + "_" + std::to_string(idx[0]) + "_" + std::to_string(idx[1]) + "_" +
         std::to_string(idx[2]);
}

struct NamedPose {
  std::string id;
  camera::Pose pose;
};

/// Lattice poses plus jittered copies; jittered points that land on the
/// target are skipped.
std::vector<NamedPose> evaluator_set_poses(const MissionConfig& cfg) {
  const auto& spec = cfg.evaluator_dataset;
  const Vec3 target = cfg.trajectory.target;
  const auto lattice = planner::sample_candidate_poses({spec.bounds, spec.increment}, target);
  std::vector<NamedPose> out;
  for (const auto& c : lattice) out.push_back({grid_id("lat", c.index), c.pose});
  Rng rng(stage_seed(cfg, "evaluator-set-jitter"));
  std::normal_distribution<double> unit(0.0, 1.0);
  for (const auto& c : lattice)
    for (int copy = 0; copy < spec.jitter_copies; ++copy) {
      const Vec3 shift(unit(rng), unit(rng), unit(rng));
      const Vec3 position = c.pose.translation + spec.jitter_sigma * shift;
      if ((position - target).norm() < 1e-9) continue;
      const Vec3 forward = (target - position).normalized();
      const Vec3 up = std::abs(forward.z()) > 1.0 - 1e-9 ? Vec3::UnitY() : Vec3::UnitZ();
      out.push_back({grid_id("jit", c.index) + "_" + std::to_string(copy), camera::look_at(position, target, up)});
    }
  return out;
}

void write_loss_csv(const std::vector<double>& history, const fs::path& path) {
  std::ostringstream s;
  s << "block,mean_loss\n";
  for (std::size_t i = 0; i < history.size(); ++i) s << i << ',' << fmt_exact(history[i]) << '\n';
  write_text(path, s.str());
}

void stage_capture_1(const MissionConfig& cfg, const Layout& L) {
  const auto scene = require_scene(cfg);
  const auto poses = scene::rectangular_trajectory(cfg.trajectory.rectangle, cfg.trajectory.n_frames,
                                                   cfg.trajectory.target);
  const std::uint64_t seed = stage_seed(cfg, "capture-1");
  camera::CaptureDataset dataset;
  dataset.intrinsics = cfg.camera;
  char id[32];
  for (std::size_t i = 0; i < poses.size(); ++i) {
    std::snprintf(id, sizeof id, "traj_%03zu", i);
    dataset.frames.push_back(
        scene::capture(scene, poses[i], cfg.camera, cfg.degradation, seed, id, cfg.oracle_samples));
  }
  publish_dataset(dataset, L.dataset1);
}

void stage_train_field(const MissionConfig& cfg, const fs::path& dataset_dir, const nerf::TrainConfig& base,
                       const fs::path& field_path, const fs::path& loss_path) {
  require(dataset_dir / camera::kManifestName);
  const auto dataset = camera::read_pose_dataset(dataset_dir);
  const auto initial = nerf::RadianceField::initialized(cfg.field, field_bounds(cfg), field_background(cfg),
                                                        stage_seed(cfg, "field-init"));
  nerf::TrainConfig tc = base;
  tc.seed = stage_seed(cfg, "field-train");
  const auto result = nerf::train(dataset, initial, tc);
  write_loss_csv(result.loss_history, loss_path);
  publish(field_path, [&](const fs::path& p) { nerf::save_field(result.field, p); });
}

void stage_build_evaluator_set(const MissionConfig& cfg, const Layout& L) {
  require(L.field1);
  const auto scene = require_scene(cfg);
  const auto field = nerf::load_field(L.field1);
  const auto poses = evaluator_set_poses(cfg);
  const std::uint64_t seed = stage_seed(cfg, "build-evaluator-set");

  std::vector<evaluator::RenderInput> renders;
  std::vector<Image> truth;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    Image render = nerf::render_view(field, poses[i].pose, cfg.camera, cfg.evaluator_dataset.render_samples,
                                     derive_seed({seed, i}));
    renders.push_back({poses[i].id, quantize8(render)});
    truth.push_back(scene::render_ground_truth(scene, poses[i].pose, cfg.camera, cfg.oracle_samples));
  }
  const auto set = evaluator::build_training_set(renders, truth, derive_seed({seed, 0x62616cULL}),
                                                 cfg.evaluator_dataset.thresholds);

  const fs::path render_dir = L.evaluator_set / "renders";
  fs::remove(L.labels);
  fs::remove_all(render_dir);
  fs::create_directories(render_dir);
  std::vector<std::string> paths;
  for (const auto& item : set.items) {
    paths.push_back("renders/" + item.pose_id + ".png");
    write_png(item.image, L.evaluator_set / paths.back());
  }
  publish(L.labels, [&](const fs::path& p) { evaluator::write_label_manifest(set, paths, p); });
}

struct LoadedSet {
  std::vector<Image> images;
  std::vector<int> labels;
};

LoadedSet load_labeled_set(const Layout& L, const evaluator::EvaluatorSpec& spec) {
  LoadedSet set;
  for (const auto& row : evaluator::read_label_manifest(L.labels)) {
    set.images.push_back(evaluator::prepare_input(spec, read_png(L.evaluator_set / row.image_path)));
    set.labels.push_back(row.label);
  }
  return set;
}

void stage_train_evaluator(const MissionConfig& cfg, const Layout& L) {
  require(L.labels);
  const auto& spec = cfg.evaluator.spec;
  const auto all = load_labeled_set(L, spec);

  // Stratified split so both classes appear on each side.
  Rng rng(stage_seed(cfg, "evaluator-split"));
  std::vector<char> is_test(all.labels.size(), 0);
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < all.labels.size(); ++i)
      if (all.labels[i] == cls) members.push_back(i);
    std::shuffle(members.begin(), members.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::lround(cfg.evaluator.test_fraction * members.size()));
    for (std::size_t k = 0; k < n_test && k < members.size(); ++k) is_test[members[k]] = 1;
  }
  LoadedSet train, test;
  for (std::size_t i = 0; i < all.labels.size(); ++i) {
    auto& dst = is_test[i] ? test : train;
    dst.images.push_back(all.images[i]);
    dst.labels.push_back(all.labels[i]);
  }

  evaluator::TrainOptions opts = cfg.evaluator.train;
  opts.seed = stage_seed(cfg, "evaluator-train");
  const auto initial = evaluator::evaluator_init(spec, stage_seed(cfg, "evaluator-init"));
  const auto result = evaluator::evaluator_train(initial, train.images, train.labels, opts);
  const auto scores = evaluator::evaluator_metrics(result.model, test.images, test.labels);

  std::ostringstream hist;
  hist << "epoch,loss,accuracy\n";
  for (std::size_t e = 0; e < result.history.size(); ++e)
    hist << e + 1 << ',' << fmt_exact(result.history[e].loss) << ',' << fmt_exact(result.history[e].accuracy)
         << '\n';
  write_text(L.evaluator_history, hist.str());
  const json m = {{"accuracy", scores.accuracy},
                  {"roc_auc", scores.roc_auc},
                  {"train_count", train.labels.size()},
                  {"test_count", test.labels.size()}};
  write_text(L.evaluator_metrics, m.dump(2) + "\n");
  publish(L.evaluator, [&](const fs::path& p) { evaluator::save_evaluator(result.model, p); });
}

planner::GridSpec planner_grid(const MissionConfig& cfg) { return {cfg.planner.bounds, cfg.planner.increment}; }

void stage_plan(const MissionConfig& cfg, const Layout& L) {
  require(L.dataset1 / camera::kManifestName);
  require(L.field1);
  require(L.evaluator);
  const auto dataset = camera::read_pose_dataset(L.dataset1);
  if (dataset.frames.empty()) throw ValidationError("first-pass dataset has no frames", "dataset");
  const auto field = nerf::load_field(L.field1);
  const auto model = evaluator::load_evaluator(L.evaluator);
  const auto grid_spec = planner_grid(cfg);
  const auto candidates = planner::sample_candidate_poses(grid_spec, cfg.trajectory.target);
  if (candidates.empty()) throw ValidationError("planner grid has no candidate poses", "planner.bounds");
  const auto grid = planner::evaluate_field(field, model, candidates, grid_spec,
                                            {dataset.intrinsics, cfg.planner.render_samples, stage_seed(cfg, "plan")});
  const auto selected = planner::select_low_quality(grid, cfg.planner.tau);
  const auto kept = planner::filter_abrupt_changes(grid, selected, cfg.planner.jump_threshold);
  std::vector<planner::Waypoint> waypoints;
  for (std::size_t k : kept) waypoints.push_back({grid.entries[k].index, grid.entries[k].pose});
  const auto plan = planner::plan_path(dataset.frames.front().pose, waypoints);
  publish(L.grid, [&](const fs::path& p) { planner::write_grid_csv(grid, selected, kept, p); });
  publish(L.plan, [&](const fs::path& p) { planner::write_plan(plan, p); });
}

void stage_capture_2(const MissionConfig& cfg, const Layout& L) {
  require(L.dataset1 / camera::kManifestName);
  require(L.plan);
  auto dataset = camera::read_pose_dataset(L.dataset1);
  const auto plan = planner::read_plan(L.plan);
  if (!plan.waypoints.empty()) {
    const auto scene = require_scene(cfg);
    const scene::DegradationSpec deg = cfg.recapture_degradation.value_or(scene::DegradationSpec{});
    const std::uint64_t seed = stage_seed(cfg, "capture-2");
    for (const auto& wp : plan.waypoints)
      dataset.frames.push_back(
          scene::capture(scene, wp.pose, dataset.intrinsics, deg, seed, grid_id("wp", wp.index), cfg.oracle_samples));
  }
  publish_dataset(dataset, L.dataset2);
}

std::vector<Vec3> used_positions(const MissionConfig& cfg, const Layout& L) {
  std::vector<Vec3> out;
  for (const auto& f : camera::read_pose_dataset(L.dataset2).frames) out.push_back(f.pose.translation);
  for (const auto& p : evaluator_set_poses(cfg)) out.push_back(p.pose.translation);
  for (const auto& c : planner::sample_candidate_poses(planner_grid(cfg), cfg.trajectory.target))
    out.push_back(c.pose.translation);
  return out;
}

void stage_evaluate(const MissionConfig& cfg, const Layout& L) {
  for (const auto& p : {L.field1, L.field2, L.evaluator, L.dataset2 / camera::kManifestName}) require(p);
  const auto scene = require_scene(cfg);
  const nerf::RadianceField fields[2] = {nerf::load_field(L.field1), nerf::load_field(L.field2)};
  const auto model = evaluator::load_evaluator(L.evaluator);
  const std::uint64_t seed = stage_seed(cfg, "evaluate");
  const auto poses =
      evaluation_poses(cfg.evaluation, cfg.trajectory.target, stage_seed(cfg, "evaluation-poses"), used_positions(cfg, L));

  std::vector<MetricRow> rows[2];
  char id[32];
  for (std::size_t i = 0; i < poses.size(); ++i) {
    std::snprintf(id, sizeof id, "eval_%03zu", i);
    const Image truth = scene::render_ground_truth(scene, poses[i], cfg.camera, cfg.oracle_samples);
    for (int it = 0; it < 2; ++it) {
      const Image render =
          nerf::render_view(fields[it], poses[i], cfg.camera, cfg.evaluation.render_samples, derive_seed({seed, i}));
      MetricRow r;
      r.pose_id = id;
      r.position = poses[i].translation;
      r.psnr_db = metrics::psnr(render, truth);
      r.ssim = metrics::ssim(render, truth);
      r.predicted_probability =
          evaluator::evaluator_forward(model, evaluator::prepare_input(model.spec(), render));
      r.iteration = it + 1;
      rows[it].push_back(std::move(r));
    }
  }
  std::vector<MetricRow> all = rows[0];
  all.insert(all.end(), rows[1].begin(), rows[1].end());
  publish(L.metrics, [&](const fs::path& p) { write_metric_rows(all, p); });
}

void stage_report(const MissionConfig& cfg, const Layout& L) {
  for (const auto& p : {L.metrics, L.evaluator_metrics, L.plan, L.field1, L.field2}) require(p);
  const auto report = load_report(L.root);
  fs::create_directories(L.report_dir);
  publish(L.quantiles, [&](const fs::path& p) { write_quantiles(report.quantiles, p); });
  publish(L.cdf_psnr, [&](const fs::path& p) { write_cdf(report.cdf_psnr, p); });
  publish(L.cdf_ssim, [&](const fs::path& p) { write_cdf(report.cdf_ssim, p); });
  write_text(L.plot_psnr, cdf_svg(report.cdf_psnr, "PSNR CDF over held-out poses", "PSNR (dB)"));
  write_text(L.plot_ssim, cdf_svg(report.cdf_ssim, "SSIM CDF over held-out poses", "SSIM"));
  const fs::path fields[2] = {L.field1, L.field2};
  const fs::path clouds[2] = {L.cloud1, L.cloud2};
  for (int i = 0; i < 2; ++i) {
    const auto field = nerf::load_field(fields[i]);
    const auto cloud = nerf::extract_point_cloud(field, field.bounds(), cfg.report.point_cloud_resolution,
                                                 cfg.report.density_threshold);
    publish(clouds[i], [&](const fs::path& p) { nerf::write_ply(cloud, p); });
  }
  publish(L.report_json, [&](const fs::path& p) { write_report_json(report, p); });
}

void record_timing(const Layout& L, std::string_view stage, double seconds) {
  json t = json::object();
  if (std::ifstream in(L.timings); in) {
    try {
      t = json::parse(in);
    } catch (const json::exception&) {
      t = json::object();
    }
  }
  t[std::string(stage)] = seconds;
  write_text(L.timings, t.dump(2) + "\n");
}

void dispatch(const MissionConfig& cfg, const Layout& L, std::string_view stage) {
  if (stage == "capture-1") return stage_capture_1(cfg, L);
  if (stage == "train-field-1") return stage_train_field(cfg, L.dataset1, cfg.train_first, L.field1, L.loss1);
  if (stage == "build-evaluator-set") return stage_build_evaluator_set(cfg, L);
  if (stage == "train-evaluator") return stage_train_evaluator(cfg, L);
  if (stage == "plan") return stage_plan(cfg, L);
  if (stage == "capture-2") return stage_capture_2(cfg, L);
  if (stage == "train-field-2") return stage_train_field(cfg, L.dataset2, cfg.train_second, L.field2, L.loss2);
  if (stage == "evaluate") return stage_evaluate(cfg, L);
  if (stage == "report") return stage_report(cfg, L);
}

}  // namespace

void prepare_output(const MissionConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  write_text(Layout(cfg.output_dir).config, config_to_json(cfg).dump(2) + "\n");
}

void run_stage(const MissionConfig& cfg, std::string_view stage) {
  if (!is_stage(stage)) throw ValidationError("unknown stage '" + std::string(stage) + "'", "stage");
  if (cfg.scene_path.empty() && stage_needs_scene(cfg, stage))
    throw ValidationError("stage '" + std::string(stage) + "' needs the scene oracle but the config names no scene",
                          "scene");
  const Layout L(cfg.output_dir);
  fs::create_directories(L.root);
  const auto start = std::chrono::steady_clock::now();
  try {
    dispatch(cfg, L, stage);
  } catch (const MissingArtifactError&) {
    throw;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(std::string(stage), e.what());
  }
  record_timing(L, stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
}

MissionReport run_mission(const MissionConfig& cfg, bool resume) {
  prepare_output(cfg);
  const Layout L(cfg.output_dir);
  for (std::string_view stage : kStages) {
    if (resume) {
      const auto outs = L.outputs(stage);
      if (std::all_of(outs.begin(), outs.end(), [](const fs::path& p) { return fs::exists(p); })) continue;
    }
    run_stage(cfg, stage);
  }
  return load_report(L.root);
}

std::vector<camera::Pose> evaluation_poses(const EvaluationSpec& spec, const Vec3& target, std::uint64_t seed,
                                           const std::vector<Vec3>& exclude, double min_separation) {
  Rng rng(seed);
  std::vector<camera::Pose> poses;
  long attempts = 0;
  const long max_attempts = 1000L * spec.count + 1000;
  while (static_cast<int>(poses.size()) < spec.count) {
    if (++attempts > max_attempts)
      throw ValidationError("cannot place held-out poses away from the training poses", "evaluation");
    const double azimuth = 2.0 * std::numbers::pi * uniform01(rng);
    const double radius = spec.radius_min + (spec.radius_max - spec.radius_min) * uniform01(rng);
    const double altitude = spec.altitude_min + (spec.altitude_max - spec.altitude_min) * uniform01(rng);
    const Vec3 position(target.x() + radius * std::cos(azimuth), target.y() + radius * std::sin(azimuth), altitude);
    const bool clash = std::any_of(exclude.begin(), exclude.end(),
                                   [&](const Vec3& p) { return (p - position).norm() < min_separation; });
    if (clash) continue;
    poses.push_back(camera::look_at(position, target, Vec3::UnitZ()));
  }
  return poses;
}

camera::CaptureDataset ingest_external_dataset(const MissionConfig& cfg, const fs::path& directory) {
  auto dataset = camera::read_pose_dataset(directory);
  prepare_output(cfg);
  publish_dataset(dataset, Layout(cfg.output_dir).dataset1);
  return dataset;
}

double MissionReport::quantile(std::string_view metric, double q, int iteration) const {
  for (const auto& r : quantiles)
    if (r.metric == metric && r.q == q) return iteration == 1 ? r.iteration_1 : r.iteration_2;
  throw ValidationError("no quantile " + std::string(metric) + "@" + fmt_exact(q), "quantile");
}

std::vector<CheckResult> MissionReport::check(const CheckThresholds& t) const {
  const auto gain = [&](double q) { return quantile("psnr_db", q, 2) - quantile("psnr_db", q, 1); };
  const double drop = -gain(0.5);
  return {
      {"psnr_gain_q10", gain(0.1), t.min_gain_q10, gain(0.1) >= t.min_gain_q10},
      {"psnr_gain_q05", gain(0.05), t.min_gain_q05, gain(0.05) >= t.min_gain_q05},
      {"median_psnr_drop", drop, t.max_median_drop, drop <= t.max_median_drop},
      {"evaluator_accuracy", evaluator_accuracy, t.min_accuracy, evaluator_accuracy >= t.min_accuracy},
      {"evaluator_auc", evaluator_auc, t.min_auc, evaluator_auc >= t.min_auc},
  };
}

MissionReport load_report(const fs::path& output_dir) {
  const Layout L(output_dir);
  MissionReport report;
  report.rows = read_metric_rows(L.metrics);
  report.quantiles = compute_quantiles(report.rows);
  for (int it = 0; it < 2; ++it) {
    std::vector<double> psnr, ssim;
    for (const auto& r : report.rows)
      if (r.iteration == it + 1) {
        psnr.push_back(r.psnr_db);
        ssim.push_back(r.ssim);
      }
    report.cdf_psnr[it] = metrics::cdf(psnr);
    report.cdf_ssim[it] = metrics::cdf(ssim);
  }

  require(L.evaluator_metrics);
  {
    std::ifstream in(L.evaluator_metrics);
    const json m = json::parse(in);
    report.evaluator_accuracy = m.at("accuracy").get<double>();
    report.evaluator_auc = m.at("roc_auc").get<double>();
  }
  require(L.plan);
  const auto plan = planner::read_plan(L.plan);
  report.waypoint_count = static_cast<int>(plan.waypoints.size());
  report.path_length = plan.path_length;
  for (auto [dir, count] : {std::pair{L.dataset1, &report.frames_first}, std::pair{L.dataset2, &report.frames_second}}) {
    std::ifstream in(dir / camera::kManifestName);
    if (!in) continue;
    *count = static_cast<int>(json::parse(in).at("frames").size());
  }
  if (std::ifstream in(L.timings); in) {
    const json t = json::parse(in);
    for (const auto& [k, v] : t.items()) report.stage_seconds[k] = v.get<double>();
  }
  return report;
}

}  // namespace recap::mission
