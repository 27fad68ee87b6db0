#include "core/mission_config.hpp"

#include <fstream>

#include "core/errors.hpp"
#include "core/json_util.hpp"

namespace recap::mission {

using nlohmann::json;
using jsonutil::get_or;
using jsonutil::require_keys;

namespace {

scene::DegradationSpec degradation_from_json(const json& j) {
  require_keys(j, "degradation", {"blur_sigma", "noise_sigma", "pose_jitter", "region"});
  scene::DegradationSpec d;
  d.blur_sigma = get_or(j, "blur_sigma", 0.0);
  d.noise_sigma = get_or(j, "noise_sigma", 0.0);
  if (j.contains("pose_jitter")) {
    const auto& pj = j.at("pose_jitter");
    require_keys(pj, "pose_jitter", {"rotation", "translation"});
    d.pose_jitter.rotation = get_or(pj, "rotation", 0.0);
    d.pose_jitter.translation = get_or(pj, "translation", 0.0);
  }
  if (j.contains("region") && !j.at("region").is_null()) d.region = jsonutil::box(j.at("region"), "region");
  scene::validate(d);
  return d;
}

json degradation_to_json(const scene::DegradationSpec& d) {
  json j = {{"blur_sigma", d.blur_sigma},
            {"noise_sigma", d.noise_sigma},
            {"pose_jitter", {{"rotation", d.pose_jitter.rotation}, {"translation", d.pose_jitter.translation}}}};
  j["region"] = d.region ? jsonutil::to_json(*d.region) : json(nullptr);
  return j;
}

nerf::TrainConfig train_from_json(const json& j, const char* where) {
  require_keys(j, where,
               {"iterations", "rays_per_batch", "samples_per_ray", "near", "far", "learning_rate", "adam_betas"});
  nerf::TrainConfig t;
  t.iterations = get_or(j, "iterations", t.iterations);
  t.rays_per_batch = get_or(j, "rays_per_batch", t.rays_per_batch);
  t.samples_per_ray = get_or(j, "samples_per_ray", t.samples_per_ray);
  t.near = get_or(j, "near", t.near);
  t.far = get_or(j, "far", t.far);
  t.learning_rate = get_or(j, "learning_rate", t.learning_rate);
  if (j.contains("adam_betas")) {
    const auto b = j.at("adam_betas").get<std::vector<double>>();
    if (b.size() != 2) throw ValidationError("adam_betas must have two entries", "adam_betas");
    t.beta1 = b[0];
    t.beta2 = b[1];
  }
  nerf::validate(t);
  return t;
}

json train_to_json(const nerf::TrainConfig& t) {
  return {{"iterations", t.iterations},       {"rays_per_batch", t.rays_per_batch},
          {"samples_per_ray", t.samples_per_ray}, {"near", t.near},
          {"far", t.far},                     {"learning_rate", t.learning_rate},
          {"adam_betas", {t.beta1, t.beta2}}};
}

void check_range(bool ok, const std::string& message, const std::string& field) {
  if (!ok) throw ValidationError(message, field);
}

}  // namespace

MissionConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  require_keys(j, "config",
               {"scene", "output_dir", "seed", "camera", "oracle_samples", "trajectory", "degradation",
                "recapture_degradation", "field", "train_first", "train_second", "evaluator", "evaluator_dataset",
                "planner", "evaluation", "report", "check"});
  MissionConfig cfg;
  try {
    if (j.contains("scene") && !j.at("scene").is_null()) {
      std::filesystem::path scene = j.at("scene").get<std::string>();
      cfg.scene_path = scene.is_absolute() ? scene : base_dir / scene;
    }
    cfg.output_dir = get_or<std::string>(j, "output_dir", cfg.output_dir.string());
    cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);

    if (j.contains("camera")) {
      const auto& c = j.at("camera");
      require_keys(c, "camera", {"width", "height", "fov_x"});
      cfg.camera = camera::make_intrinsics(get_or(c, "width", 64), get_or(c, "height", 64),
                                           get_or(c, "fov_x", cfg.camera.fov_x()));
    }
    cfg.oracle_samples = get_or(j, "oracle_samples", cfg.oracle_samples);
    check_range(cfg.oracle_samples >= 2, "oracle_samples must be >= 2", "oracle_samples");

    if (j.contains("trajectory")) {
      const auto& t = j.at("trajectory");
      require_keys(t, "trajectory", {"center", "half_x", "half_y", "altitude", "n_frames", "target"});
      auto& r = cfg.trajectory.rectangle;
      if (t.contains("center")) r.center = jsonutil::vec3(t.at("center"), "center");
      r.half_x = get_or(t, "half_x", r.half_x);
      r.half_y = get_or(t, "half_y", r.half_y);
      r.altitude = get_or(t, "altitude", r.altitude);
      cfg.trajectory.n_frames = get_or(t, "n_frames", cfg.trajectory.n_frames);
      if (t.contains("target")) cfg.trajectory.target = jsonutil::vec3(t.at("target"), "target");
      check_range(cfg.trajectory.n_frames >= 4, "trajectory.n_frames must be >= 4", "n_frames");
      check_range(r.half_x > 0 && r.half_y > 0, "trajectory half extents must be > 0", "half_x");
    }
    if (j.contains("degradation")) cfg.degradation = degradation_from_json(j.at("degradation"));
    if (j.contains("recapture_degradation") && !j.at("recapture_degradation").is_null())
      cfg.recapture_degradation = degradation_from_json(j.at("recapture_degradation"));

    if (j.contains("field")) {
      const auto& f = j.at("field");
      require_keys(f, "field", {"encoding_levels", "hidden_width", "hidden_layers", "bounds", "background"});
      cfg.field.encoding_levels = get_or(f, "encoding_levels", cfg.field.encoding_levels);
      cfg.field.hidden_width = get_or(f, "hidden_width", cfg.field.hidden_width);
      cfg.field.hidden_layers = get_or(f, "hidden_layers", cfg.field.hidden_layers);
      if (f.contains("bounds")) cfg.field_bounds = jsonutil::box(f.at("bounds"), "field.bounds");
      if (f.contains("background")) cfg.field_background = jsonutil::vec3(f.at("background"), "field.background");
      check_range(cfg.field.encoding_levels >= 0 && cfg.field.hidden_width >= 1 && cfg.field.hidden_layers >= 1,
                  "field sizes out of range", "field");
    }
    if (j.contains("train_first")) cfg.train_first = train_from_json(j.at("train_first"), "train_first");
    if (j.contains("train_second")) cfg.train_second = train_from_json(j.at("train_second"), "train_second");

    if (j.contains("evaluator")) {
      const auto& e = j.at("evaluator");
      require_keys(e, "evaluator",
                   {"input_height", "input_width", "fc1", "fc2", "dropout", "epochs", "learning_rate", "batch_size",
                    "test_fraction"});
      auto& s = cfg.evaluator.spec;
      s.height = get_or(e, "input_height", s.height);
      s.width = get_or(e, "input_width", s.width);
      s.fc1 = get_or(e, "fc1", s.fc1);
      s.fc2 = get_or(e, "fc2", s.fc2);
      s.dropout = get_or(e, "dropout", s.dropout);
      auto& t = cfg.evaluator.train;
      t.epochs = get_or(e, "epochs", t.epochs);
      t.learning_rate = get_or(e, "learning_rate", t.learning_rate);
      t.batch_size = get_or(e, "batch_size", t.batch_size);
      cfg.evaluator.test_fraction = get_or(e, "test_fraction", cfg.evaluator.test_fraction);
      evaluator::EvaluatorModel probe(s);  // validates the input shape
      check_range(t.epochs >= 0 && t.batch_size >= 1 && t.learning_rate > 0, "evaluator training settings out of range",
                  "evaluator");
      check_range(cfg.evaluator.test_fraction > 0 && cfg.evaluator.test_fraction < 1,
                  "test_fraction must lie in (0,1)", "test_fraction");
    }
    if (j.contains("evaluator_dataset")) {
      const auto& d = j.at("evaluator_dataset");
      require_keys(d, "evaluator_dataset",
                   {"bounds", "increment", "jitter_copies", "jitter_sigma", "render_samples", "min_psnr_db",
                    "min_ssim"});
      auto& s = cfg.evaluator_dataset;
      if (d.contains("bounds")) s.bounds = jsonutil::box(d.at("bounds"), "evaluator_dataset.bounds");
      s.increment = get_or(d, "increment", s.increment);
      s.jitter_copies = get_or(d, "jitter_copies", s.jitter_copies);
      s.jitter_sigma = get_or(d, "jitter_sigma", s.jitter_sigma);
      s.render_samples = get_or(d, "render_samples", s.render_samples);
      s.thresholds.min_psnr_db = get_or(d, "min_psnr_db", s.thresholds.min_psnr_db);
      s.thresholds.min_ssim = get_or(d, "min_ssim", s.thresholds.min_ssim);
      check_range(s.increment > 0 && s.jitter_copies >= 0 && s.jitter_sigma >= 0 && s.render_samples >= 1,
                  "evaluator_dataset settings out of range", "evaluator_dataset");
    }
    if (j.contains("planner")) {
      const auto& p = j.at("planner");
      require_keys(p, "planner", {"bounds", "increment", "tau", "jump_threshold", "render_samples"});
      auto& s = cfg.planner;
      if (p.contains("bounds")) s.bounds = jsonutil::box(p.at("bounds"), "planner.bounds");
      s.increment = get_or(p, "increment", s.increment);
      s.tau = get_or(p, "tau", s.tau);
      s.jump_threshold = get_or(p, "jump_threshold", s.jump_threshold);
      s.render_samples = get_or(p, "render_samples", s.render_samples);
      check_range(s.tau >= 0 && s.tau <= 1, "planner.tau must lie in [0,1]", "tau");
      check_range(s.increment > 0 && s.jump_threshold >= 0 && s.render_samples >= 1, "planner settings out of range",
                  "planner");
    }
    if (j.contains("evaluation")) {
      const auto& e = j.at("evaluation");
      require_keys(e, "evaluation",
                   {"count", "radius_min", "radius_max", "altitude_min", "altitude_max", "render_samples"});
      auto& s = cfg.evaluation;
      s.count = get_or(e, "count", s.count);
      s.radius_min = get_or(e, "radius_min", s.radius_min);
      s.radius_max = get_or(e, "radius_max", s.radius_max);
      s.altitude_min = get_or(e, "altitude_min", s.altitude_min);
      s.altitude_max = get_or(e, "altitude_max", s.altitude_max);
      s.render_samples = get_or(e, "render_samples", s.render_samples);
      check_range(s.count >= 1 && s.radius_min > 0 && s.radius_max >= s.radius_min &&
                      s.altitude_max >= s.altitude_min && s.render_samples >= 1,
                  "evaluation settings out of range", "evaluation");
    }
    if (j.contains("report")) {
      const auto& r = j.at("report");
      require_keys(r, "report", {"point_cloud_resolution", "density_threshold"});
      cfg.report.point_cloud_resolution = get_or(r, "point_cloud_resolution", cfg.report.point_cloud_resolution);
      cfg.report.density_threshold = get_or(r, "density_threshold", cfg.report.density_threshold);
      check_range(cfg.report.point_cloud_resolution >= 2, "report.point_cloud_resolution must be >= 2",
                  "point_cloud_resolution");
    }
    if (j.contains("check")) {
      const auto& c = j.at("check");
      require_keys(c, "check", {"min_gain_q10", "min_gain_q05", "max_median_drop", "min_accuracy", "min_auc"});
      auto& s = cfg.check;
      s.min_gain_q10 = get_or(c, "min_gain_q10", s.min_gain_q10);
      s.min_gain_q05 = get_or(c, "min_gain_q05", s.min_gain_q05);
      s.max_median_drop = get_or(c, "max_median_drop", s.max_median_drop);
      s.min_accuracy = get_or(c, "min_accuracy", s.min_accuracy);
      s.min_auc = get_or(c, "min_auc", s.min_auc);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed config: ") + e.what(), "config");
  }
  return cfg;
}

MissionConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config '" + path.string() + "'", "config");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("config '" + path.string() + "' is not valid JSON: " + e.what(), "config");
  }
  MissionConfig cfg = config_from_json(j, path.parent_path());
  if (!cfg.scene_path.empty() && !std::filesystem::exists(cfg.scene_path))
    throw ValidationError("scene file '" + cfg.scene_path.string() + "' does not exist", "scene");
  return cfg;
}

json config_to_json(const MissionConfig& cfg) {
  json j;
  j["scene"] = cfg.scene_path.empty() ? json(nullptr) : json(cfg.scene_path.string());
  j["output_dir"] = cfg.output_dir.string();
  j["seed"] = cfg.seed;
  j["camera"] = {{"width", cfg.camera.width()}, {"height", cfg.camera.height()}, {"fov_x", cfg.camera.fov_x()}};
  j["oracle_samples"] = cfg.oracle_samples;
  const auto& r = cfg.trajectory.rectangle;
  j["trajectory"] = {{"center", jsonutil::to_json(r.center)}, {"half_x", r.half_x},
                     {"half_y", r.half_y},                    {"altitude", r.altitude},
                     {"n_frames", cfg.trajectory.n_frames},   {"target", jsonutil::to_json(cfg.trajectory.target)}};
  j["degradation"] = degradation_to_json(cfg.degradation);
  j["recapture_degradation"] = cfg.recapture_degradation ? degradation_to_json(*cfg.recapture_degradation) : json(nullptr);
  j["field"] = {{"encoding_levels", cfg.field.encoding_levels},
                {"hidden_width", cfg.field.hidden_width},
                {"hidden_layers", cfg.field.hidden_layers}};
  if (cfg.field_bounds) j["field"]["bounds"] = jsonutil::to_json(*cfg.field_bounds);
  if (cfg.field_background) j["field"]["background"] = jsonutil::to_json(*cfg.field_background);
  j["train_first"] = train_to_json(cfg.train_first);
  j["train_second"] = train_to_json(cfg.train_second);
  const auto& e = cfg.evaluator;
  j["evaluator"] = {{"input_height", e.spec.height}, {"input_width", e.spec.width},
                    {"fc1", e.spec.fc1},             {"fc2", e.spec.fc2},
                    {"dropout", e.spec.dropout},     {"epochs", e.train.epochs},
                    {"learning_rate", e.train.learning_rate}, {"batch_size", e.train.batch_size},
                    {"test_fraction", e.test_fraction}};
  const auto& d = cfg.evaluator_dataset;
  j["evaluator_dataset"] = {{"bounds", jsonutil::to_json(d.bounds)}, {"increment", d.increment},
                            {"jitter_copies", d.jitter_copies},      {"jitter_sigma", d.jitter_sigma},
                            {"render_samples", d.render_samples},    {"min_psnr_db", d.thresholds.min_psnr_db},
                            {"min_ssim", d.thresholds.min_ssim}};
  const auto& p = cfg.planner;
  j["planner"] = {{"bounds", jsonutil::to_json(p.bounds)}, {"increment", p.increment}, {"tau", p.tau},
                  {"jump_threshold", p.jump_threshold},    {"render_samples", p.render_samples}};
  const auto& v = cfg.evaluation;
  j["evaluation"] = {{"count", v.count},           {"radius_min", v.radius_min},
                     {"radius_max", v.radius_max}, {"altitude_min", v.altitude_min},
                     {"altitude_max", v.altitude_max}, {"render_samples", v.render_samples}};
  j["report"] = {{"point_cloud_resolution", cfg.report.point_cloud_resolution},
                 {"density_threshold", cfg.report.density_threshold}};
  const auto& c = cfg.check;
  j["check"] = {{"min_gain_q10", c.min_gain_q10}, {"min_gain_q05", c.min_gain_q05},
                {"max_median_drop", c.max_median_drop}, {"min_accuracy", c.min_accuracy},
                {"min_auc", c.min_auc}};
  return j;
}

}  // namespace recap::mission
