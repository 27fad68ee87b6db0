// Command-line front end over the C API.

#include <cmath>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "recap/recap.h"

namespace {

enum Exit { kOk = 0, kConfig = 2, kStage = 3, kCheck = 4 };

int exit_code(recap_status s) {
  switch (s) {
    case RECAP_OK: return kOk;
    case RECAP_ERR_INVALID_ARGUMENT:
    case RECAP_ERR_VALIDATION:
    case RECAP_ERR_GEOMETRY:
    case RECAP_ERR_LOAD: return kConfig;
    case RECAP_ERR_CHECK_FAILED: return kCheck;
    default: return kStage;
  }
}

int report_failure(recap_status s) {
  std::fprintf(stderr, "error (%s): %s\n", recap_status_name(s), recap_last_error());
  return exit_code(s);
}

struct Globals {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

struct MissionDeleter {
  void operator()(recap_mission* m) const { recap_mission_free(m); }
};
using MissionPtr = std::unique_ptr<recap_mission, MissionDeleter>;

recap_status open_mission(const Globals& g, MissionPtr& out) {
  if (g.config.empty()) {
    std::fprintf(stderr, "error: --config is required\n");
    return RECAP_ERR_INVALID_ARGUMENT;
  }
  recap_mission* m = nullptr;
  if (auto s = recap_mission_load(g.config.c_str(), &m); s != RECAP_OK) return s;
  out.reset(m);
  if (!g.out.empty())
    if (auto s = recap_mission_set_output(m, g.out.c_str()); s != RECAP_OK) return s;
  if (g.seed)
    if (auto s = recap_mission_set_seed(m, *g.seed); s != RECAP_OK) return s;
  return RECAP_OK;
}

void print_summary(const nlohmann::json& j) {
  std::printf("%-8s %5s %14s %14s %10s\n", "metric", "q", "iteration 1", "iteration 2", "delta");
  for (const auto& q : j.at("quantiles"))
    std::printf("%-8s %5.2f %14.4f %14.4f %+10.4f\n", q.at("metric").get<std::string>().c_str(),
                q.at("q").get<double>(), q.at("iteration_1").get<double>(), q.at("iteration_2").get<double>(),
                q.at("delta").get<double>());
  const auto& e = j.at("evaluator");
  std::printf("evaluator: accuracy %.4f, ROC AUC %.4f\n", e.at("accuracy").get<double>(),
              e.at("roc_auc").get<double>());
  const auto& p = j.at("plan");
  std::printf("plan: %d waypoints, path length %.3f m\n", p.at("waypoint_count").get<int>(),
              p.at("path_length").get<double>());
  const auto& f = j.at("frames");
  std::printf("frames: %d -> %d\n", f.at("iteration_1").get<int>(), f.at("iteration_2").get<int>());
  if (j.contains("checks"))
    for (const auto& c : j.at("checks"))
      std::printf("%s %s: %.4f (threshold %.4f)\n", c.at("passed").get<bool>() ? "PASS" : "FAIL",
                  c.at("name").get<std::string>().c_str(), c.at("value").get<double>(),
                  c.at("threshold").get<double>());
}

int cmd_mission_run(const Globals& g, bool fresh) {
  MissionPtr m;
  if (auto s = open_mission(g, m); s != RECAP_OK) return report_failure(s);
  if (auto s = recap_mission_run(m.get(), fresh ? 0 : 1); s != RECAP_OK) return report_failure(s);
  char* summary = nullptr;
  if (auto s = recap_mission_report(m.get(), 0, &summary); s != RECAP_OK) return report_failure(s);
  print_summary(nlohmann::json::parse(summary));
  recap_string_free(summary);
  return kOk;
}

int cmd_mission_stage(const Globals& g, const std::string& stage) {
  MissionPtr m;
  if (auto s = open_mission(g, m); s != RECAP_OK) return report_failure(s);
  if (auto s = recap_mission_run_stage(m.get(), stage.c_str()); s != RECAP_OK) return report_failure(s);
  std::printf("stage %s done\n", stage.c_str());
  return kOk;
}

int cmd_mission_report(const Globals& g, bool check) {
  MissionPtr m;
  if (auto s = open_mission(g, m); s != RECAP_OK) return report_failure(s);
  char* summary = nullptr;
  const recap_status s = recap_mission_report(m.get(), check ? 1 : 0, &summary);
  if (summary) {
    print_summary(nlohmann::json::parse(summary));
    recap_string_free(summary);
  }
  return s == RECAP_OK ? kOk : report_failure(s);
}

int cmd_dataset_ingest(const Globals& g, const std::string& directory) {
  MissionPtr m;
  if (auto s = open_mission(g, m); s != RECAP_OK) return report_failure(s);
  int frames = 0;
  if (auto s = recap_mission_ingest(m.get(), directory.c_str(), &frames); s != RECAP_OK) return report_failure(s);
  std::printf("ingested %d frames\n", frames);
  return kOk;
}

struct RenderArgs {
  std::string scene;
  std::vector<double> position{2.0, 2.0, 1.5};
  std::vector<double> target{0.0, 0.0, 0.0};
  int width = 64;
  int height = 64;
  double fov_deg = 60.0;
  int samples = 128;
  std::string output = "render.png";
};

int cmd_scene_render(const Globals& g, const RenderArgs& a) {
  std::string scene_path = a.scene;
  if (scene_path.empty()) {
    MissionPtr m;
    if (auto s = open_mission(g, m); s != RECAP_OK) return report_failure(s);
    char* cfg = nullptr;
    if (auto s = recap_mission_config_json(m.get(), &cfg); s != RECAP_OK) return report_failure(s);
    const auto j = nlohmann::json::parse(cfg);
    recap_string_free(cfg);
    if (j.at("scene").is_null()) {
      std::fprintf(stderr, "error: the config names no scene; pass --scene\n");
      return kConfig;
    }
    scene_path = j.at("scene").get<std::string>();
  }
  recap_scene* scene = nullptr;
  if (auto s = recap_scene_load(scene_path.c_str(), &scene); s != RECAP_OK) return report_failure(s);
  double pose[16];
  const double up[3] = {0.0, 0.0, 1.0};
  recap_status s = recap_pose_look_at(a.position.data(), a.target.data(), up, pose);
  recap_image* image = nullptr;
  if (s == RECAP_OK)
    s = recap_scene_render(scene, pose, a.width, a.height, a.fov_deg * M_PI / 180.0, a.samples, &image);
  if (s == RECAP_OK) s = recap_image_write_png(image, a.output.c_str());
  recap_image_free(image);
  recap_scene_free(scene);
  if (s != RECAP_OK) return report_failure(s);
  std::printf("wrote %s\n", a.output.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop adaptive reconstruction missions over a synthetic scene oracle"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Mission config JSON");
  app.add_option("--out", g.out, "Output directory (overrides the config)");
  app.add_option("--seed", g.seed, "Master seed (overrides the config)");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* mission = app.add_subcommand("mission", "Run or inspect a mission");
  mission->require_subcommand(1);
  bool fresh = false;
  auto* run = mission->add_subcommand("run", "Run every stage, resuming from existing artifacts");
  run->add_flag("--fresh", fresh, "Recompute every stage even if its outputs exist");
  std::string stage;
  auto* stage_cmd = mission->add_subcommand("stage", "Run one stage from the artifacts on disk");
  stage_cmd->add_option("name", stage, "Stage name")->required();
  bool check = false;
  auto* report = mission->add_subcommand("report", "Write the report and print its summary");
  report->add_flag("--check", check, "Exit 4 if any acceptance threshold fails");

  auto* dataset = app.add_subcommand("dataset", "Dataset utilities");
  dataset->require_subcommand(1);
  std::string ingest_dir;
  auto* ingest = dataset->add_subcommand("ingest", "Install an external pose dataset as the first-pass dataset");
  ingest->add_option("directory", ingest_dir, "Dataset directory holding transforms.json")->required();

  auto* scene = app.add_subcommand("scene", "Scene oracle utilities");
  scene->require_subcommand(1);
  RenderArgs ra;
  auto* render = scene->add_subcommand("render", "Render a clean oracle view to PNG");
  render->add_option("--scene", ra.scene, "Scene JSON (defaults to the config's scene)");
  render->add_option("--position", ra.position, "Camera position")->expected(3);
  render->add_option("--target", ra.target, "Look-at target")->expected(3);
  render->add_option("--width", ra.width);
  render->add_option("--height", ra.height);
  render->add_option("--fov", ra.fov_deg, "Horizontal field of view in degrees");
  render->add_option("--samples", ra.samples, "Quadrature samples per ray");
  render->add_option("--output,-o", ra.output, "Output PNG");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  if (auto s = recap_set_threads(g.threads); s != RECAP_OK) return report_failure(s);

  if (*run) return cmd_mission_run(g, fresh);
  if (*stage_cmd) return cmd_mission_stage(g, stage);
  if (*report) return cmd_mission_report(g, check);
  if (*ingest) return cmd_dataset_ingest(g, ingest_dir);
  if (*render) return cmd_scene_render(g, ra);
  return kConfig;
}
