#include "recap/recap.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include <json.hpp>

#include "core/camera.hpp"
#include "core/errors.hpp"
#include "core/evaluator.hpp"
#include "core/field.hpp"
#include "core/image.hpp"
#include "core/metrics.hpp"
#include "core/mission.hpp"
#include "core/parallel.hpp"
#include "core/pose_dataset.hpp"
#include "core/scene.hpp"

struct recap_mission {
  recap::mission::MissionConfig config;
};
struct recap_scene {
  recap::scene::SceneSpec scene;
};
struct recap_image {
  recap::Image image;
};
struct recap_field {
  recap::nerf::RadianceField field;
};
struct recap_evaluator {
  recap::evaluator::EvaluatorModel model;
};

namespace {

thread_local std::string g_last_error;

recap_status fail(recap_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename Fn>
recap_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    return fn();
  } catch (const recap::StageError& e) {
    return fail(RECAP_ERR_STAGE, e.what());
  } catch (const recap::MissingArtifactError& e) {
    return fail(RECAP_ERR_MISSING_ARTIFACT, e.what());
  } catch (const recap::ValidationError& e) {
    return fail(RECAP_ERR_VALIDATION, e.what());
  } catch (const recap::GeometryError& e) {
    return fail(RECAP_ERR_GEOMETRY, e.what());
  } catch (const recap::LoadError& e) {
    return fail(RECAP_ERR_LOAD, e.what());
  } catch (const recap::IoError& e) {
    return fail(RECAP_ERR_IO, e.what());
  } catch (const recap::NumericError& e) {
    return fail(RECAP_ERR_NUMERIC, e.what());
  } catch (const std::bad_alloc&) {
    return fail(RECAP_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(RECAP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(RECAP_ERR_INTERNAL, "unknown error");
  }
}

#define RECAP_REQUIRE(cond, what) \
  if (!(cond)) return fail(RECAP_ERR_INVALID_ARGUMENT, what)

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

recap::camera::Pose pose_from(const double m[16]) {
  recap::Mat4 mat;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) mat(r, c) = m[4 * r + c];
  return recap::camera::Pose::from_matrix(mat);
}

recap_image* wrap(recap::Image image) { return new recap_image{std::move(image)}; }

}  // namespace

extern "C" {

const char* recap_version(void) { return "1.0.0"; }

const char* recap_status_name(recap_status status) {
  switch (status) {
    case RECAP_OK: return "ok";
    case RECAP_ERR_INVALID_ARGUMENT: return "invalid argument";
    case RECAP_ERR_VALIDATION: return "validation error";
    case RECAP_ERR_GEOMETRY: return "geometry error";
    case RECAP_ERR_LOAD: return "load error";
    case RECAP_ERR_IO: return "i/o error";
    case RECAP_ERR_NUMERIC: return "numeric error";
    case RECAP_ERR_MISSING_ARTIFACT: return "missing artifact";
    case RECAP_ERR_STAGE: return "stage failure";
    case RECAP_ERR_CHECK_FAILED: return "check failed";
    case RECAP_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* recap_last_error(void) { return g_last_error.c_str(); }

void recap_string_free(char* s) { std::free(s); }

recap_status recap_set_threads(int threads) {
  return guarded([&] {
    RECAP_REQUIRE(threads >= 1, "threads must be >= 1");
    recap::set_thread_count(threads);
    return RECAP_OK;
  });
}

int recap_get_threads(void) { return recap::thread_count(); }

recap_status recap_mission_load(const char* config_path, recap_mission** out) {
  return guarded([&] {
    RECAP_REQUIRE(config_path && out, "null argument");
    *out = nullptr;
    auto cfg = recap::mission::load_config(config_path);
    *out = new recap_mission{std::move(cfg)};
    return RECAP_OK;
  });
}

recap_status recap_mission_set_output(recap_mission* mission, const char* output_dir) {
  return guarded([&] {
    RECAP_REQUIRE(mission && output_dir && *output_dir, "null or empty argument");
    mission->config.output_dir = output_dir;
    return RECAP_OK;
  });
}

recap_status recap_mission_set_seed(recap_mission* mission, uint64_t seed) {
  return guarded([&] {
    RECAP_REQUIRE(mission, "null mission");
    mission->config.seed = seed;
    return RECAP_OK;
  });
}

recap_status recap_mission_config_json(const recap_mission* mission, char** out) {
  return guarded([&] {
    RECAP_REQUIRE(mission && out, "null argument");
    *out = dup_string(recap::mission::config_to_json(mission->config).dump(2));
    return RECAP_OK;
  });
}

recap_status recap_mission_run(recap_mission* mission, int resume) {
  return guarded([&] {
    RECAP_REQUIRE(mission, "null mission");
    recap::mission::run_mission(mission->config, resume != 0);
    return RECAP_OK;
  });
}

recap_status recap_mission_run_stage(recap_mission* mission, const char* stage) {
  return guarded([&] {
    RECAP_REQUIRE(mission && stage, "null argument");
    if (!recap::mission::is_stage(stage))
      throw recap::ValidationError("unknown stage '" + std::string(stage) + "'", "stage");
    recap::mission::prepare_output(mission->config);
    recap::mission::run_stage(mission->config, stage);
    return RECAP_OK;
  });
}

recap_status recap_mission_report(recap_mission* mission, int check, char** summary_json) {
  return guarded([&] {
    RECAP_REQUIRE(mission, "null mission");
    if (summary_json) *summary_json = nullptr;
    recap::mission::run_stage(mission->config, "report");
    const auto report = recap::mission::load_report(mission->config.output_dir);

    nlohmann::ordered_json j;
    auto& q = j["quantiles"] = nlohmann::ordered_json::array();
    for (const auto& r : report.quantiles)
      q.push_back({{"metric", r.metric}, {"q", r.q}, {"iteration_1", r.iteration_1},
                   {"iteration_2", r.iteration_2}, {"delta", r.delta()}});
    j["evaluator"] = {{"accuracy", report.evaluator_accuracy}, {"roc_auc", report.evaluator_auc}};
    j["plan"] = {{"waypoint_count", report.waypoint_count}, {"path_length", report.path_length}};
    j["frames"] = {{"iteration_1", report.frames_first}, {"iteration_2", report.frames_second}};
    j["stage_seconds"] = report.stage_seconds;
    bool passed = true;
    if (check) {
      auto& checks = j["checks"] = nlohmann::ordered_json::array();
      for (const auto& c : report.check(mission->config.check)) {
        checks.push_back({{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"passed", c.passed}});
        passed = passed && c.passed;
      }
      j["passed"] = passed;
    }
    if (summary_json) *summary_json = dup_string(j.dump(2));
    if (!passed) return fail(RECAP_ERR_CHECK_FAILED, "one or more acceptance thresholds failed");
    return RECAP_OK;
  });
}

recap_status recap_mission_ingest(recap_mission* mission, const char* dataset_dir, int* frame_count) {
  return guarded([&] {
    RECAP_REQUIRE(mission && dataset_dir, "null argument");
    const auto dataset = recap::mission::ingest_external_dataset(mission->config, dataset_dir);
    if (frame_count) *frame_count = static_cast<int>(dataset.frames.size());
    return RECAP_OK;
  });
}

void recap_mission_free(recap_mission* mission) { delete mission; }

int recap_stage_count(void) { return static_cast<int>(std::size(recap::mission::kStages)); }

const char* recap_stage_name(int index) {
  if (index < 0 || index >= recap_stage_count()) return nullptr;
  return recap::mission::kStages[index].data();
}

recap_status recap_pose_look_at(const double position[3], const double target[3], const double up[3],
                                double pose_out[16]) {
  return guarded([&] {
    RECAP_REQUIRE(position && target && up && pose_out, "null argument");
    const auto pose = recap::camera::look_at(recap::Vec3(position[0], position[1], position[2]),
                                             recap::Vec3(target[0], target[1], target[2]),
                                             recap::Vec3(up[0], up[1], up[2]));
    const recap::Mat4 m = pose.matrix();
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) pose_out[4 * r + c] = m(r, c);
    return RECAP_OK;
  });
}

recap_status recap_image_create(int width, int height, recap_image** out) {
  return guarded([&] {
    RECAP_REQUIRE(out && width > 0 && height > 0, "invalid image size");
    *out = wrap(recap::Image(width, height));
    return RECAP_OK;
  });
}

int recap_image_width(const recap_image* image) { return image ? image->image.width : 0; }
int recap_image_height(const recap_image* image) { return image ? image->image.height : 0; }
double* recap_image_data(recap_image* image) { return image ? image->image.data.data() : nullptr; }

recap_status recap_image_read_png(const char* path, recap_image** out) {
  return guarded([&] {
    RECAP_REQUIRE(path && out, "null argument");
    *out = wrap(recap::read_png(path));
    return RECAP_OK;
  });
}

recap_status recap_image_write_png(const recap_image* image, const char* path) {
  return guarded([&] {
    RECAP_REQUIRE(image && path, "null argument");
    recap::write_png(image->image, path);
    return RECAP_OK;
  });
}

void recap_image_free(recap_image* image) { delete image; }

recap_status recap_psnr(const recap_image* a, const recap_image* b, double* out_db) {
  return guarded([&] {
    RECAP_REQUIRE(a && b && out_db, "null argument");
    *out_db = recap::metrics::psnr(a->image, b->image);
    return RECAP_OK;
  });
}

recap_status recap_ssim(const recap_image* a, const recap_image* b, double* out) {
  return guarded([&] {
    RECAP_REQUIRE(a && b && out, "null argument");
    *out = recap::metrics::ssim(a->image, b->image);
    return RECAP_OK;
  });
}

recap_status recap_scene_load(const char* path, recap_scene** out) {
  return guarded([&] {
    RECAP_REQUIRE(path && out, "null argument");
    *out = new recap_scene{recap::scene::load_scene(path)};
    return RECAP_OK;
  });
}

recap_status recap_scene_render(const recap_scene* scene, const double pose[16], int width, int height,
                                double fov_x, int samples, recap_image** out) {
  return guarded([&] {
    RECAP_REQUIRE(scene && pose && out, "null argument");
    const auto intr = recap::camera::make_intrinsics(width, height, fov_x);
    *out = wrap(recap::scene::render_ground_truth(scene->scene, pose_from(pose), intr, samples));
    return RECAP_OK;
  });
}

void recap_scene_free(recap_scene* scene) { delete scene; }

recap_status recap_dataset_validate(const char* directory, int* frame_count) {
  return guarded([&] {
    RECAP_REQUIRE(directory, "null argument");
    const auto dataset = recap::camera::read_pose_dataset(directory);
    if (frame_count) *frame_count = static_cast<int>(dataset.frames.size());
    return RECAP_OK;
  });
}

recap_status recap_field_load(const char* path, recap_field** out) {
  return guarded([&] {
    RECAP_REQUIRE(path && out, "null argument");
    *out = new recap_field{recap::nerf::load_field(path)};
    return RECAP_OK;
  });
}

recap_status recap_field_save(const recap_field* field, const char* path) {
  return guarded([&] {
    RECAP_REQUIRE(field && path, "null argument");
    recap::nerf::save_field(field->field, path);
    return RECAP_OK;
  });
}

recap_status recap_field_render(const recap_field* field, const double pose[16], int width, int height,
                                double fov_x, int samples, uint64_t seed, recap_image** out) {
  return guarded([&] {
    RECAP_REQUIRE(field && pose && out, "null argument");
    const auto intr = recap::camera::make_intrinsics(width, height, fov_x);
    *out = wrap(recap::nerf::render_view(field->field, pose_from(pose), intr, samples, seed));
    return RECAP_OK;
  });
}

recap_status recap_field_export_ply(const recap_field* field, const char* path, int resolution,
                                    double density_threshold, size_t* point_count) {
  return guarded([&] {
    RECAP_REQUIRE(field && path, "null argument");
    const auto cloud =
        recap::nerf::extract_point_cloud(field->field, field->field.bounds(), resolution, density_threshold);
    recap::nerf::write_ply(cloud, path);
    if (point_count) *point_count = cloud.size();
    return RECAP_OK;
  });
}

void recap_field_free(recap_field* field) { delete field; }

recap_status recap_evaluator_load(const char* path, recap_evaluator** out) {
  return guarded([&] {
    RECAP_REQUIRE(path && out, "null argument");
    *out = new recap_evaluator{recap::evaluator::load_evaluator(path)};
    return RECAP_OK;
  });
}

recap_status recap_evaluator_predict(const recap_evaluator* evaluator, const recap_image* image,
                                     double* probability) {
  return guarded([&] {
    RECAP_REQUIRE(evaluator && image && probability, "null argument");
    *probability = recap::evaluator::evaluator_forward(
        evaluator->model, recap::evaluator::prepare_input(evaluator->model.spec(), image->image));
    return RECAP_OK;
  });
}

void recap_evaluator_free(recap_evaluator* evaluator) { delete evaluator; }

}  // extern "C"
