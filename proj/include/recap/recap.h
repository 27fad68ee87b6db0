/* C interface to the recap reconstruction library.
 *
 * Every function returns a recap_status. On failure the message for the
 * calling thread is available from recap_last_error() until the next call
 * into the library on that thread. Objects are opaque handles released with
 * their matching *_free function; passing NULL to a free function is a no-op.
 *
 * Poses are 4x4 world-from-camera matrices stored row-major. Cameras look
 * down their local -Z axis with +Y up. Images hold RGB doubles in [0,1],
 * row-major, channels interleaved. */
#ifndef RECAP_RECAP_H
#define RECAP_RECAP_H

#include <stddef.h>
#include <stdint.h>

#if defined(RECAP_BUILDING_LIBRARY)
#define RECAP_API __attribute__((visibility("default")))
#else
#define RECAP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum recap_status {
  RECAP_OK = 0,
  RECAP_ERR_INVALID_ARGUMENT = 1,
  RECAP_ERR_VALIDATION = 2,
  RECAP_ERR_GEOMETRY = 3,
  RECAP_ERR_LOAD = 4,
  RECAP_ERR_IO = 5,
  RECAP_ERR_NUMERIC = 6,
  RECAP_ERR_MISSING_ARTIFACT = 7,
  RECAP_ERR_STAGE = 8,
  RECAP_ERR_CHECK_FAILED = 9,
  RECAP_ERR_INTERNAL = 10
} recap_status;

typedef struct recap_mission recap_mission;
typedef struct recap_scene recap_scene;
typedef struct recap_image recap_image;
typedef struct recap_field recap_field;
typedef struct recap_evaluator recap_evaluator;

RECAP_API const char* recap_version(void);
RECAP_API const char* recap_status_name(recap_status status);
RECAP_API const char* recap_last_error(void);
/* Frees strings returned through char** out-parameters. */
RECAP_API void recap_string_free(char* s);

/* Worker threads used inside stages (default 1). Results do not depend on it. */
RECAP_API recap_status recap_set_threads(int threads);
RECAP_API int recap_get_threads(void);

/* ---- missions ---- */

RECAP_API recap_status recap_mission_load(const char* config_path, recap_mission** out);
RECAP_API recap_status recap_mission_set_output(recap_mission* mission, const char* output_dir);
RECAP_API recap_status recap_mission_set_seed(recap_mission* mission, uint64_t seed);
/* Canonical JSON of the effective configuration. */
RECAP_API recap_status recap_mission_config_json(const recap_mission* mission, char** out);
/* Runs all stages; with resume != 0, stages whose outputs exist are skipped. */
RECAP_API recap_status recap_mission_run(recap_mission* mission, int resume);
RECAP_API recap_status recap_mission_run_stage(recap_mission* mission, const char* stage);
/* Writes the report files and returns a JSON summary. With check != 0 the
 * summary carries the threshold checks and RECAP_ERR_CHECK_FAILED is
 * returned (summary still set) when any fails. */
RECAP_API recap_status recap_mission_report(recap_mission* mission, int check, char** summary_json);
/* Validates a pose dataset directory and installs it as the first-pass dataset. */
RECAP_API recap_status recap_mission_ingest(recap_mission* mission, const char* dataset_dir, int* frame_count);
RECAP_API void recap_mission_free(recap_mission* mission);

/* Number of stages and their names in execution order. */
RECAP_API int recap_stage_count(void);
RECAP_API const char* recap_stage_name(int index);

/* ---- geometry ---- */

RECAP_API recap_status recap_pose_look_at(const double position[3], const double target[3], const double up[3],
                                          double pose_out[16]);

/* ---- images ---- */

RECAP_API recap_status recap_image_create(int width, int height, recap_image** out);
RECAP_API int recap_image_width(const recap_image* image);
RECAP_API int recap_image_height(const recap_image* image);
/* width * height * 3 values. */
RECAP_API double* recap_image_data(recap_image* image);
RECAP_API recap_status recap_image_read_png(const char* path, recap_image** out);
RECAP_API recap_status recap_image_write_png(const recap_image* image, const char* path);
RECAP_API void recap_image_free(recap_image* image);

/* Identical images give +infinity. */
RECAP_API recap_status recap_psnr(const recap_image* a, const recap_image* b, double* out_db);
RECAP_API recap_status recap_ssim(const recap_image* a, const recap_image* b, double* out);

/* ---- scene oracle ---- */

RECAP_API recap_status recap_scene_load(const char* path, recap_scene** out);
/* Clean ground-truth view with `samples` quadrature points per ray. */
RECAP_API recap_status recap_scene_render(const recap_scene* scene, const double pose[16], int width, int height,
                                          double fov_x, int samples, recap_image** out);
RECAP_API void recap_scene_free(recap_scene* scene);

/* ---- datasets ---- */

RECAP_API recap_status recap_dataset_validate(const char* directory, int* frame_count);

/* ---- radiance fields ---- */

RECAP_API recap_status recap_field_load(const char* path, recap_field** out);
RECAP_API recap_status recap_field_save(const recap_field* field, const char* path);
RECAP_API recap_status recap_field_render(const recap_field* field, const double pose[16], int width, int height,
                                          double fov_x, int samples, uint64_t seed, recap_image** out);
RECAP_API recap_status recap_field_export_ply(const recap_field* field, const char* path, int resolution,
                                              double density_threshold, size_t* point_count);
RECAP_API void recap_field_free(recap_field* field);

/* ---- quality evaluator ---- */

RECAP_API recap_status recap_evaluator_load(const char* path, recap_evaluator** out);
/* Probability that the image is high quality; resized to the model input. */
RECAP_API recap_status recap_evaluator_predict(const recap_evaluator* evaluator, const recap_image* image,
                                               double* probability);
RECAP_API void recap_evaluator_free(recap_evaluator* evaluator);

#ifdef __cplusplus
}
#endif

#endif /* RECAP_RECAP_H */
