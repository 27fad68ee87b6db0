/* Exercises the C API from a C translation unit. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "recap/recap.h"

static int failures = 0;

#define EXPECT(cond)                                              \
  do {                                                            \
    if (!(cond)) {                                                \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                 \
    }                                                             \
  } while (0)

int main(int argc, char** argv) {
  const char* scene_path = argc > 1 ? argv[1] : "tiny_scene.json";
  const char* png_path = argc > 2 ? argv[2] : "capi_smoke.png";
  recap_scene* scene = NULL;
  recap_image* image = NULL;
  recap_image* copy = NULL;
  recap_mission* mission = NULL;
  double pose[16];
  const double position[3] = {1.5, 1.5, 1.2};
  const double target[3] = {0.0, 0.0, 0.1};
  const double up[3] = {0.0, 0.0, 1.0};
  double db = 0.0;
  double ssim = 0.0;
  int i;

  EXPECT(strlen(recap_version()) > 0);
  EXPECT(strcmp(recap_status_name(RECAP_OK), "ok") == 0);
  EXPECT(recap_stage_count() == 9);
  EXPECT(strcmp(recap_stage_name(0), "capture-1") == 0);
  EXPECT(recap_stage_name(99) == NULL);

  EXPECT(recap_scene_load("does/not/exist.json", &scene) != RECAP_OK);
  EXPECT(scene == NULL);
  EXPECT(strlen(recap_last_error()) > 0);
  EXPECT(recap_mission_load(NULL, &mission) == RECAP_ERR_INVALID_ARGUMENT);
  EXPECT(recap_pose_look_at(position, position, up, pose) == RECAP_ERR_GEOMETRY);

  EXPECT(recap_scene_load(scene_path, &scene) == RECAP_OK);
  EXPECT(recap_pose_look_at(position, target, up, pose) == RECAP_OK);
  EXPECT(fabs(pose[15] - 1.0) < 1e-12);
  EXPECT(recap_scene_render(scene, pose, 16, 12, 1.0, 32, &image) == RECAP_OK);
  EXPECT(recap_image_width(image) == 16);
  EXPECT(recap_image_height(image) == 12);
  for (i = 0; i < 16 * 12 * 3; ++i) EXPECT(recap_image_data(image)[i] >= 0.0 && recap_image_data(image)[i] <= 1.0);

  EXPECT(recap_image_write_png(image, png_path) == RECAP_OK);
  EXPECT(recap_image_read_png(png_path, &copy) == RECAP_OK);
  EXPECT(recap_psnr(image, copy, &db) == RECAP_OK);
  EXPECT(db > 45.0);
  EXPECT(recap_ssim(image, image, &ssim) == RECAP_OK);
  EXPECT(ssim == 1.0);

  EXPECT(recap_set_threads(0) == RECAP_ERR_INVALID_ARGUMENT);
  EXPECT(recap_set_threads(2) == RECAP_OK);
  EXPECT(recap_get_threads() == 2);

  recap_image_free(copy);
  recap_image_free(image);
  recap_scene_free(scene);
  recap_scene_free(NULL);
  remove(png_path);
  if (failures) fprintf(stderr, "%d failures\n", failures);
  else printf("capi smoke ok\n");
  return failures ? 1 : 0;
}
