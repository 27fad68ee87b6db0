#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "core/field.hpp"
#include "core/pose_dataset.hpp"
#include "core/volume.hpp"

namespace recap::nerf {

struct TrainConfig {
  int iterations = 2000;
  int rays_per_batch = 256;
  int samples_per_ray = 32;
  double near = 0.05;  // clip range along each ray, further limited to the field bounds
  double far = 100.0;
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);

/// One supervised ray: its samples (t, delta, points already set) and the
/// target pixel color. `samples` empty means the ray misses the field bounds
/// and renders as pure background.
struct TrainingRay {
  volume::RaySampleSet samples;
  Vec3 target = Vec3::Zero();
};

/// Mean squared error over rays and channels, (1 / 3B) sum (C - C*)^2, with
/// its gradient accumulated into `grad` (params layout). The sum over rays is
/// done in fixed-size chunks whose partial gradients are combined in order.
double loss_and_gradient(const RadianceField& field, std::span<const TrainingRay> rays, std::span<double> grad);

/// Loss only.
double photometric_loss(const RadianceField& field, std::span<const TrainingRay> rays);

/// Adam state over the flat parameter vector.
class Adam {
 public:
  Adam(std::size_t n, double lr, double beta1, double beta2, double epsilon);
  void step(std::span<double> params, std::span<const double> grad);

 private:
  double lr_, beta1_, beta2_, epsilon_;
  std::vector<double> m_, v_;
  long step_ = 0;
};

struct TrainResult {
  RadianceField field;
  /// Mean batch loss over each consecutive block of 100 iterations (the last
  /// block may be shorter).
  std::vector<double> loss_history;
};

/// Fits `initial` to the dataset pixels. Deterministic in cfg.seed. Throws
/// NumericError naming the iteration and batch seed if the loss goes
/// non-finite.
TrainResult train(const camera::CaptureDataset& dataset, const RadianceField& initial, const TrainConfig& cfg);

/// Samples for a batch slot: stratified over [near, far] clipped to bounds.
TrainingRay make_training_ray(const camera::Ray& ray, const Vec3& target, const camera::Box& bounds, double near,
                              double far, int samples, Rng& rng);

}  // namespace recap::nerf
