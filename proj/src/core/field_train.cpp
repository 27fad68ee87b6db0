#include "core/field_train.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "core/errors.hpp"
#include "core/parallel.hpp"
#include "core/random.hpp"

namespace recap::nerf {
namespace {

constexpr std::size_t kChunkRays = 64;

double chunk_loss_and_gradient(const RadianceField& field, std::span<const TrainingRay> rays, double scale,
                               std::span<double> grad) {
  double loss = 0.0;
  Eigen::Index total = 0;
  for (const auto& r : rays) total += static_cast<Eigen::Index>(r.samples.size());
  for (const auto& r : rays)
    if (r.samples.empty()) loss += (field.background() - r.target).squaredNorm();
  if (total == 0) return loss;

  Matrix points(3, total);
  Eigen::Index col = 0;
  for (const auto& r : rays)
    for (const auto& p : r.samples.points) points.col(col++) = p;

  ForwardCache cache;
  Eigen::RowVectorXd sigma;
  Matrix color;
  forward_batch(field, points, sigma, color, grad.empty() ? nullptr : &cache);

  Eigen::RowVectorXd grad_sigma(total);
  Matrix grad_color(3, total);
  col = 0;
  for (const auto& r : rays) {
    const std::size_t n = r.samples.size();
    if (n == 0) continue;
    const std::span<const double> s(sigma.data() + col, n);
    const std::span<const double> c(color.col(col).data(), 3 * n);
    const auto out = volume::composite(s, c, r.samples.delta, field.background());
    const Vec3 residual = out.color - r.target;
    loss += residual.squaredNorm();
    if (!grad.empty())
      volume::composite_backward(s, c, r.samples.delta, field.background(), 2.0 * scale * residual,
                                 std::span<double>(grad_sigma.data() + col, n),
                                 std::span<double>(grad_color.col(col).data(), 3 * n));
    col += static_cast<Eigen::Index>(n);
  }
  if (!grad.empty()) backward_batch(field, cache, grad_sigma, grad_color, grad);
  return loss;
}

double reduce(const RadianceField& field, std::span<const TrainingRay> rays, std::span<double> grad) {
  if (rays.empty()) throw ValidationError("empty ray batch", "rays");
  const double scale = 1.0 / (3.0 * static_cast<double>(rays.size()));
  const std::size_t chunks = (rays.size() + kChunkRays - 1) / kChunkRays;
  std::vector<double> losses(chunks, 0.0);
  std::vector<std::vector<double>> partial(grad.empty() ? 0 : chunks);
  parallel_for(chunks, [&](std::size_t k) {
    const std::size_t begin = k * kChunkRays;
    const std::size_t end = std::min(rays.size(), begin + kChunkRays);
    std::span<double> g;
    if (!grad.empty()) {
      partial[k].assign(grad.size(), 0.0);
      g = partial[k];
    }
    losses[k] = chunk_loss_and_gradient(field, rays.subspan(begin, end - begin), scale, g);
  });
  double loss = 0.0;
  for (std::size_t k = 0; k < chunks; ++k) {
    loss += losses[k];
    if (!grad.empty())
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += partial[k][i];
  }
  return loss * scale;
}

}  // namespace

void validate(const TrainConfig& cfg) {
  if (cfg.iterations < 0) throw ValidationError("iterations must be >= 0", "iterations");
  if (cfg.rays_per_batch < 1) throw ValidationError("rays_per_batch must be >= 1", "rays_per_batch");
  if (cfg.samples_per_ray < 1) throw ValidationError("samples_per_ray must be >= 1", "samples_per_ray");
  if (!(cfg.near > 0.0 && cfg.far > cfg.near)) throw ValidationError("need 0 < near < far", "near");
  if (!(cfg.learning_rate > 0.0)) throw ValidationError("learning_rate must be positive", "learning_rate");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0))
    throw ValidationError("adam betas must lie in [0,1)", "adam_betas");
}

double loss_and_gradient(const RadianceField& field, std::span<const TrainingRay> rays, std::span<double> grad) {
  if (grad.size() != field.param_count()) throw ValidationError("gradient buffer size mismatch", "grad");
  return reduce(field, rays, grad);
}

double photometric_loss(const RadianceField& field, std::span<const TrainingRay> rays) {
  return reduce(field, rays, {});
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double epsilon)
    : lr_(lr), beta1_(beta1), beta2_(beta2), epsilon_(epsilon), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  ++step_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + epsilon_);
  }
}

TrainingRay make_training_ray(const camera::Ray& ray, const Vec3& target, const camera::Box& bounds, double near,
                              double far, int samples, Rng& rng) {
  TrainingRay tr;
  tr.target = target;
  double t0 = 0.0, t1 = 0.0;
  if (camera::intersect_box(ray, bounds, near, far, t0, t1))
    tr.samples = volume::sample_stratified(ray, t0, t1, samples, rng);
  return tr;
}

TrainResult train(const camera::CaptureDataset& dataset, const RadianceField& initial, const TrainConfig& cfg) {
  validate(cfg);
  if (dataset.frames.empty()) throw ValidationError("training dataset is empty", "dataset");
  camera::validate_dataset(dataset);

  TrainResult result{initial, {}};
  RadianceField& field = result.field;
  const auto& intr = dataset.intrinsics;
  const std::uint64_t per_frame = static_cast<std::uint64_t>(intr.width()) * intr.height();
  const std::uint64_t total_pixels = per_frame * dataset.frames.size();

  Adam adam(field.param_count(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
  std::vector<double> grad(field.param_count());
  std::vector<TrainingRay> batch(cfg.rays_per_batch);
  double block_sum = 0.0;
  int block_count = 0;

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const std::uint64_t batch_seed = derive_seed({cfg.seed, static_cast<std::uint64_t>(iter)});
    for (int j = 0; j < cfg.rays_per_batch; ++j) {
      Rng rng(derive_seed({batch_seed, static_cast<std::uint64_t>(j)}));
      const std::uint64_t pick = std::uniform_int_distribution<std::uint64_t>(0, total_pixels - 1)(rng);
      const auto& frame = dataset.frames[pick / per_frame];
      const int px = static_cast<int>((pick % per_frame) % intr.width());
      const int py = static_cast<int>((pick % per_frame) / intr.width());
      const Vec3 target(frame.image.at(px, py, 0), frame.image.at(px, py, 1), frame.image.at(px, py, 2));
      batch[j] = make_training_ray(camera::pixel_ray(intr, frame.pose, px, py), target, field.bounds(), cfg.near,
                                   cfg.far, cfg.samples_per_ray, rng);
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    const double loss = loss_and_gradient(field, batch, grad);
    bool finite = std::isfinite(loss);
    for (std::size_t i = 0; finite && i < grad.size(); ++i) finite = std::isfinite(grad[i]);
    if (!finite)
      throw NumericError("non-finite loss at iteration " + std::to_string(iter) + " (batch seed " +
                         std::to_string(batch_seed) + ")");
    adam.step(field.params(), grad);

    block_sum += loss;
    if (++block_count == 100) {
      result.loss_history.push_back(block_sum / block_count);
      block_sum = 0.0;
      block_count = 0;
    }
  }
  if (block_count > 0) result.loss_history.push_back(block_sum / block_count);
  return result;
}

}  // namespace recap::nerf
