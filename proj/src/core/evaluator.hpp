#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "core/image.hpp"
#include "core/random.hpp"

namespace recap::evaluator {

using Matrix = Eigen::MatrixXd;

/// Render-quality classifier:
///   3x [conv 3x3 stride 1 pad 1 -> ReLU -> maxpool 2x2], channels 3->32->64->128
///   -> flatten -> fc1 -> ReLU -> dropout(0.5) -> fc2 -> ReLU -> dropout(0.5)
///   -> linear -> sigmoid.
struct EvaluatorSpec {
  int height = 96;
  int width = 96;
  int fc1 = 512;
  int fc2 = 128;
  double dropout = 0.5;

  int flatten_dim() const { return (height / 8) * (width / 8) * 128; }
  bool operator==(const EvaluatorSpec&) const = default;
};

inline constexpr int kConvChannels[4] = {3, 32, 64, 128};

/// Parameters live in one flat vector, in this order: conv1 W,b; conv2 W,b;
/// conv3 W,b; fc1 W,b; fc2 W,b; out W,b. Weight blocks are column-major
/// (out x in). Conv weight columns are indexed c_in * 9 + ky * 3 + kx. The
/// flattened conv output is channel-major: index c * (H/8 * W/8) + y * W/8 + x.
class EvaluatorModel {
 public:
  EvaluatorModel() = default;
  /// All parameters zero. Throws ValidationError unless height and width are
  /// positive multiples of 8.
  explicit EvaluatorModel(const EvaluatorSpec& spec);

  const EvaluatorSpec& spec() const { return spec_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }

  static constexpr int kLayerCount = 6;
  /// Aligned copies, so products do not depend on the address of params().
  Matrix weights(int layer) const;
  Eigen::VectorXd bias(int layer) const;
  std::size_t layer_offset(int layer) const { return layers_[layer].offset; }
  int layer_in(int layer) const { return layers_[layer].in; }
  int layer_out(int layer) const { return layers_[layer].out; }

  bool operator==(const EvaluatorModel& o) const { return spec_ == o.spec_ && params_ == o.params_; }

 private:
  struct Shape {
    int in = 0;
    int out = 0;
    std::size_t offset = 0;
  };
  EvaluatorSpec spec_;
  Shape layers_[kLayerCount];
  std::vector<double> params_;
};

/// He-normal weights, zero biases, deterministic in seed.
EvaluatorModel evaluator_init(const EvaluatorSpec& spec, std::uint64_t seed);

enum class Mode { kTrain, kInfer };

/// Inverted-dropout keep masks for one batch: entries are 0 or 1/(1-rate).
struct DropoutMasks {
  Matrix fc1;  // fc1 x batch
  Matrix fc2;  // fc2 x batch
};

DropoutMasks draw_masks(const EvaluatorSpec& spec, int batch, Rng& rng);

/// Resizes (bilinear) to the model's input shape when needed.
Image prepare_input(const EvaluatorSpec& spec, const Image& image);

/// Probability of high quality. Infer mode is deterministic and clamped to
/// the open interval (0,1); train mode draws dropout masks from `rng`.
/// Throws ValidationError if the image does not match the input shape.
double evaluator_forward(const EvaluatorModel& model, const Image& image, Mode mode = Mode::kInfer,
                         Rng* rng = nullptr);

/// Batched inference.
std::vector<double> predict(const EvaluatorModel& model, std::span<const Image> images);

/// Mean binary cross-entropy over the batch computed from logits, with its
/// gradient accumulated into `grad` when non-empty. `masks` null means
/// inference (no dropout). `probabilities`, when given, receives the outputs.
double bce_loss_and_gradient(const EvaluatorModel& model, std::span<const Image> images,
                             std::span<const int> labels, const DropoutMasks* masks, std::span<double> grad,
                             std::vector<double>* probabilities = nullptr);

struct EpochStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TrainOptions {
  int epochs = 20;
  double learning_rate = 1e-3;
  int batch_size = 16;
  std::uint64_t seed = 0;
};

struct TrainResult {
  EvaluatorModel model;
  std::vector<EpochStats> history;
};

/// Adam on BCE with per-epoch shuffling. Throws ValidationError when the data
/// holds a single class and NumericError on a non-finite loss.
TrainResult evaluator_train(const EvaluatorModel& model, std::span<const Image> images, std::span<const int> labels,
                            const TrainOptions& options);

struct ClassifierMetrics {
  double accuracy = 0.0;
  double roc_auc = 0.0;
};

/// Accuracy at p >= 0.5 and ROC AUC by the rank statistic (ties count 1/2).
/// Throws ValidationError when only one class is present.
ClassifierMetrics score_predictions(std::span<const double> scores, std::span<const int> labels);

ClassifierMetrics evaluator_metrics(const EvaluatorModel& model, std::span<const Image> images,
                                    std::span<const int> labels);

/// Binary checkpoint, little-endian:
///   char[8] "RCPEVALM" | u32 version (1) | i32 height | i32 width | i32 fc1
///   | i32 fc2 | f64 dropout | u64 param_count | f64[param_count] params
void save_evaluator(const EvaluatorModel& model, const std::filesystem::path& path);
EvaluatorModel load_evaluator(const std::filesystem::path& path);

}  // namespace recap::evaluator
