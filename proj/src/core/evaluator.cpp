#include "core/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "core/binary_io.hpp"
#include "core/errors.hpp"
#include "core/parallel.hpp"

namespace recap::evaluator {
namespace {

constexpr char kMagic[9] = "RCPEVALM";
constexpr std::uint32_t kVersion = 1;

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

// Activations are planar: rows are pixels (y * W + x), columns are channels.

Matrix to_planar(const Image& image) {
  Matrix x(static_cast<Eigen::Index>(image.pixel_count()), 3);
  for (std::size_t p = 0; p < image.pixel_count(); ++p)
    for (int c = 0; c < 3; ++c) x(static_cast<Eigen::Index>(p), c) = image.data[3 * p + c];
  return x;
}

Matrix im2col(const Matrix& x, int h, int w) {
  const Eigen::Index channels = x.cols();
  Matrix cols = Matrix::Zero(static_cast<Eigen::Index>(h) * w, channels * 9);
  for (Eigen::Index c = 0; c < channels; ++c)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        double* dst = cols.col(c * 9 + ky * 3 + kx).data();
        const double* src = x.col(c).data();
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          const int x0 = std::max(0, 1 - kx);
          const int x1 = std::min(w, w + 1 - kx);
          for (int xx = x0; xx < x1; ++xx) dst[y * w + xx] = src[sy * w + xx + kx - 1];
        }
      }
  return cols;
}

Matrix col2im(const Matrix& cols, int h, int w, Eigen::Index channels) {
  Matrix x = Matrix::Zero(static_cast<Eigen::Index>(h) * w, channels);
  for (Eigen::Index c = 0; c < channels; ++c)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        const double* src = cols.col(c * 9 + ky * 3 + kx).data();
        double* dst = x.col(c).data();
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          const int x0 = std::max(0, 1 - kx);
          const int x1 = std::min(w, w + 1 - kx);
          for (int xx = x0; xx < x1; ++xx) dst[sy * w + xx + kx - 1] += src[y * w + xx];
        }
      }
  return x;
}

struct ConvCache {
  Matrix cols;                 // (h*w) x (cin*9)
  Matrix pre;                  // (h*w) x cout
  std::vector<int> argmax;     // per pooled element, index into pre's rows
};

struct ImageCache {
  ConvCache conv[3];
};

/// Runs the three conv blocks; returns the flattened feature vector.
Eigen::VectorXd conv_forward(const EvaluatorModel& model, const Image& image, ImageCache* cache) {
  const EvaluatorSpec& spec = model.spec();
  Matrix act = to_planar(image);
  int h = spec.height, w = spec.width;
  for (int l = 0; l < 3; ++l) {
    Matrix cols = im2col(act, h, w);
    Matrix pre = cols * model.weights(l).transpose();
    pre.rowwise() += model.bias(l).transpose();
    const int ho = h / 2, wo = w / 2;
    const Eigen::Index cout = pre.cols();
    Matrix pooled(static_cast<Eigen::Index>(ho) * wo, cout);
    std::vector<int> argmax(cache ? static_cast<std::size_t>(ho) * wo * cout : 0);
    for (Eigen::Index c = 0; c < cout; ++c) {
      const double* z = pre.col(c).data();
      for (int y = 0; y < ho; ++y)
        for (int x = 0; x < wo; ++x) {
          int best = (2 * y) * w + 2 * x;
          for (int idx : {(2 * y) * w + 2 * x + 1, (2 * y + 1) * w + 2 * x, (2 * y + 1) * w + 2 * x + 1})
            if (z[idx] > z[best]) best = idx;
          const Eigen::Index o = static_cast<Eigen::Index>(y) * wo + x;
          // max commutes with the monotone ReLU
          pooled(o, c) = std::max(z[best], 0.0);
          if (cache) argmax[static_cast<std::size_t>(c) * ho * wo + o] = best;
        }
    }
    if (cache) cache->conv[l] = {std::move(cols), std::move(pre), std::move(argmax)};
    act = std::move(pooled);
    h = ho;
    w = wo;
  }
  return Eigen::Map<const Eigen::VectorXd>(act.data(), act.size());
}

void conv_backward(const EvaluatorModel& model, const ImageCache& cache, const Eigen::VectorXd& grad_flat,
                   std::span<double> grad) {
  const EvaluatorSpec& spec = model.spec();
  int h = spec.height / 4, w = spec.width / 4;  // input size of conv3
  Matrix grad_pooled = Eigen::Map<const Matrix>(grad_flat.data(), static_cast<Eigen::Index>(h / 2) * (w / 2),
                                                kConvChannels[3]);
  for (int l = 2; l >= 0; --l) {
    const ConvCache& cc = cache.conv[l];
    const Eigen::Index cout = cc.pre.cols();
    const int ho = h / 2, wo = w / 2;
    Matrix grad_pre = Matrix::Zero(cc.pre.rows(), cout);
    for (Eigen::Index c = 0; c < cout; ++c)
      for (Eigen::Index o = 0; o < static_cast<Eigen::Index>(ho) * wo; ++o) {
        const int idx = cc.argmax[static_cast<std::size_t>(c) * ho * wo + o];
        if (cc.pre(idx, c) > 0.0) grad_pre(idx, c) += grad_pooled(o, c);
      }
    Eigen::Map<Matrix> gw(grad.data() + model.layer_offset(l), model.layer_out(l), model.layer_in(l));
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + model.layer_offset(l) + gw.size(), model.layer_out(l));
    const Matrix local_w = grad_pre.transpose() * cc.cols;
    const Eigen::VectorXd local_b = grad_pre.colwise().sum().transpose();
    gw += local_w;
    gb += local_b;
    if (l == 0) break;
    const Matrix grad_cols = grad_pre * model.weights(l);
    grad_pooled = col2im(grad_cols, h, w, kConvChannels[l]);
    h *= 2;
    w *= 2;
  }
}

void check_input(const EvaluatorSpec& spec, const Image& image) {
  if (image.width != spec.width || image.height != spec.height)
    throw ValidationError("evaluator input must be " + std::to_string(spec.width) + "x" +
                              std::to_string(spec.height) + ", got " + std::to_string(image.width) + "x" +
                              std::to_string(image.height),
                          "image");
}

double clamp_open(double p) {
  return std::clamp(p, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

}  // namespace

EvaluatorModel::EvaluatorModel(const EvaluatorSpec& spec) : spec_(spec) {
  if (spec.height < 8 || spec.width < 8 || spec.height % 8 != 0 || spec.width % 8 != 0)
    throw ValidationError("evaluator input height and width must be positive multiples of 8", "input_shape");
  if (spec.fc1 < 1 || spec.fc2 < 1) throw ValidationError("fully connected widths must be >= 1", "fc");
  if (!(spec.dropout >= 0.0 && spec.dropout < 1.0)) throw ValidationError("dropout must lie in [0,1)", "dropout");
  const int ins[kLayerCount] = {3 * 9, 32 * 9, 64 * 9, spec.flatten_dim(), spec.fc1, spec.fc2};
  const int outs[kLayerCount] = {32, 64, 128, spec.fc1, spec.fc2, 1};
  std::size_t offset = 0;
  for (int l = 0; l < kLayerCount; ++l) {
    layers_[l] = {ins[l], outs[l], offset};
    offset += static_cast<std::size_t>(ins[l]) * outs[l] + outs[l];
  }
  params_.assign(offset, 0.0);
}

Matrix EvaluatorModel::weights(int layer) const {
  const auto& s = layers_[layer];
  return Eigen::Map<const Matrix>(params_.data() + s.offset, s.out, s.in);
}

Eigen::VectorXd EvaluatorModel::bias(int layer) const {
  const auto& s = layers_[layer];
  const std::size_t offset = s.offset + static_cast<std::size_t>(s.in) * s.out;
  return Eigen::Map<const Eigen::VectorXd>(params_.data() + offset, s.out);
}

EvaluatorModel evaluator_init(const EvaluatorSpec& spec, std::uint64_t seed) {
  EvaluatorModel model(spec);
  Rng rng(derive_seed({seed, 0x6576616cULL}));
  for (int l = 0; l < EvaluatorModel::kLayerCount; ++l) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / model.layer_in(l)));
    double* w = model.params().data() + model.layer_offset(l);
    const std::size_t n = static_cast<std::size_t>(model.layer_in(l)) * model.layer_out(l);
    for (std::size_t i = 0; i < n; ++i) w[i] = dist(rng);
  }
  return model;
}

DropoutMasks draw_masks(const EvaluatorSpec& spec, int batch, Rng& rng) {
  const double keep = 1.0 - spec.dropout;
  std::bernoulli_distribution bit(keep);
  DropoutMasks m{Matrix(spec.fc1, batch), Matrix(spec.fc2, batch)};
  for (Matrix* mat : {&m.fc1, &m.fc2})
    for (Eigen::Index j = 0; j < mat->cols(); ++j)
      for (Eigen::Index i = 0; i < mat->rows(); ++i) (*mat)(i, j) = bit(rng) ? 1.0 / keep : 0.0;
  return m;
}

Image prepare_input(const EvaluatorSpec& spec, const Image& image) {
  return resize_bilinear(image, spec.width, spec.height);
}

double bce_loss_and_gradient(const EvaluatorModel& model, std::span<const Image> images,
                             std::span<const int> labels, const DropoutMasks* masks, std::span<double> grad,
                             std::vector<double>* probabilities) {
  const auto batch = static_cast<Eigen::Index>(images.size());
  if (batch == 0) throw ValidationError("empty batch", "images");
  if (!labels.empty() && labels.size() != images.size()) throw ValidationError("label count mismatch", "labels");
  const bool want_grad = !grad.empty();
  if (want_grad && (grad.size() != model.param_count() || labels.empty()))
    throw ValidationError("gradient needs labels and a buffer matching the parameter count", "grad");
  for (const auto& img : images) check_input(model.spec(), img);

  const int flat = model.spec().flatten_dim();
  Matrix features(flat, batch);
  std::vector<ImageCache> caches(want_grad ? images.size() : 0);
  parallel_for(images.size(), [&](std::size_t i) {
    features.col(static_cast<Eigen::Index>(i)) = conv_forward(model, images[i], want_grad ? &caches[i] : nullptr);
  });

  Matrix z1 = model.weights(3) * features;
  z1.colwise() += model.bias(3);
  Matrix a1 = z1.cwiseMax(0.0);
  if (masks) a1 = a1.cwiseProduct(masks->fc1);
  Matrix z2 = model.weights(4) * a1;
  z2.colwise() += model.bias(4);
  Matrix a2 = z2.cwiseMax(0.0);
  if (masks) a2 = a2.cwiseProduct(masks->fc2);
  Matrix logits = model.weights(5) * a2;
  logits.array() += model.bias(5)(0);

  if (probabilities) {
    probabilities->resize(images.size());
    for (Eigen::Index j = 0; j < batch; ++j) (*probabilities)[j] = sigmoid(logits(0, j));
  }
  if (labels.empty()) return 0.0;

  double loss = 0.0;
  Matrix grad_logits(1, batch);
  for (Eigen::Index j = 0; j < batch; ++j) {
    const double z = logits(0, j);
    const int y = labels[j];
    loss += softplus(z) - y * z;
    grad_logits(0, j) = (sigmoid(z) - y) / static_cast<double>(batch);
  }
  loss /= static_cast<double>(batch);
  if (!want_grad) return loss;

  auto accumulate = [&](int layer, const Matrix& delta, const Matrix& input) {
    Eigen::Map<Matrix> gw(grad.data() + model.layer_offset(layer), model.layer_out(layer), model.layer_in(layer));
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + model.layer_offset(layer) + gw.size(), model.layer_out(layer));
    const Matrix local_w = delta * input.transpose();
    const Eigen::VectorXd local_b = delta.rowwise().sum();
    gw += local_w;
    gb += local_b;
  };
  accumulate(5, grad_logits, a2);
  Matrix d2 = model.weights(5).transpose() * grad_logits;
  if (masks) d2 = d2.cwiseProduct(masks->fc2);
  d2 = d2.cwiseProduct((z2.array() > 0.0).cast<double>().matrix());
  accumulate(4, d2, a1);
  Matrix d1 = model.weights(4).transpose() * d2;
  if (masks) d1 = d1.cwiseProduct(masks->fc1);
  d1 = d1.cwiseProduct((z1.array() > 0.0).cast<double>().matrix());
  accumulate(3, d1, features);
  const Matrix grad_features = model.weights(3).transpose() * d1;

  // Conv parameters: per-image partial gradients, summed in image order.
  const std::size_t conv_params = model.layer_offset(3);
  std::vector<std::vector<double>> partial(images.size());
  parallel_for(images.size(), [&](std::size_t i) {
    partial[i].assign(conv_params, 0.0);
    std::vector<double>& buf = partial[i];
    conv_backward(model, caches[i], grad_features.col(static_cast<Eigen::Index>(i)), std::span<double>(buf));
    caches[i] = ImageCache{};
  });
  for (const auto& p : partial)
    for (std::size_t k = 0; k < conv_params; ++k) grad[k] += p[k];
  return loss;
}

double evaluator_forward(const EvaluatorModel& model, const Image& image, Mode mode, Rng* rng) {
  check_input(model.spec(), image);
  std::vector<double> p;
  if (mode == Mode::kTrain) {
    if (!rng) throw ValidationError("train mode needs an rng for dropout", "rng");
    const DropoutMasks masks = draw_masks(model.spec(), 1, *rng);
    bce_loss_and_gradient(model, std::span<const Image>(&image, 1), {}, &masks, {}, &p);
    return p[0];
  }
  bce_loss_and_gradient(model, std::span<const Image>(&image, 1), {}, nullptr, {}, &p);
  return clamp_open(p[0]);
}

std::vector<double> predict(const EvaluatorModel& model, std::span<const Image> images) {
  std::vector<double> out;
  out.reserve(images.size());
  constexpr std::size_t kBatch = 32;
  for (std::size_t begin = 0; begin < images.size(); begin += kBatch) {
    std::vector<double> p;
    bce_loss_and_gradient(model, images.subspan(begin, std::min(kBatch, images.size() - begin)), {}, nullptr, {},
                          &p);
    for (double v : p) out.push_back(clamp_open(v));
  }
  return out;
}

TrainResult evaluator_train(const EvaluatorModel& model, std::span<const Image> images, std::span<const int> labels,
                            const TrainOptions& options) {
  if (images.size() != labels.size()) throw ValidationError("image and label counts differ", "labels");
  if (options.epochs < 0) throw ValidationError("epochs must be >= 0", "epochs");
  if (options.batch_size < 1) throw ValidationError("batch size must be >= 1", "batch");
  if (!(options.learning_rate > 0.0)) throw ValidationError("learning rate must be positive", "lr");
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  if (images.empty() || positives == 0 || positives == static_cast<long>(labels.size()))
    throw ValidationError("evaluator training needs both classes present", "labels");

  TrainResult result{model, {}};
  if (options.epochs == 0) return result;
  EvaluatorModel& m = result.model;
  const std::size_t n = m.param_count();
  std::vector<double> adam_m(n, 0.0), adam_v(n, 0.0), grad(n);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long step = 0;

  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    Rng rng(derive_seed({options.seed, static_cast<std::uint64_t>(epoch)}));
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += options.batch_size) {
      const std::size_t count = std::min<std::size_t>(options.batch_size, order.size() - begin);
      std::vector<Image> batch;
      std::vector<int> batch_labels;
      batch.reserve(count);
      for (std::size_t k = 0; k < count; ++k) {
        batch.push_back(images[order[begin + k]]);
        batch_labels.push_back(labels[order[begin + k]]);
      }
      const DropoutMasks masks = draw_masks(m.spec(), static_cast<int>(count), rng);
      std::fill(grad.begin(), grad.end(), 0.0);
      std::vector<double> probs;
      const double loss = bce_loss_and_gradient(m, batch, batch_labels, &masks, grad, &probs);
      if (!std::isfinite(loss))
        throw NumericError("non-finite evaluator loss in epoch " + std::to_string(epoch) + " at item " +
                           std::to_string(begin));
      loss_sum += loss * static_cast<double>(count);
      for (std::size_t k = 0; k < count; ++k) correct += (probs[k] >= 0.5) == (batch_labels[k] == 1);

      ++step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      auto params = m.params();
      for (std::size_t i = 0; i < n; ++i) {
        adam_m[i] = beta1 * adam_m[i] + (1.0 - beta1) * grad[i];
        adam_v[i] = beta2 * adam_v[i] + (1.0 - beta2) * grad[i] * grad[i];
        params[i] -= options.learning_rate * (adam_m[i] / c1) / (std::sqrt(adam_v[i] / c2) + eps);
      }
    }
    result.history.push_back({loss_sum / static_cast<double>(order.size()),
                              static_cast<double>(correct) / static_cast<double>(order.size())});
  }
  return result;
}

ClassifierMetrics score_predictions(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ValidationError("score and label counts differ", "labels");
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) throw ValidationError("ROC AUC needs both classes present", "labels");

  ClassifierMetrics out;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) correct += (scores[i] >= 0.5) == (labels[i] == 1);
  out.accuracy = static_cast<double>(correct) / static_cast<double>(scores.size());

  // Mann-Whitney U with average ranks for ties.
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double positive_rank_sum = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      if (labels[idx[k]] == 1) positive_rank_sum += avg_rank;
    i = j + 1;
  }
  const double np = static_cast<double>(positives), nn = static_cast<double>(negatives);
  out.roc_auc = (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
  return out;
}

ClassifierMetrics evaluator_metrics(const EvaluatorModel& model, std::span<const Image> images,
                                    std::span<const int> labels) {
  const std::vector<double> scores = predict(model, images);
  return score_predictions(scores, labels);
}

void save_evaluator(const EvaluatorModel& model, const std::filesystem::path& path) {
  binio::Writer w(path);
  w.put_bytes(kMagic, 8);
  w.put(kVersion);
  w.put<std::int32_t>(model.spec().height);
  w.put<std::int32_t>(model.spec().width);
  w.put<std::int32_t>(model.spec().fc1);
  w.put<std::int32_t>(model.spec().fc2);
  w.put(model.spec().dropout);
  w.put<std::uint64_t>(model.param_count());
  w.put_bytes(model.params().data(), model.param_count() * sizeof(double));
  w.finish();
}

EvaluatorModel load_evaluator(const std::filesystem::path& path) {
  binio::Reader r(path);
  r.expect_magic(kMagic);
  if (r.get<std::uint32_t>() != kVersion)
    throw LoadError(LoadFailure::kCorruptFile, "unsupported evaluator checkpoint version in '" + path.string() + "'");
  EvaluatorSpec spec;
  spec.height = r.get<std::int32_t>();
  spec.width = r.get<std::int32_t>();
  spec.fc1 = r.get<std::int32_t>();
  spec.fc2 = r.get<std::int32_t>();
  spec.dropout = r.get<double>();
  EvaluatorModel model;
  try {
    model = EvaluatorModel(spec);
  } catch (const ValidationError& e) {
    throw LoadError(LoadFailure::kCorruptFile, "invalid evaluator checkpoint '" + path.string() + "': " + e.what());
  }
  if (r.get<std::uint64_t>() != model.param_count())
    throw LoadError(LoadFailure::kCorruptFile, "parameter count mismatch in '" + path.string() + "'");
  r.get_bytes(model.params().data(), model.param_count() * sizeof(double));
  r.expect_end();
  return model;
}

}  // namespace recap::evaluator
