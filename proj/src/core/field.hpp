#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "core/camera.hpp"
#include "core/image.hpp"

namespace recap::nerf {

using Matrix = Eigen::MatrixXd;

struct FieldConfig {
  int encoding_levels = 6;
  int hidden_width = 128;
  int hidden_layers = 4;

  int input_dim() const { return 3 + 6 * encoding_levels; }
  bool operator==(const FieldConfig&) const = default;
};

/// Positional-encoded MLP mapping a point to density (softplus head) and RGB
/// (sigmoid head). Parameters live in one flat vector; layer l occupies
/// [W_l column-major (out x in), b_l (out)] in order, hidden layers first and
/// the 4-row output layer last (row 0 density, rows 1..3 color).
class RadianceField {
 public:
  RadianceField() = default;
  /// All parameters zero.
  RadianceField(const FieldConfig& config, const camera::Box& bounds, const Vec3& background);

  /// He-normal hidden weights, zero biases. Deterministic in seed.
  static RadianceField initialized(const FieldConfig& config, const camera::Box& bounds, const Vec3& background,
                                   std::uint64_t seed);

  const FieldConfig& config() const { return config_; }
  const camera::Box& bounds() const { return bounds_; }
  const Vec3& background() const { return background_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }

  int layer_count() const { return static_cast<int>(layers_.size()); }
  /// Offset of layer l's weight block in params().
  std::size_t layer_offset(int layer) const { return layers_.at(layer).offset; }
  /// Aligned copies, so products do not depend on the address of params().
  Matrix weights(int layer) const;
  Eigen::VectorXd bias(int layer) const;

  bool operator==(const RadianceField& o) const {
    return config_ == o.config_ && bounds_.min == o.bounds_.min && bounds_.max == o.bounds_.max &&
           background_ == o.background_ && params_ == o.params_;
  }

 private:
  struct LayerShape {
    int in = 0;
    int out = 0;
    std::size_t offset = 0;
  };
  FieldConfig config_;
  camera::Box bounds_;
  Vec3 background_ = Vec3::Zero();
  std::vector<LayerShape> layers_;
  std::vector<double> params_;
};

/// [x, sin(2^0 pi x), cos(2^0 pi x), ..., sin(2^{L-1} pi x), cos(2^{L-1} pi x)],
/// each sin/cos block covering the three components in order.
std::vector<double> positional_encode(const Vec3& x, int levels);

/// Maps a world point into [-1,1]^3 relative to `bounds`, clamping outside.
Vec3 normalize_to_bounds(const Vec3& point, const camera::Box& bounds);

/// Activations kept by a batched forward pass for the reverse pass.
struct ForwardCache {
  std::vector<Matrix> pre;   // pre-activation per layer (hidden and output)
  std::vector<Matrix> post;  // post[0] = encoded input, post[l+1] = relu(pre[l]) for hidden layers
};

/// Batched field evaluation for points given as columns of a 3 x N matrix.
/// sigma is 1 x N, color is 3 x N.
void forward_batch(const RadianceField& field, const Matrix& points, Eigen::RowVectorXd& sigma, Matrix& color,
                   ForwardCache* cache = nullptr);

/// Accumulates parameter gradients (into `grad`, same layout as params) given
/// dL/dsigma (1 x N) and dL/dcolor (3 x N).
void backward_batch(const RadianceField& field, const ForwardCache& cache, const Eigen::RowVectorXd& grad_sigma,
                    const Matrix& grad_color, std::span<double> grad);

struct PointOutput {
  double sigma = 0.0;
  Vec3 color = Vec3::Zero();
  std::optional<ForwardCache> tape;
};

PointOutput field_forward(const RadianceField& field, const Vec3& point, bool want_grad = false);

/// Renders a full view: per pixel, stratified samples over the part of the
/// ray inside the field bounds, seeded from (seed, px, py).
Image render_view(const RadianceField& field, const camera::Pose& pose, const camera::Intrinsics& intr,
                  int samples_per_ray, std::uint64_t seed);

struct CloudPoint {
  Vec3 position;
  Vec3 color;
};

/// Voxel centers of a resolution^3 grid over `bounds` whose density exceeds
/// `sigma_threshold`.
std::vector<CloudPoint> extract_point_cloud(const RadianceField& field, const camera::Box& bounds, int resolution,
                                            double sigma_threshold);

/// ASCII PLY, float xyz and uchar rgb per vertex.
void write_ply(const std::vector<CloudPoint>& cloud, const std::filesystem::path& path);

/// Binary checkpoint, little-endian:
///   char[8] "RCPFIELD" | u32 version (1) | i32 encoding_levels | i32 hidden_width
///   | i32 hidden_layers | f64[3] bounds.min | f64[3] bounds.max | f64[3] background
///   | u64 param_count | f64[param_count] params
void save_field(const RadianceField& field, const std::filesystem::path& path);
RadianceField load_field(const std::filesystem::path& path);

}  // namespace recap::nerf
