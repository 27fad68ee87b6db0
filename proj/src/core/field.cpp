#include "core/field.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "core/binary_io.hpp"
#include "core/errors.hpp"
#include "core/parallel.hpp"
#include "core/random.hpp"
#include "core/volume.hpp"

namespace recap::nerf {
namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void encode_into(const Vec3& unit_point, int levels, double* out) {
  for (int a = 0; a < 3; ++a) out[a] = unit_point[a];
  double freq = std::numbers::pi;
  for (int l = 0; l < levels; ++l, freq *= 2.0) {
    double* block = out + 3 + 6 * l;
    for (int a = 0; a < 3; ++a) {
      block[a] = std::sin(freq * unit_point[a]);
      block[3 + a] = std::cos(freq * unit_point[a]);
    }
  }
}

constexpr char kMagic[9] = "RCPFIELD";
constexpr std::uint32_t kVersion = 1;

}  // namespace

RadianceField::RadianceField(const FieldConfig& config, const camera::Box& bounds, const Vec3& background)
    : config_(config), bounds_(bounds), background_(background) {
  if (config.encoding_levels < 0) throw ValidationError("encoding_levels must be >= 0", "encoding_levels");
  if (config.hidden_width < 1) throw ValidationError("hidden_width must be >= 1", "hidden_width");
  if (config.hidden_layers < 1) throw ValidationError("hidden_layers must be >= 1", "hidden_layers");
  if (!((bounds.max - bounds.min).array() > 0.0).all())
    throw ValidationError("field bounds must have positive extent on every axis", "bounds");
  std::size_t offset = 0;
  int in = config.input_dim();
  for (int l = 0; l <= config.hidden_layers; ++l) {
    const int out = l < config.hidden_layers ? config.hidden_width : 4;
    layers_.push_back({in, out, offset});
    offset += static_cast<std::size_t>(in) * out + out;
    in = out;
  }
  params_.assign(offset, 0.0);
}

RadianceField RadianceField::initialized(const FieldConfig& config, const camera::Box& bounds,
                                         const Vec3& background, std::uint64_t seed) {
  RadianceField field(config, bounds, background);
  Rng rng(derive_seed({seed, 0x6669656c64ULL}));
  for (const auto& layer : field.layers_) {
    const bool is_output = &layer == &field.layers_.back();
    const double stddev = is_output ? std::sqrt(1.0 / layer.in) : std::sqrt(2.0 / layer.in);
    std::normal_distribution<double> dist(0.0, stddev);
    for (std::size_t i = 0; i < static_cast<std::size_t>(layer.in) * layer.out; ++i)
      field.params_[layer.offset + i] = dist(rng);
  }
  return field;
}

Matrix RadianceField::weights(int layer) const {
  const auto& s = layers_.at(layer);
  return Eigen::Map<const Matrix>(params_.data() + s.offset, s.out, s.in);
}

Eigen::VectorXd RadianceField::bias(int layer) const {
  const auto& s = layers_.at(layer);
  const std::size_t offset = s.offset + static_cast<std::size_t>(s.in) * s.out;
  return Eigen::Map<const Eigen::VectorXd>(params_.data() + offset, s.out);
}

Vec3 normalize_to_bounds(const Vec3& point, const camera::Box& bounds) {
  const Vec3 unit = 2.0 * (point - bounds.min).cwiseQuotient(bounds.max - bounds.min) - Vec3::Ones();
  return unit.cwiseMax(-1.0).cwiseMin(1.0);
}

std::vector<double> positional_encode(const Vec3& x, int levels) {
  if (levels < 0) throw ValidationError("levels must be >= 0", "levels");
  std::vector<double> out(3 + 6 * static_cast<std::size_t>(levels));
  encode_into(x, levels, out.data());
  return out;
}

void forward_batch(const RadianceField& field, const Matrix& points, Eigen::RowVectorXd& sigma, Matrix& color,
                   ForwardCache* cache) {
  const Eigen::Index n = points.cols();
  const int levels = field.config().encoding_levels;
  Matrix input(field.config().input_dim(), n);
  for (Eigen::Index i = 0; i < n; ++i)
    encode_into(normalize_to_bounds(points.col(i), field.bounds()), levels, input.col(i).data());

  const int count = field.layer_count();
  if (cache) {
    cache->pre.resize(count);
    cache->post.resize(count);
  }
  Matrix act = std::move(input);
  Matrix z;
  for (int l = 0; l < count; ++l) {
    z.noalias() = field.weights(l) * act;
    z.colwise() += field.bias(l);
    if (cache) {
      cache->post[l] = std::move(act);
      cache->pre[l] = z;
    }
    if (l + 1 < count) act = z.cwiseMax(0.0);
  }
  sigma.resize(n);
  color.resize(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sigma[i] = softplus(z(0, i));
    for (int c = 0; c < 3; ++c) color(c, i) = sigmoid(z(1 + c, i));
  }
}

void backward_batch(const RadianceField& field, const ForwardCache& cache, const Eigen::RowVectorXd& grad_sigma,
                    const Matrix& grad_color, std::span<double> grad) {
  const int count = field.layer_count();
  const Matrix& out = cache.pre[count - 1];
  const Eigen::Index n = out.cols();
  Matrix delta(4, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    delta(0, i) = grad_sigma[i] * sigmoid(out(0, i));
    for (int c = 0; c < 3; ++c) {
      const double s = sigmoid(out(1 + c, i));
      delta(1 + c, i) = grad_color(c, i) * s * (1.0 - s);
    }
  }
  for (int l = count - 1; l >= 0; --l) {
    const auto w = field.weights(l);
    double* gw = grad.data() + field.layer_offset(l);
    Eigen::Map<Matrix> grad_w(gw, w.rows(), w.cols());
    Eigen::Map<Eigen::VectorXd> grad_b(gw + w.size(), w.rows());
    const Matrix local_w = delta * cache.post[l].transpose();
    const Eigen::VectorXd local_b = delta.rowwise().sum();
    grad_w += local_w;
    grad_b += local_b;
    if (l == 0) break;
    Matrix back = w.transpose() * delta;
    delta = back.cwiseProduct((cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
}

PointOutput field_forward(const RadianceField& field, const Vec3& point, bool want_grad) {
  Eigen::RowVectorXd sigma;
  Matrix color;
  PointOutput out;
  if (want_grad) out.tape.emplace();
  forward_batch(field, Matrix(point), sigma, color, want_grad ? &*out.tape : nullptr);
  out.sigma = sigma[0];
  out.color = color.col(0);
  return out;
}

Image render_view(const RadianceField& field, const camera::Pose& pose, const camera::Intrinsics& intr,
                  int samples_per_ray, std::uint64_t seed) {
  if (samples_per_ray < 1) throw ValidationError("samples_per_ray must be >= 1", "samples_per_ray");
  Image image(intr.width(), intr.height());
  const int w = intr.width();
  parallel_for(static_cast<std::size_t>(intr.height()), [&](std::size_t row) {
    const int py = static_cast<int>(row);
    std::vector<volume::RaySampleSet> rays(w);
    std::vector<int> hit;
    hit.reserve(w);
    for (int px = 0; px < w; ++px) {
      const camera::Ray ray = camera::pixel_ray(intr, pose, px, py);
      double t0 = 0.0, t1 = 0.0;
      if (!camera::intersect_box(ray, field.bounds(), 0.0, std::numeric_limits<double>::infinity(), t0, t1)) {
        for (int c = 0; c < 3; ++c) image.at(px, py, c) = field.background()[c];
        continue;
      }
      Rng rng(derive_seed({seed, static_cast<std::uint64_t>(px), static_cast<std::uint64_t>(py)}));
      rays[px] = volume::sample_stratified(ray, t0, t1, samples_per_ray, rng);
      hit.push_back(px);
    }
    if (hit.empty()) return;
    Matrix points(3, static_cast<Eigen::Index>(hit.size()) * samples_per_ray);
    for (std::size_t k = 0; k < hit.size(); ++k)
      for (int s = 0; s < samples_per_ray; ++s) points.col(k * samples_per_ray + s) = rays[hit[k]].points[s];
    Eigen::RowVectorXd sigma;
    Matrix color;
    forward_batch(field, points, sigma, color);
    for (std::size_t k = 0; k < hit.size(); ++k) {
      const Eigen::Index base = static_cast<Eigen::Index>(k) * samples_per_ray;
      const auto result = volume::composite(std::span<const double>(sigma.data() + base, samples_per_ray),
                                            std::span<const double>(color.col(base).data(), 3 * samples_per_ray),
                                            rays[hit[k]].delta, field.background());
      for (int c = 0; c < 3; ++c) image.at(hit[k], py, c) = result.color[c];
    }
  });
  return image;
}

std::vector<CloudPoint> extract_point_cloud(const RadianceField& field, const camera::Box& bounds, int resolution,
                                            double sigma_threshold) {
  if (resolution < 2) throw ValidationError("resolution must be >= 2", "resolution");
  const Vec3 step = bounds.extent() / resolution;
  const std::size_t r = static_cast<std::size_t>(resolution);
  std::vector<std::vector<CloudPoint>> slabs(r);
  parallel_for(r, [&](std::size_t k) {
    Matrix points(3, static_cast<Eigen::Index>(r * r));
    for (std::size_t j = 0; j < r; ++j)
      for (std::size_t i = 0; i < r; ++i)
        points.col(static_cast<Eigen::Index>(j * r + i)) =
            bounds.min + Vec3((i + 0.5) * step.x(), (j + 0.5) * step.y(), (k + 0.5) * step.z());
    Eigen::RowVectorXd sigma;
    Matrix color;
    forward_batch(field, points, sigma, color);
    for (Eigen::Index c = 0; c < points.cols(); ++c)
      if (sigma[c] > sigma_threshold) slabs[k].push_back({points.col(c), color.col(c)});
  });
  std::vector<CloudPoint> cloud;
  for (auto& slab : slabs) cloud.insert(cloud.end(), slab.begin(), slab.end());
  return cloud;
}

void write_ply(const std::vector<CloudPoint>& cloud, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n"
         "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  char line[128];
  for (const auto& p : cloud) {
    auto byte = [](double v) { return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
    std::snprintf(line, sizeof line, "%.6f %.6f %.6f %d %d %d\n", p.position.x(), p.position.y(), p.position.z(),
                  byte(p.color.x()), byte(p.color.y()), byte(p.color.z()));
    out << line;
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void save_field(const RadianceField& field, const std::filesystem::path& path) {
  binio::Writer w(path);
  w.put_bytes(kMagic, 8);
  w.put(kVersion);
  w.put<std::int32_t>(field.config().encoding_levels);
  w.put<std::int32_t>(field.config().hidden_width);
  w.put<std::int32_t>(field.config().hidden_layers);
  for (int a = 0; a < 3; ++a) w.put(field.bounds().min[a]);
  for (int a = 0; a < 3; ++a) w.put(field.bounds().max[a]);
  for (int a = 0; a < 3; ++a) w.put(field.background()[a]);
  w.put<std::uint64_t>(field.param_count());
  w.put_bytes(field.params().data(), field.param_count() * sizeof(double));
  w.finish();
}

RadianceField load_field(const std::filesystem::path& path) {
  binio::Reader r(path);
  r.expect_magic(kMagic);
  if (r.get<std::uint32_t>() != kVersion)
    throw LoadError(LoadFailure::kCorruptFile, "unsupported field checkpoint version in '" + path.string() + "'");
  FieldConfig cfg;
  cfg.encoding_levels = r.get<std::int32_t>();
  cfg.hidden_width = r.get<std::int32_t>();
  cfg.hidden_layers = r.get<std::int32_t>();
  camera::Box bounds;
  Vec3 background;
  for (int a = 0; a < 3; ++a) bounds.min[a] = r.get<double>();
  for (int a = 0; a < 3; ++a) bounds.max[a] = r.get<double>();
  for (int a = 0; a < 3; ++a) background[a] = r.get<double>();
  RadianceField field;
  try {
    field = RadianceField(cfg, bounds, background);
  } catch (const ValidationError& e) {
    throw LoadError(LoadFailure::kCorruptFile, "invalid field checkpoint '" + path.string() + "': " + e.what());
  }
  if (r.get<std::uint64_t>() != field.param_count())
    throw LoadError(LoadFailure::kCorruptFile, "parameter count mismatch in '" + path.string() + "'");
  r.get_bytes(field.params().data(), field.param_count() * sizeof(double));
  r.expect_end();
  return field;
}

}  // namespace recap::nerf
