#include "core/volume.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace recap::volume {
namespace {

RaySampleSet skeleton(double near, double far, int n) {
  if (n < 1) throw ValidationError("sample count must be >= 1", "n");
  if (!(far > near)) throw ValidationError("far must exceed near", "far");
  RaySampleSet s;
  s.t.resize(n);
  s.delta.resize(n);
  s.points.resize(n);
  return s;
}

void finish(RaySampleSet& s, const camera::Ray& ray, double far) {
  const std::size_t n = s.t.size();
  for (std::size_t i = 0; i + 1 < n; ++i) s.delta[i] = s.t[i + 1] - s.t[i];
  s.delta[n - 1] = far - s.t[n - 1];
  for (std::size_t i = 0; i < n; ++i) s.points[i] = ray.origin + s.t[i] * ray.direction;
}

}  // namespace

RaySampleSet sample_stratified(const camera::Ray& ray, double near, double far, int n, Rng& rng) {
  RaySampleSet s = skeleton(near, far, n);
  const double step = (far - near) / n;
  for (int i = 0; i < n; ++i) s.t[i] = near + (i + uniform01(rng)) * step;
  finish(s, ray, far);
  return s;
}

RaySampleSet sample_midpoints(const camera::Ray& ray, double near, double far, int n) {
  RaySampleSet s = skeleton(near, far, n);
  const double step = (far - near) / n;
  for (int i = 0; i < n; ++i) s.t[i] = near + (i + 0.5) * step;
  finish(s, ray, far);
  return s;
}

Composite composite(std::span<const double> sigma, std::span<const double> color, std::span<const double> delta,
                    const Vec3& background, std::span<double> weights) {
  Composite out;
  double transmittance = 1.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const double survive = std::exp(-sigma[i] * delta[i]);
    const double w = transmittance * (1.0 - survive);
    out.color[0] += w * color[3 * i];
    out.color[1] += w * color[3 * i + 1];
    out.color[2] += w * color[3 * i + 2];
    if (!weights.empty()) weights[i] = w;
    transmittance *= survive;
  }
  out.transmittance_final = transmittance;
  out.color += transmittance * background;
  return out;
}

Composite volume_render(const RaySampleSet& samples, const Vec3& background, std::vector<double>* weights) {
  if (weights) weights->assign(samples.size(), 0.0);
  return composite(samples.sigma, samples.color, samples.delta, background,
                   weights ? std::span<double>(*weights) : std::span<double>());
}

void composite_backward(std::span<const double> sigma, std::span<const double> color, std::span<const double> delta,
                        const Vec3& background, const Vec3& grad_color, std::span<double> grad_sigma,
                        std::span<double> grad_rgb) {
  const std::size_t n = sigma.size();
  // Forward sweep for T_{i+1} and w_i; reuse grad_sigma as scratch for w_i.
  thread_local std::vector<double> next_t;
  next_t.resize(n);
  double transmittance = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double survive = std::exp(-sigma[i] * delta[i]);
    grad_sigma[i] = transmittance * (1.0 - survive);
    transmittance *= survive;
    next_t[i] = transmittance;
  }
  // dC/dsigma_j = delta_j (T_{j+1} c_j - sum_{i>j} w_i c_i - T_final bg)
  double tail = transmittance * grad_color.dot(background);
  for (std::size_t j = n; j-- > 0;) {
    const double w = grad_sigma[j];
    const double gc = grad_color[0] * color[3 * j] + grad_color[1] * color[3 * j + 1] +
                      grad_color[2] * color[3 * j + 2];
    grad_rgb[3 * j] = w * grad_color[0];
    grad_rgb[3 * j + 1] = w * grad_color[1];
    grad_rgb[3 * j + 2] = w * grad_color[2];
    grad_sigma[j] = delta[j] * (next_t[j] * gc - tail);
    tail += w * gc;
  }
}

}  // namespace recap::volume
