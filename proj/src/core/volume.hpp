#pragma once

#include <span>
#include <vector>

#include "core/camera.hpp"
#include "core/random.hpp"

namespace recap::volume {

/// Samples along one ray. `delta[i] = t[i+1] - t[i]`, and the last interval
/// runs to the far bound. sigma and color are filled in by whoever evaluates
/// the field (the oracle or the radiance field).
struct RaySampleSet {
  std::vector<double> t;
  std::vector<double> delta;
  std::vector<Vec3> points;
  std::vector<double> sigma;  // per sample, 1/m
  std::vector<double> color;  // per sample RGB, interleaved

  std::size_t size() const { return t.size(); }
  bool empty() const { return t.empty(); }
};

/// One t drawn uniformly in each of n equal strata of [near, far].
RaySampleSet sample_stratified(const camera::Ray& ray, double near, double far, int n, Rng& rng);

/// Deterministic variant: t at each stratum midpoint.
RaySampleSet sample_midpoints(const camera::Ray& ray, double near, double far, int n);

struct Composite {
  Vec3 color = Vec3::Zero();
  double transmittance_final = 1.0;
};

/// Emission-absorption compositing:
///   alpha_i = 1 - exp(-sigma_i delta_i),  T_1 = 1,  T_{i+1} = T_i (1 - alpha_i),
///   w_i = T_i alpha_i,  color = sum w_i c_i + T_final * background.
/// `weights` may be empty; otherwise it receives w_i. Both the oracle renderer
/// and the radiance field go through this function.
Composite composite(std::span<const double> sigma, std::span<const double> color, std::span<const double> delta,
                    const Vec3& background, std::span<double> weights = {});

/// Convenience wrapper over a filled RaySampleSet.
Composite volume_render(const RaySampleSet& samples, const Vec3& background, std::vector<double>* weights = nullptr);

/// Reverse pass of composite: given dL/dcolor, writes dL/dsigma_i and
/// dL/dc_i (interleaved RGB).
void composite_backward(std::span<const double> sigma, std::span<const double> color, std::span<const double> delta,
                        const Vec3& background, const Vec3& grad_color, std::span<double> grad_sigma,
                        std::span<double> grad_rgb);

}  // namespace recap::volume
