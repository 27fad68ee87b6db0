#pragma once

#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "core/image.hpp"

namespace recap::metrics {

/// Returned by psnr() when the images are identical.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

inline bool is_identical_psnr(double db) { return db == kPsnrIdentical; }

/// 10 log10(max_val^2 / MSE) with MSE over all pixels and channels jointly.
/// Throws ValidationError on a shape mismatch.
double psnr(const Image& a, const Image& b, double max_val = 1.0);

struct SsimConfig {
  int window = 11;
  double gaussian_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;

  double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
};

/// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
std::vector<double> gaussian_taps(const SsimConfig& cfg);

/// Single-scale SSIM on luma, averaged over every window position that fits
/// entirely inside the image (no padding). Throws ValidationError if the
/// image is smaller than the window or shapes differ.
double ssim(const Image& a, const Image& b, const SsimConfig& cfg = {});

/// Empirical CDF: distinct values ascending with the fraction of inputs <= each.
std::vector<std::pair<double, double>> cdf(std::span<const double> values);

/// Linear-interpolation quantile at position q (N - 1) of the ascending sort.
double quantile(std::span<const double> values, double q);

}  // namespace recap::metrics
