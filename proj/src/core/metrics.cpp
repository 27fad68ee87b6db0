#include "core/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"

namespace recap::metrics {

double psnr(const Image& a, const Image& b, double max_val) {
  if (!a.same_shape(b)) throw ValidationError("psnr: image dimensions differ", "image");
  if (a.data.empty()) throw ValidationError("psnr: empty images", "image");
  long double sum = 0.0L;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const long double d = static_cast<long double>(a.data[i]) - b.data[i];
    sum += d * d;
  }
  if (sum == 0.0L) return kPsnrIdentical;
  const double mse = static_cast<double>(sum / a.data.size());
  return 10.0 * std::log10(max_val * max_val / mse);
}

std::vector<double> gaussian_taps(const SsimConfig& cfg) {
  std::vector<double> taps(cfg.window);
  const double center = (cfg.window - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < cfg.window; ++i) {
    const double x = i - center;
    sum += taps[i] = std::exp(-x * x / (2.0 * cfg.gaussian_sigma * cfg.gaussian_sigma));
  }
  for (double& t : taps) t /= sum;
  return taps;
}

double ssim(const Image& a, const Image& b, const SsimConfig& cfg) {
  if (!a.same_shape(b)) throw ValidationError("ssim: image dimensions differ", "image");
  if (a.width < cfg.window || a.height < cfg.window)
    throw ValidationError("ssim: image smaller than the " + std::to_string(cfg.window) + "px window", "image");
  const std::vector<double> ya = to_luma(a);
  const std::vector<double> yb = to_luma(b);
  const std::vector<double> taps = gaussian_taps(cfg);
  const int w = a.width, h = a.height, win = cfg.window;
  const int ow = w - win + 1, oh = h - win + 1;

  // Horizontal pass for the five moment images, then vertical.
  enum { kA, kB, kAA, kBB, kAB, kCount };
  std::vector<double> horiz(static_cast<std::size_t>(kCount) * h * ow, 0.0);
  auto H = [&](int m, int y, int x) -> double& { return horiz[(static_cast<std::size_t>(m) * h + y) * ow + x]; };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s[kCount] = {};
      for (int k = 0; k < win; ++k) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x + k;
        const double t = taps[k];
        s[kA] += t * ya[i];
        s[kB] += t * yb[i];
        s[kAA] += t * ya[i] * ya[i];
        s[kBB] += t * yb[i] * yb[i];
        s[kAB] += t * ya[i] * yb[i];
      }
      for (int m = 0; m < kCount; ++m) H(m, y, x) = s[m];
    }

  const double c1 = cfg.c1(), c2 = cfg.c2();
  double total = 0.0;
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s[kCount] = {};
      for (int k = 0; k < win; ++k)
        for (int m = 0; m < kCount; ++m) s[m] += taps[k] * H(m, y + k, x);
      const double mu_a = s[kA], mu_b = s[kB];
      const double var_a = s[kAA] - mu_a * mu_a;
      const double var_b = s[kBB] - mu_b * mu_b;
      const double cov = s[kAB] - mu_a * mu_b;
      total += ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
    }
  return total / (static_cast<double>(ow) * oh);
}

std::vector<std::pair<double, double>> cdf(std::span<const double> values) {
  if (values.empty()) throw ValidationError("cdf of an empty list", "values");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> out;
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    out.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
  }
  return out;
}

double quantile(std::span<const double> values, double q) {
  if (values.empty()) throw ValidationError("quantile of an empty list", "values");
  if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("quantile q must lie in [0,1]", "q");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  if (h == static_cast<double>(lo) || sorted[hi] == sorted[lo]) return sorted[lo];
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace recap::metrics
