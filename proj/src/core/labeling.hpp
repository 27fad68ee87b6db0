#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "core/image.hpp"

namespace recap::evaluator {

enum class QualityLabel : int { kLow = 0, kHigh = 1 };

struct LabelThresholds {
  double min_psnr_db = 20.0;
  double min_ssim = 0.7;
};

/// High quality only when both metrics reach their thresholds.
QualityLabel label_render(double psnr_db, double ssim, const LabelThresholds& thresholds = {});

struct LabeledRender {
  std::string pose_id;
  Image image;
  double psnr_db = 0.0;
  double ssim = 0.0;
  QualityLabel label = QualityLabel::kLow;
};

struct LabeledRenderSet {
  std::vector<LabeledRender> items;

  std::size_t count(QualityLabel label) const;
  std::vector<int> labels() const;
  std::vector<Image> images() const;
};

struct RenderInput {
  std::string pose_id;
  Image image;
};

/// Scores each render against its ground truth (PSNR, SSIM), labels it, and
/// down-samples the majority class uniformly at random to the minority
/// count. Retained items keep their input order. Throws ValidationError for
/// mismatched inputs and DegenerateDatasetError when only one class occurs.
LabeledRenderSet build_training_set(const std::vector<RenderInput>& renders, const std::vector<Image>& ground_truth,
                                    std::uint64_t seed, const LabelThresholds& thresholds = {});

/// Manifest CSV with header `pose_id,image_path,psnr_db,ssim,label`; image
/// paths are relative to the manifest directory.
void write_label_manifest(const LabeledRenderSet& set, const std::vector<std::string>& image_paths,
                          const std::filesystem::path& path);

struct LabelManifestRow {
  std::string pose_id;
  std::string image_path;
  double psnr_db = 0.0;
  double ssim = 0.0;
  int label = 0;
};

std::vector<LabelManifestRow> read_label_manifest(const std::filesystem::path& path);

}  // namespace recap::evaluator
