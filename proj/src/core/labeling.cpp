#include "core/labeling.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "core/errors.hpp"
#include "core/metrics.hpp"
#include "core/parallel.hpp"
#include "core/random.hpp"
#include "core/text_format.hpp"

namespace recap::evaluator {

QualityLabel label_render(double psnr_db, double ssim, const LabelThresholds& t) {
  return (psnr_db >= t.min_psnr_db && ssim >= t.min_ssim) ? QualityLabel::kHigh : QualityLabel::kLow;
}

std::size_t LabeledRenderSet::count(QualityLabel label) const {
  return static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(), [&](const LabeledRender& r) { return r.label == label; }));
}

std::vector<int> LabeledRenderSet::labels() const {
  std::vector<int> out;
  out.reserve(items.size());
  for (const auto& r : items) out.push_back(static_cast<int>(r.label));
  return out;
}

std::vector<Image> LabeledRenderSet::images() const {
  std::vector<Image> out;
  out.reserve(items.size());
  for (const auto& r : items) out.push_back(r.image);
  return out;
}

LabeledRenderSet build_training_set(const std::vector<RenderInput>& renders, const std::vector<Image>& ground_truth,
                                    std::uint64_t seed, const LabelThresholds& thresholds) {
  if (renders.size() != ground_truth.size())
    throw ValidationError("need exactly one ground-truth image per render", "ground_truth");
  std::vector<LabeledRender> all(renders.size());
  parallel_for(renders.size(), [&](std::size_t i) {
    if (!renders[i].image.same_shape(ground_truth[i]))
      throw ValidationError("render '" + renders[i].pose_id + "' and its ground truth differ in size", "ground_truth");
    LabeledRender& r = all[i];
    r.pose_id = renders[i].pose_id;
    r.image = renders[i].image;
    r.psnr_db = metrics::psnr(r.image, ground_truth[i]);
    r.ssim = metrics::ssim(r.image, ground_truth[i]);
    r.label = label_render(r.psnr_db, r.ssim, thresholds);
  });

  std::vector<std::size_t> high, low;
  for (std::size_t i = 0; i < all.size(); ++i) (all[i].label == QualityLabel::kHigh ? high : low).push_back(i);
  if (high.empty() || low.empty())
    throw DegenerateDatasetError("degenerate single-class dataset: " + std::to_string(high.size()) + " high, " +
                                     std::to_string(low.size()) + " low",
                                 "labels");

  std::vector<std::size_t>& majority = high.size() > low.size() ? high : low;
  const std::size_t keep = std::min(high.size(), low.size());
  Rng rng(derive_seed({seed, 0x62616c616e6365ULL}));
  std::shuffle(majority.begin(), majority.end(), rng);
  majority.resize(keep);

  std::vector<std::size_t> retained(high);
  retained.insert(retained.end(), low.begin(), low.end());
  std::sort(retained.begin(), retained.end());
  LabeledRenderSet set;
  set.items.reserve(retained.size());
  for (std::size_t i : retained) set.items.push_back(std::move(all[i]));
  return set;
}

void write_label_manifest(const LabeledRenderSet& set, const std::vector<std::string>& image_paths,
                          const std::filesystem::path& path) {
  if (image_paths.size() != set.items.size()) throw ValidationError("one image path per item required", "image_paths");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "pose_id,image_path,psnr_db,ssim,label\n";
  for (std::size_t i = 0; i < set.items.size(); ++i) {
    const auto& r = set.items[i];
    out << r.pose_id << ',' << image_paths[i] << ',' << fmt_exact(r.psnr_db) << ',' << fmt_exact(r.ssim) << ','
        << static_cast<int>(r.label) << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<LabelManifestRow> read_label_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(LoadFailure::kMissingManifest, "cannot open '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  if (line != "pose_id,image_path,psnr_db,ssim,label")
    throw LoadError(LoadFailure::kCorruptManifest, "unexpected header in '" + path.string() + "'");
  std::vector<LabelManifestRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 5) throw LoadError(LoadFailure::kCorruptManifest, "bad row in '" + path.string() + "'");
    LabelManifestRow row;
    row.pose_id = fields[0];
    row.image_path = fields[1];
    row.psnr_db = parse_double(fields[2]);
    row.ssim = parse_double(fields[3]);
    row.label = std::stoi(fields[4]);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace recap::evaluator
