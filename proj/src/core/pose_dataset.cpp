#include "core/pose_dataset.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "core/errors.hpp"

namespace recap::camera {

using nlohmann::json;

void validate_dataset(const CaptureDataset& dataset) {
  std::set<std::string> ids;
  for (const auto& frame : dataset.frames) {
    if (frame.frame_id.empty()) throw ValidationError("empty frame_id", "frame_id");
    if (frame.frame_id.find_first_of("/\\") != std::string::npos)
      throw ValidationError("frame_id '" + frame.frame_id + "' contains a path separator", "frame_id");
    if (!ids.insert(frame.frame_id).second)
      throw ValidationError("duplicate frame_id '" + frame.frame_id + "'", "frame_id");
    if (frame.image.width != dataset.intrinsics.width() || frame.image.height != dataset.intrinsics.height())
      throw ValidationError("frame '" + frame.frame_id + "' image size does not match intrinsics", "image");
    for (double v : frame.image.data)
      if (!(v >= 0.0 && v <= 1.0))
        throw ValidationError("frame '" + frame.frame_id + "' has channel values outside [0,1]", "image");
    if (!is_rigid(frame.pose.rotation))
      throw ValidationError("frame '" + frame.frame_id + "' rotation is not orthonormal", "pose");
  }
}

std::filesystem::path write_pose_dataset(const CaptureDataset& dataset, const std::filesystem::path& directory) {
  validate_dataset(dataset);
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw IoError("cannot create '" + directory.string() + "': " + ec.message());

  json frames = json::array();
  for (const auto& frame : dataset.frames) {
    const std::string file = frame.frame_id + ".png";
    write_png(frame.image, directory / file);
    const Mat4 m = frame.pose.matrix();
    json rows = json::array();
    for (int r = 0; r < 4; ++r) rows.push_back({m(r, 0), m(r, 1), m(r, 2), m(r, 3)});
    frames.push_back({{"frame_id", frame.frame_id}, {"file_path", file}, {"transform_matrix", rows}});
  }
  const json manifest = {{"fov_x", dataset.intrinsics.fov_x()},
                         {"width", dataset.intrinsics.width()},
                         {"height", dataset.intrinsics.height()},
                         {"frames", frames}};
  const auto path = directory / kManifestName;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
  return path;
}

CaptureDataset read_pose_dataset(const std::filesystem::path& directory) {
  const auto path = directory / kManifestName;
  std::ifstream in(path);
  if (!in) throw LoadError(LoadFailure::kMissingManifest, "missing manifest '" + path.string() + "'");

  CaptureDataset dataset;
  json manifest;
  try {
    manifest = json::parse(in);
    dataset.intrinsics = make_intrinsics(manifest.at("width").get<int>(), manifest.at("height").get<int>(),
                                         manifest.at("fov_x").get<double>());
    for (const auto& entry : manifest.at("frames")) {
      FrameRecord frame;
      frame.frame_id = entry.at("frame_id").get<std::string>();
      const auto& rows = entry.at("transform_matrix");
      if (rows.size() != 4) throw LoadError(LoadFailure::kCorruptManifest, "transform_matrix must have 4 rows");
      Mat4 m;
      for (int r = 0; r < 4; ++r) {
        if (rows[r].size() != 4) throw LoadError(LoadFailure::kCorruptManifest, "transform_matrix rows need 4 entries");
        for (int c = 0; c < 4; ++c) m(r, c) = rows[r][c].get<double>();
      }
      frame.pose = Pose::from_matrix(m);
      if (!entry.at("file_path").is_string())
        throw LoadError(LoadFailure::kCorruptManifest, "file_path must be a string");
      dataset.frames.push_back(std::move(frame));
    }
  } catch (const json::exception& e) {
    throw LoadError(LoadFailure::kCorruptManifest, "corrupt manifest '" + path.string() + "': " + e.what());
  } catch (const ValidationError& e) {
    throw LoadError(LoadFailure::kCorruptManifest, "invalid manifest '" + path.string() + "': " + e.what());
  }

  const auto& entries = manifest.at("frames");
  for (std::size_t i = 0; i < dataset.frames.size(); ++i) {
    auto& frame = dataset.frames[i];
    const auto image_path = directory / entries[i].at("file_path").get<std::string>();
    if (!std::filesystem::exists(image_path))
      throw LoadError(LoadFailure::kMissingImage,
                      "frame '" + frame.frame_id + "': missing image '" + image_path.string() + "'");
    frame.image = read_png(image_path);
    if (frame.image.width != dataset.intrinsics.width() || frame.image.height != dataset.intrinsics.height())
      throw LoadError(LoadFailure::kDimensionMismatch,
                      "frame '" + frame.frame_id + "': image is " + std::to_string(frame.image.width) + "x" +
                          std::to_string(frame.image.height) + ", manifest says " +
                          std::to_string(dataset.intrinsics.width()) + "x" +
                          std::to_string(dataset.intrinsics.height()));
  }
  validate_dataset(dataset);
  return dataset;
}

}  // namespace recap::camera
