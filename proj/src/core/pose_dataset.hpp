#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "core/camera.hpp"
#include "core/image.hpp"

namespace recap::camera {

struct FrameRecord {
  std::string frame_id;
  Image image;
  Pose pose;
};

struct CaptureDataset {
  Intrinsics intrinsics;
  std::vector<FrameRecord> frames;
};

/// Name of the manifest file inside a dataset directory.
inline constexpr const char* kManifestName = "transforms.json";

/// Checks unique frame ids, image shapes against the intrinsics, channel range
/// and pose rigidity. Throws ValidationError.
void validate_dataset(const CaptureDataset& dataset);

/// Writes `<directory>/transforms.json` plus one `<frame_id>.png` per frame.
/// Manifest layout:
///   { "fov_x": double, "width": int, "height": int,
///     "frames": [ { "frame_id": str, "file_path": str,
///                   "transform_matrix": [[4 doubles] x 4] } ] }
/// transform_matrix is world-from-camera, rows listed top to bottom.
/// Doubles are written with shortest round-trip precision, so poses reload
/// bit-exactly. Images are 8-bit PNG.
std::filesystem::path write_pose_dataset(const CaptureDataset& dataset, const std::filesystem::path& directory);

/// Inverse of write_pose_dataset. Throws LoadError (missing or corrupt
/// manifest, missing image, dimension mismatch) or ValidationError.
CaptureDataset read_pose_dataset(const std::filesystem::path& directory);

}  // namespace recap::camera
