#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dprost/carve.hpp"
#include "dprost/metrics.hpp"

namespace dprost {

// Known pose conventions. The internal one is neg_z_forward; pos_z_forward
// converts via the basis change diag(1, 1, -1).
Mat3 convention_basis_change(const std::string& convention);

struct ManifestObject {
  std::string id;
  double d_real = 2.0;
};

// Raw manifest entry: poses stay in the file's convention and units so that
// save(load(x)) reproduces the file values exactly. Conversion and diameter
// normalization happen in load_observation.
struct ManifestFrame {
  int id = 0;
  std::string object_id;
  std::string image_path;
  std::string mask_path;
  BoundingBox box;
  CameraIntrinsics K;
  Mat3 R_raw = Mat3::Identity();
  Vec3 t_raw = Vec3::Zero();
};

struct SceneManifest {
  std::string convention = "neg_z_forward";
  std::vector<ManifestObject> objects;
  std::vector<ManifestFrame> frames;
  std::filesystem::path base_dir;

  double d_real_for(const std::string& object_id) const;
};

// Parses and validates a manifest; referenced image/mask files must exist.
SceneManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const SceneManifest& manifest, const std::filesystem::path& path);

// Pose of a frame converted to the internal convention with t normalized by
// d_real/2 (object diameter becomes 2).
Pose frame_pose(const SceneManifest& manifest, const ManifestFrame& frame);

// Loads images and converts the pose; the returned observation is fully in
// internal units.
Observation load_observation(const SceneManifest& manifest, int frame_index);
std::vector<Observation> load_observations(const SceneManifest& manifest);

// Voxel feature container: magic "DPVF", u32 version, S, C (little endian),
// then S^3*C f32 values with index ((iz*S + iy)*S + ix)*C + c, plus a JSON
// sidecar <path>.json recording object id, real diameter, and the reference
// frames used.
struct FeatureInfo {
  std::string object_id;
  double d_real = 2.0;
  std::vector<int> reference_frames;
  std::string manifest_path;  // scene the feature was carved from, if any
};
void save_feature(const VoxelFeature& feature, const std::filesystem::path& path,
                  const FeatureInfo& info);
VoxelFeature load_feature(const std::filesystem::path& path, FeatureInfo* info = nullptr);

// Standalone pose JSON: {"R": [9 row-major], "t": [3], "convention": ...}.
// Loading converts to the internal convention; saving writes neg_z_forward.
void save_pose_json(const Pose& pose, const std::filesystem::path& path);
Pose load_pose_json(const std::filesystem::path& path);

struct Prediction {
  int frame = 0;
  Pose pose;  // internal convention, normalized units
};
void save_predictions(const std::vector<Prediction>& preds, const std::filesystem::path& path);
std::vector<Prediction> load_predictions(const std::filesystem::path& path);

// Occupied-voxel centers of a carved feature (any nonzero channel), the
// mesh-less evaluation point set.
std::vector<Vec3> occupied_voxel_centers(const VoxelFeature& feature);

}  // namespace dprost
