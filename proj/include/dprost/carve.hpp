#pragma once

#include <string>
#include <vector>

#include "dprost/image.hpp"
#include "dprost/pose.hpp"

namespace dprost {

// One posed view of the object: image, binary mask, detection box, camera.
struct Observation {
  Image rgb;
  Image mask;
  BoundingBox box;
  Pose pose;
  CameraIntrinsics K;
  std::string object_id;
  double d_real = 2.0;
};

struct ReferenceSet {
  std::vector<Observation> observations;
};

// S^3 voxel lattice over [-1, 1]^3 with centers 2(i + 0.5)/S - 1 per axis and
// C values per voxel, stored with linear index ((iz*S + iy)*S + ix)*C + c.
// Carved features are zero outside the unit ball.
struct VoxelFeature {
  int size = 0;
  int channels = 0;
  std::vector<float> values;

  double voxel_pitch() const { return 2.0 / size; }
  static double center_coord(int i, int S) { return 2.0 * (i + 0.5) / S - 1.0; }
  Vec3 voxel_center(int ix, int iy, int iz) const {
    return {center_coord(ix, size), center_coord(iy, size), center_coord(iz, size)};
  }
  std::size_t index(int ix, int iy, int iz, int c = 0) const {
    return ((std::size_t(iz) * size + iy) * size + ix) * channels + c;
  }
  float at(int ix, int iy, int iz, int c = 0) const { return values[index(ix, iy, iz, c)]; }
  float& at(int ix, int iy, int iz, int c = 0) { return values[index(ix, iy, iz, c)]; }
};

// Farthest point sampling over rotations: starts from the view with the
// largest mask area, then greedily adds the view maximizing the minimum
// geodesic distance to the selected set. Ties break toward the lower index.
ReferenceSet select_references(const std::vector<Observation>& training, int n_refs);
std::vector<int> select_reference_indices(const std::vector<Observation>& training, int n_refs);

// Pixel coordinates of every voxel center under a pose; valid = 0 marks
// voxels behind the camera (z >= 0).
struct CanvasProjection {
  int size = 0;
  std::vector<double> xy;          // 2 per voxel
  std::vector<std::uint8_t> valid;  // 1 per voxel
};
CanvasProjection project_canvas(const Pose& pose, const CameraIntrinsics& K, int S);

// Space carving: per voxel, the occupancy is the product over references of
// nearest-pixel mask lookups (round half away from zero; out-of-image or
// behind-camera counts as empty) restricted to the unit ball, and the color is
// the plain 1/N average of nearest-pixel RGB lookups. Returns occupancy * color
// with C = 3.
VoxelFeature carve(const ReferenceSet& refs, int S, int threads = 0);

// The 1-channel occupancy volume from the same carving rule.
VoxelFeature carve_mask(const ReferenceSet& refs, int S, int threads = 0);

// carve + carve_mask in one pass: C = 4, channels RGB + occupancy.
VoxelFeature carve_rgba(const ReferenceSet& refs, int S, int threads = 0);

// Views of an RGBA feature as the C=3 color and C=1 occupancy volumes.
VoxelFeature rgba_color(const VoxelFeature& rgba);
VoxelFeature rgba_occupancy(const VoxelFeature& rgba);

}  // namespace dprost
