#pragma once

#include <vector>

#include "dprost/carve.hpp"
#include "dprost/grid.hpp"

namespace dprost {

// Threshold deciding whether an interpolated sample counts as occupied: the
// max channel magnitude must exceed kOccupancyTau. Exact-zero testing is
// fragile under trilinear blending at occupancy boundaries.
inline constexpr double kOccupancyTau = 1e-6;

// Hit threshold for occupancy-guided rendering. Interpolated occupancy is a
// partial-coverage estimate of the binary carve, so a ray is on the surface
// where it crosses the 0.5 isosurface; a near-zero threshold would instead
// treat the half-voxel interpolation skirt around the hull as solid and
// dilate every silhouette.
inline constexpr double kSurfaceAlpha = 0.5;

// Trilinear samples of a voxel feature along every grid point.
struct SampledFeature {
  int height = 0, width = 0, n_z = 0, channels = 0;
  std::vector<float> values;  // ((m*W + l)*n_z + n)*C + c

  float at(int m, int l, int n, int c = 0) const {
    return values[((std::size_t(m) * width + l) * n_z + n) * channels + c];
  }
};

// Rendered crop: float RGB in [0, 1] plus a hit mask.
struct Appearance {
  int height = 0, width = 0;
  std::vector<float> rgb;           // 3 per pixel
  std::vector<std::uint8_t> valid;  // 1 per pixel

  float at(int m, int l, int c) const { return rgb[(std::size_t(m) * width + l) * 3 + c]; }
};

// Trilinear interpolation of the feature at each grid point, with zero padding
// outside the voxel lattice. Requires an object-stage grid.
SampledFeature sample_feature(const VoxelFeature& feature, const RayGrid& grid, int threads = 0);

// Depth compositing: per ray, the first sample (nearest to the camera, lowest
// n) whose magnitude exceeds kOccupancyTau wins; rays with no such sample are
// invalid and black. C=1 inputs replicate to gray.
Appearance composite(const SampledFeature& sampled);

// composite(sample_feature(...)) over the object grid of (pose, box). When an
// occupancy volume is given, the ray stops at the kSurfaceAlpha isosurface of
// the interpolated occupancy and the hit color is normalized by that
// occupancy, which undoes the boundary attenuation that trilinear blending
// applies to occupancy-weighted colors.
Appearance render(const VoxelFeature& feature, const Pose& pose, const CameraIntrinsics& K,
                  const BoundingBox& box, int n_z, int out_res, int threads = 0);
Appearance render(const VoxelFeature& feature, const VoxelFeature& occupancy, const Pose& pose,
                  const CameraIntrinsics& K, const BoundingBox& box, int n_z, int out_res,
                  int threads = 0);

// Conservative per-cell emptiness index over a voxel feature: cells() holds
// one byte per trilinear support cell, zero iff every corner of that cell is
// zero in all channels, in which case any interpolated sample inside the cell
// is exactly zero and the interpolation can be skipped. Purely an accelerator:
// renders produce bit-identical output with or without it.
struct SamplingMask {
  int size = 0;                      // lattice resolution S it was built for
  std::vector<std::uint8_t> cells;   // (S+1)^3, indexed by floor+1 per axis

  bool maybe_nonzero(int x0, int y0, int z0) const {
    const std::size_t s1 = std::size_t(size) + 1;
    return cells[(std::size_t(z0 + 1) * s1 + std::size_t(y0 + 1)) * s1 + std::size_t(x0 + 1)] !=
           0;
  }
};

SamplingMask build_sampling_mask(const VoxelFeature& feature);

// Render over a precomputed cropped grid (the hot path during refinement).
// The optional mask must have been built over the volume that gates hits:
// `occupancy` when given, `feature` otherwise.
Appearance render_over_crop(const VoxelFeature& feature, const VoxelFeature* occupancy,
                            const RayGrid& cropped, const Pose& pose, int threads = 0,
                            const SamplingMask* mask = nullptr);

// 8-bit export: round(255 * v) per channel; optional 0/255 validity mask.
Image appearance_to_image(const Appearance& app);
Image appearance_valid_mask(const Appearance& app);

}  // namespace dprost
