#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dprost/pose.hpp"

namespace dprost {

// 8-bit interleaved image, channels = 1 (mask) or 3 (RGB).
struct Image {
  int width = 0, height = 0, channels = 1;
  std::vector<std::uint8_t> data;

  static Image rgb(int w, int h) { return {w, h, 3, std::vector<std::uint8_t>(std::size_t(w) * h * 3, 0)}; }
  static Image gray(int w, int h) { return {w, h, 1, std::vector<std::uint8_t>(std::size_t(w) * h, 0)}; }

  std::uint8_t at(int x, int y, int c = 0) const {
    return data[(std::size_t(y) * width + x) * channels + c];
  }
  std::uint8_t& at(int x, int y, int c = 0) {
    return data[(std::size_t(y) * width + x) * channels + c];
  }
};

// PNG is the primary format; binary PPM (P6) and PGM (P5) are accepted as
// lightweight fixtures. Dispatch is by extension.
Image load_image(const std::filesystem::path& path);
void save_image(const Image& img, const std::filesystem::path& path);

// Bilinear resample of the square box region onto an out_res lattice, using
// the same bin-center rule as crop_grid. Samples outside the image clamp to
// the nearest edge pixel. Returns float values in [0, 1].
std::vector<float> crop_image_bilinear(const Image& img, const BoundingBox& box, int out_res);

// Nearest-neighbor variant for binary masks; returns 0/1 per output pixel.
std::vector<std::uint8_t> crop_mask_nearest(const Image& mask, const BoundingBox& box,
                                            int out_res);

// Tight bounding box of nonzero mask pixels; throws EmptyPointSet if blank.
BoundingBox mask_bbox(const Image& mask);

}  // namespace dprost
