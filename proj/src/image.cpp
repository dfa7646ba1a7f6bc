#include "dprost/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "dprost/grid.hpp"

namespace dprost {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Image load_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw Error("load_image: cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("load_image: png init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("load_image: png init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("load_image: malformed PNG " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_set_expand(png);  // palettes, low bit depths, tRNS
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  const png_byte color = png_get_color_type(png, info);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  Image img;
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.channels = static_cast<int>(png_get_channels(png, info));
  if (img.channels != 1 && img.channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("load_image: unsupported channel count in " + path.string());
  }
  img.data.resize(std::size_t(img.width) * img.height * img.channels);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = img.data.data() + std::size_t(y) * img.width * img.channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void save_png(const Image& img, const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw Error("save_image: cannot open " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("save_image: png init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("save_image: png init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("save_image: write failed for " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8,
               img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = const_cast<png_bytep>(img.data.data() + std::size_t(y) * img.width * img.channels);
  png_write_image(png, rows.data());
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
}

int read_pnm_token(std::istream& is) {
  // Skips whitespace and '#' comments.
  while (true) {
    const int c = is.peek();
    if (c == '#') {
      std::string line;
      std::getline(is, line);
    } else if (std::isspace(c)) {
      is.get();
    } else {
      break;
    }
  }
  int v = -1;
  is >> v;
  if (!is || v < 0) throw FormatError("load_image: malformed PNM header");
  return v;
}

Image load_pnm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("load_image: cannot open " + path.string());
  char p, kind;
  is.get(p);
  is.get(kind);
  if (p != 'P' || (kind != '5' && kind != '6'))
    throw FormatError("load_image: expected binary PGM/PPM in " + path.string());
  Image img;
  img.channels = kind == '6' ? 3 : 1;
  img.width = read_pnm_token(is);
  img.height = read_pnm_token(is);
  const int maxval = read_pnm_token(is);
  if (maxval != 255) throw FormatError("load_image: only maxval 255 PNM supported");
  is.get();  // single whitespace after header
  img.data.resize(std::size_t(img.width) * img.height * img.channels);
  if (!is.read(reinterpret_cast<char*>(img.data.data()),
               static_cast<std::streamsize>(img.data.size())))
    throw TruncatedFile("load_image: short PNM payload in " + path.string());
  return img;
}

void save_pnm(const Image& img, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("save_image: cannot open " + path.string());
  os << (img.channels == 3 ? "P6" : "P5") << "\n"
     << img.width << " " << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.data.data()),
           static_cast<std::streamsize>(img.data.size()));
  if (!os) throw Error("save_image: write failed for " + path.string());
}

std::string lower_ext(const std::filesystem::path& path) {
  std::string e = path.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") return load_png(path);
  if (ext == ".ppm" || ext == ".pgm") return load_pnm(path);
  throw FormatError("load_image: unsupported extension " + ext);
}

void save_image(const Image& img, const std::filesystem::path& path) {
  if (img.channels != 1 && img.channels != 3)
    throw FormatError("save_image: unsupported channel count");
  const std::string ext = lower_ext(path);
  if (ext == ".png") return save_png(img, path);
  if (ext == ".ppm" || ext == ".pgm") return save_pnm(img, path);
  throw FormatError("save_image: unsupported extension " + ext);
}

std::vector<float> crop_image_bilinear(const Image& img, const BoundingBox& box, int out_res) {
  const BoundingBox sq = square_box(box);
  std::vector<float> out(std::size_t(out_res) * out_res * img.channels, 0.0f);
  const auto clampi = [](int v, int hi) { return std::clamp(v, 0, hi); };
  for (int i = 0; i < out_res; ++i) {
    const double m = sq.y + (i + 0.5) * sq.h / out_res;
    for (int j = 0; j < out_res; ++j) {
      const double l = sq.x + (j + 0.5) * sq.w / out_res;
      const int x0 = static_cast<int>(std::floor(l)), y0 = static_cast<int>(std::floor(m));
      const double fx = l - x0, fy = m - y0;
      for (int c = 0; c < img.channels; ++c) {
        const double v00 = img.at(clampi(x0, img.width - 1), clampi(y0, img.height - 1), c);
        const double v10 = img.at(clampi(x0 + 1, img.width - 1), clampi(y0, img.height - 1), c);
        const double v01 = img.at(clampi(x0, img.width - 1), clampi(y0 + 1, img.height - 1), c);
        const double v11 =
            img.at(clampi(x0 + 1, img.width - 1), clampi(y0 + 1, img.height - 1), c);
        const double v = (1 - fy) * ((1 - fx) * v00 + fx * v10) + fy * ((1 - fx) * v01 + fx * v11);
        out[(std::size_t(i) * out_res + j) * img.channels + c] = static_cast<float>(v / 255.0);
      }
    }
  }
  return out;
}

std::vector<std::uint8_t> crop_mask_nearest(const Image& mask, const BoundingBox& box,
                                            int out_res) {
  const BoundingBox sq = square_box(box);
  std::vector<std::uint8_t> out(std::size_t(out_res) * out_res, 0);
  for (int i = 0; i < out_res; ++i) {
    const double m = sq.y + (i + 0.5) * sq.h / out_res;
    for (int j = 0; j < out_res; ++j) {
      const double l = sq.x + (j + 0.5) * sq.w / out_res;
      const int x = static_cast<int>(std::round(l)), y = static_cast<int>(std::round(m));
      if (x < 0 || x >= mask.width || y < 0 || y >= mask.height) continue;
      out[std::size_t(i) * out_res + j] = mask.at(x, y) > 127 ? 1 : 0;
    }
  }
  return out;
}

BoundingBox mask_bbox(const Image& mask) {
  int minx = mask.width, miny = mask.height, maxx = -1, maxy = -1;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(x, y) > 127) {
        minx = std::min(minx, x);
        miny = std::min(miny, y);
        maxx = std::max(maxx, x);
        maxy = std::max(maxy, y);
      }
  if (maxx < 0) throw EmptyPointSet("mask_bbox: blank mask");
  return {double(minx), double(miny), double(maxx - minx + 1), double(maxy - miny + 1)};
}

}  // namespace dprost
