#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "gpst/errors.hpp"

namespace gpst {

// Pixel values are 32-bit floats in [0, 255] everywhere; normalization to
// [0, 1] happens only inside the fitting loss.
struct RasterImage {
  int width = 0;
  int height = 0;
  int channels = 1;  // 1 or 3
  std::vector<float> data;  // row-major, interleaved channels

  float at(int x, int y, int c = 0) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  float& at(int x, int y, int c = 0) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
};

struct GradientMap {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // row-major magnitudes, all >= 0

  float at(int x, int y) const {
    return data[static_cast<size_t>(y) * width + x];
  }
  float& at(int x, int y) {
    return data[static_cast<size_t>(y) * width + x];
  }
};

// Upper bound of the 3x3 Sobel magnitude on [0,255] input: 4*sqrt(2)*255.
inline const double kGradMax = 4.0 * 255.0 * std::sqrt(2.0);

inline void validate_image(const RasterImage& img) {
  if (img.width < 1 || img.height < 1)
    throw InvalidInput("image dimensions must be >= 1");
  if (img.channels != 1 && img.channels != 3)
    throw InvalidInput("image must have 1 or 3 channels");
  if (img.data.size() != static_cast<size_t>(img.width) * img.height * img.channels)
    throw InvalidInput("image data length does not match dimensions");
  for (float v : img.data)
    if (!std::isfinite(v) || v < 0.0f || v > 255.0f)
      throw InvalidInput("pixel values must be finite and within [0, 255]");
}

namespace detail {

struct FileHandle {
  std::FILE* f = nullptr;
  explicit FileHandle(std::FILE* fp) : f(fp) {}
  ~FileHandle() { if (f) std::fclose(f); }
  FileHandle(const FileHandle&) = delete;
  FileHandle& operator=(const FileHandle&) = delete;
};

inline uint8_t quantize_u8(float v) {
  float c = std::clamp(v, 0.0f, 255.0f);
  // nearbyint under the default FP environment rounds ties to even
  return static_cast<uint8_t>(std::nearbyint(c));
}

inline int pnm_read_int(std::FILE* f) {
  int ch = std::fgetc(f);
  // skip whitespace and '#' comment lines
  while (ch != EOF && (std::isspace(ch) || ch == '#')) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = std::fgetc(f);
    }
    if (ch != EOF) ch = std::fgetc(f);
  }
  if (ch == EOF || !std::isdigit(ch)) throw CorruptImage("malformed PNM header");
  long value = 0;
  while (ch != EOF && std::isdigit(ch)) {
    value = value * 10 + (ch - '0');
    if (value > 1'000'000'000L) throw CorruptImage("PNM header value out of range");
    ch = std::fgetc(f);
  }
  if (ch != EOF) std::ungetc(ch, f);
  return static_cast<int>(value);
}

inline RasterImage load_pnm(std::FILE* f, int channels) {
  int w = pnm_read_int(f);
  int h = pnm_read_int(f);
  int maxval = pnm_read_int(f);
  if (w < 1 || h < 1 || static_cast<long long>(w) * h > (1LL << 30))
    throw CorruptImage("bad PNM dimensions");
  if (maxval <= 0) throw CorruptImage("bad PNM maxval");
  if (maxval > 255) throw UnsupportedFormat("16-bit PNM is not supported");
  int sep = std::fgetc(f);
  if (sep == EOF || !std::isspace(sep)) throw CorruptImage("missing PNM separator");

  size_t n = static_cast<size_t>(w) * h * channels;
  std::vector<uint8_t> raw(n);
  if (std::fread(raw.data(), 1, n, f) != n)
    throw CorruptImage("truncated PNM pixel data");

  RasterImage img;
  img.width = w;
  img.height = h;
  img.channels = channels;
  img.data.resize(n);
  const double scale = 255.0 / maxval;
  for (size_t i = 0; i < n; ++i)
    img.data[i] = static_cast<float>(raw[i] * scale);
  return img;
}

inline RasterImage load_png(std::FILE* f) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng init failed");
  }

  RasterImage img;
  std::vector<png_bytep> rows;
  std::vector<uint8_t> raw;
  bool unsupported = false;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    if (unsupported) throw UnsupportedFormat("PNG must be 8-bit gray or RGB");
    throw CorruptImage("failed to decode PNG");
  }

  png_init_io(png, f);
  png_read_info(png, info);

  png_uint_32 w = png_get_image_width(png, info);
  png_uint_32 h = png_get_image_height(png, info);
  int depth = png_get_bit_depth(png, info);
  int color = png_get_color_type(png, info);
  if (depth != 8 || (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_RGB)) {
    unsupported = true;
    png_error(png, "unsupported PNG layout");
  }
  if (w < 1 || h < 1 || static_cast<long long>(w) * h > (1LL << 30))
    png_error(png, "bad PNG dimensions");

  int channels = (color == PNG_COLOR_TYPE_GRAY) ? 1 : 3;
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  size_t rowbytes = png_get_rowbytes(png, info);
  raw.resize(rowbytes * h);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = raw.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.channels = channels;
  img.data.resize(static_cast<size_t>(w) * h * channels);
  for (png_uint_32 y = 0; y < h; ++y)
    for (size_t i = 0; i < static_cast<size_t>(w) * channels; ++i)
      img.data[static_cast<size_t>(y) * w * channels + i] =
          static_cast<float>(raw[y * rowbytes + i]);
  return img;
}

inline void save_png(const RasterImage& img, std::FILE* f) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng init failed");
  }

  std::vector<uint8_t> raw(img.data.size());
  for (size_t i = 0; i < img.data.size(); ++i) raw[i] = quantize_u8(img.data[i]);
  std::vector<png_bytep> rows(img.height);
  size_t rowbytes = static_cast<size_t>(img.width) * img.channels;
  for (int y = 0; y < img.height; ++y) rows[y] = raw.data() + y * rowbytes;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed to write PNG");
  }

  png_init_io(png, f);
  int color = (img.channels == 1) ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, img.width, img.height, 8, color,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline void save_pnm(const RasterImage& img, std::FILE* f) {
  const char* magic = (img.channels == 3) ? "P6" : "P5";
  if (std::fprintf(f, "%s\n%d %d\n255\n", magic, img.width, img.height) < 0)
    throw IoError("failed to write PNM header");
  std::vector<uint8_t> raw(img.data.size());
  for (size_t i = 0; i < img.data.size(); ++i) raw[i] = quantize_u8(img.data[i]);
  if (std::fwrite(raw.data(), 1, raw.size(), f) != raw.size())
    throw IoError("failed to write PNM pixel data");
}

}  // namespace detail

// Decodes PNG (8-bit gray/RGB) or binary PPM/PGM, dispatching on content magic.
inline RasterImage load_image(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw FileNotFound("cannot open " + path);
  detail::FileHandle file(fp);

  uint8_t magic[8] = {0};
  size_t got = std::fread(magic, 1, 8, fp);
  std::rewind(fp);

  static const uint8_t png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  if (got == 8 && std::memcmp(magic, png_sig, 8) == 0)
    return detail::load_png(fp);
  if (got >= 2 && magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6')) {
    std::fseek(fp, 2, SEEK_SET);
    return detail::load_pnm(fp, magic[1] == '6' ? 3 : 1);
  }
  throw CorruptImage("unrecognized image format in " + path);
}

// Values are clamped to [0,255] and rounded to nearest even before the 8-bit
// write, so load_image(save_image(img)) is the quantization of img exactly.
// Out-of-range finite values are legal here; the clamp absorbs them.
inline void save_image(const RasterImage& img, const std::string& path) {
  if (img.width < 1 || img.height < 1)
    throw InvalidInput("image dimensions must be >= 1");
  if (img.channels != 1 && img.channels != 3)
    throw InvalidInput("image must have 1 or 3 channels");
  if (img.data.size() != static_cast<size_t>(img.width) * img.height * img.channels)
    throw InvalidInput("image data length does not match dimensions");
  for (float v : img.data)
    if (!std::isfinite(v)) throw InvalidInput("pixel values must be finite");
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });

  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot open " + path + " for writing");
  detail::FileHandle file(fp);

  if (ext == ".png")
    detail::save_png(img, fp);
  else if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm")
    detail::save_pnm(img, fp);
  else
    throw UnsupportedFormat("unknown output extension " + ext);
  if (std::fflush(fp) != 0) throw IoError("failed to flush " + path);
}

// BT.601 luma; 1-channel input passes through unchanged.
inline RasterImage to_grayscale(const RasterImage& img) {
  if (img.channels == 1) return img;
  RasterImage out;
  out.width = img.width;
  out.height = img.height;
  out.channels = 1;
  out.data.resize(static_cast<size_t>(img.width) * img.height);
  for (size_t i = 0; i < out.data.size(); ++i) {
    const float* p = &img.data[i * 3];
    out.data[i] = static_cast<float>(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
  }
  return out;
}

// 3x3 Sobel magnitude with replicate (clamp-to-edge) boundary padding.
// Kx = [[-1,0,1],[-2,0,2],[-1,0,1]], Ky = Kx^T.
inline GradientMap sobel_magnitude(const RasterImage& gray) {
  if (gray.channels != 1) throw InvalidInput("sobel_magnitude expects 1 channel");
  const int w = gray.width, h = gray.height;
  GradientMap out;
  out.width = w;
  out.height = h;
  out.data.resize(static_cast<size_t>(w) * h);

  auto px = [&](int x, int y) -> double {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return gray.data[static_cast<size_t>(y) * w + x];
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double tl = px(x - 1, y - 1), tc = px(x, y - 1), tr = px(x + 1, y - 1);
      double ml = px(x - 1, y), mr = px(x + 1, y);
      double bl = px(x - 1, y + 1), bc = px(x, y + 1), br = px(x + 1, y + 1);
      double gx = (tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl);
      double gy = (bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr);
      out.data[static_cast<size_t>(y) * w + x] =
          static_cast<float>(std::sqrt(gx * gx + gy * gy));
    }
  }
  return out;
}

}  // namespace gpst
