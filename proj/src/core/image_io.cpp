#include "mpa/core/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <memory>

#include "mpa/core/resample.hpp"

namespace mpa::core {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
  }
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriter() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
  }
};

// Decodes a PNG into an HxWxC float tensor in [0,1]. Grayscale stays 1
// channel, anything with color becomes 3 channels; alpha is stripped.
ImageTensor decode_png(const std::string& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open image file: " + path);

  png_byte header[8];
  if (std::fread(header, 1, 8, file.get()) != 8 ||
      png_sig_cmp(header, 0, 8) != 0)
    throw IoError("not a PNG file: " + path);

  PngReader r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                 nullptr);
  if (!r.png) throw IoError("libpng read init failed");
  r.info = png_create_info_struct(r.png);
  if (!r.info) throw IoError("libpng info init failed");
  if (setjmp(png_jmpbuf(r.png)))
    throw IoError("failed to decode PNG: " + path);

  png_init_io(r.png, file.get());
  png_set_sig_bytes(r.png, 8);
  png_read_info(r.png, r.info);

  png_uint_32 width = png_get_image_width(r.png, r.info);
  png_uint_32 height = png_get_image_height(r.png, r.info);
  int bit_depth = png_get_bit_depth(r.png, r.info);
  int color_type = png_get_color_type(r.png, r.info);

  if (width == 0 || height == 0) throw IoError("zero-dimension image: " + path);

  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
    png_set_expand_gray_1_2_4_to_8(r.png);
  if (png_get_valid(r.png, r.info, PNG_INFO_tRNS))
    png_set_tRNS_to_alpha(r.png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(r.png);
  if (bit_depth == 16) png_set_swap(r.png);  // little-endian u16 samples

  png_read_update_info(r.png, r.info);
  bit_depth = png_get_bit_depth(r.png, r.info);
  color_type = png_get_color_type(r.png, r.info);
  int channels = png_get_channels(r.png, r.info);
  if (channels != 1 && channels != 3)
    throw IoError("unsupported channel count in " + path);

  size_t row_bytes = png_get_rowbytes(r.png, r.info);
  std::vector<png_byte> pixels(row_bytes * height);
  std::vector<png_bytep> row_ptrs(height);
  for (png_uint_32 y = 0; y < height; ++y)
    row_ptrs[y] = pixels.data() + y * row_bytes;
  png_read_image(r.png, row_ptrs.data());
  png_read_end(r.png, nullptr);

  ImageTensor img(static_cast<int>(height), static_cast<int>(width), channels);
  if (bit_depth == 16) {
    const float scale = 1.0f / 65535.0f;
    for (png_uint_32 y = 0; y < height; ++y) {
      const uint16_t* row = reinterpret_cast<const uint16_t*>(row_ptrs[y]);
      for (size_t i = 0; i < width * static_cast<size_t>(channels); ++i)
        img.data[(static_cast<size_t>(y) * width * channels) + i] =
            row[i] * scale;
    }
  } else {
    const float scale = 1.0f / 255.0f;
    for (png_uint_32 y = 0; y < height; ++y) {
      const png_byte* row = row_ptrs[y];
      for (size_t i = 0; i < width * static_cast<size_t>(channels); ++i)
        img.data[(static_cast<size_t>(y) * width * channels) + i] =
            row[i] * scale;
    }
  }
  return img;
}

void encode_png(const std::string& path, int height, int width, int channels,
                int bit_depth, const std::vector<uint16_t>& samples) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot open file for writing: " + path);

  PngWriter w;
  w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                  nullptr);
  if (!w.png) throw IoError("libpng write init failed");
  w.info = png_create_info_struct(w.png);
  if (!w.info) throw IoError("libpng info init failed");
  if (setjmp(png_jmpbuf(w.png))) throw IoError("failed to encode PNG: " + path);

  png_init_io(w.png, file.get());
  int color = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(w.png, w.info, width, height, bit_depth, color,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  if (bit_depth == 16) png_set_swap(w.png);

  const size_t row_samples = static_cast<size_t>(width) * channels;
  if (bit_depth == 8) {
    std::vector<png_byte> row(row_samples);
    for (int y = 0; y < height; ++y) {
      for (size_t i = 0; i < row_samples; ++i)
        row[i] = static_cast<png_byte>(samples[y * row_samples + i]);
      png_write_row(w.png, row.data());
    }
  } else {
    for (int y = 0; y < height; ++y) {
      png_write_row(w.png, reinterpret_cast<png_const_bytep>(
                               samples.data() + y * row_samples));
    }
  }
  png_write_end(w.png, nullptr);
}

}  // namespace

ImageTensor load_image(const std::string& path, int target_size) {
  ImageTensor img = decode_png(path);
  if (target_size > 0 &&
      (img.height != target_size || img.width != target_size))
    img = resize_bilinear(img, target_size, target_size);
  for (float& v : img.data) v = std::clamp(v, 0.0f, 1.0f);
  return img;
}

BinaryMask load_mask(const std::string& path, int target_size) {
  ImageTensor img = decode_png(path);
  if (img.channels != 1) img = to_grayscale(img);
  constexpr float kThreshold = 127.0f / 255.0f;
  BinaryMask mask(img.height, img.width);
  for (size_t i = 0; i < mask.data.size(); ++i)
    mask.data[i] = img.data[i] > kThreshold ? 1 : 0;
  if (target_size > 0 &&
      (mask.height != target_size || mask.width != target_size))
    mask = resize_nearest(mask, target_size, target_size);
  return mask;
}

void save_image(const ImageTensor& img, const std::string& path) {
  std::vector<uint16_t> samples(img.data.size());
  for (size_t i = 0; i < img.data.size(); ++i)
    samples[i] = static_cast<uint16_t>(
        std::lround(std::clamp(img.data[i], 0.0f, 1.0f) * 255.0f));
  encode_png(path, img.height, img.width, img.channels, 8, samples);
}

void save_image_16bit(const ImageTensor& img, const std::string& path) {
  if (img.channels != 1)
    throw IoError("16-bit writer expects single-channel input");
  std::vector<uint16_t> samples(img.data.size());
  for (size_t i = 0; i < img.data.size(); ++i)
    samples[i] = static_cast<uint16_t>(
        std::lround(std::clamp(img.data[i], 0.0f, 1.0f) * 65535.0f));
  encode_png(path, img.height, img.width, 1, 16, samples);
}

void save_mask(const BinaryMask& mask, const std::string& path) {
  std::vector<uint16_t> samples(mask.data.size());
  for (size_t i = 0; i < mask.data.size(); ++i)
    samples[i] = mask.data[i] ? 255 : 0;
  encode_png(path, mask.height, mask.width, 1, 8, samples);
}

}  // namespace mpa::core
