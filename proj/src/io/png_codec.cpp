#include "png_codec.hpp"

#include <png.h>

#include <csetjmp>
#include <cstring>

#include "rigidflow/error.hpp"

namespace rigidflow::io::detail {

namespace {

struct ReadCursor {
  const std::string* bytes;
  std::size_t offset;
};

void read_callback(png_structp png, png_bytep out, png_size_t length) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->offset + length > cur->bytes->size()) png_error(png, "truncated PNG stream");
  std::memcpy(out, cur->bytes->data() + cur->offset, length);
  cur->offset += length;
}

void write_callback(png_structp png, png_bytep in, png_size_t length) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(in), length);
}

void flush_callback(png_structp) {}

// libpng reports errors through longjmp; these hold the message across it.
void error_callback(png_structp png, png_const_charp msg) {
  auto* message = static_cast<std::string*>(png_get_error_ptr(png));
  if (message) *message = msg;
  png_longjmp(png, 1);
}

void warning_callback(png_structp, png_const_charp) {}

// Row pointers and buffers are owned outside the setjmp frame.
bool encode_raw(const PngData& data, const std::vector<png_bytep>& rows, std::string& out, std::string& message) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, error_callback, warning_callback);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, &out, write_callback, flush_callback);
  png_set_compression_level(png, 9);
  const int color = data.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, static_cast<png_uint_32>(data.width), static_cast<png_uint_32>(data.height),
               data.bit_depth, color, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (data.bit_depth == 16) png_set_swap(png);  // host little-endian samples
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

bool decode_raw(const std::string& bytes, PngData& out, std::string& message) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, error_callback, warning_callback);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  ReadCursor cursor{&bytes, 0};
  std::vector<unsigned char> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, &cursor, read_callback);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (depth == 16) png_set_swap(png);
  png_read_update_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  depth = out.bit_depth;
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  out.samples.assign(static_cast<std::size_t>(out.width) * out.height * out.channels, 0);
  buffer.assign(row_bytes * out.height, 0);
  rows.assign(static_cast<std::size_t>(out.height), nullptr);
  for (int y = 0; y < out.height; ++y) rows[static_cast<std::size_t>(y)] = buffer.data() + row_bytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  const std::size_t n = out.samples.size();
  if (depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint16_t v;
      std::memcpy(&v, buffer.data() + 2 * i, 2);
      out.samples[i] = v;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = buffer[i];
  }
  return true;
}

}  // namespace

std::string encode_png(const PngData& data) {
  if (data.channels != 1 && data.channels != 3) throw FormatError("PNG encoder supports 1 or 3 channels");
  if (data.bit_depth != 8 && data.bit_depth != 16) throw FormatError("PNG encoder supports 8 or 16 bits");
  const std::size_t bytes_per_sample = data.bit_depth / 8;
  const std::size_t row_bytes = static_cast<std::size_t>(data.width) * data.channels * bytes_per_sample;
  std::vector<unsigned char> buffer(row_bytes * data.height);
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    if (bytes_per_sample == 2) {
      const std::uint16_t v = data.samples[i];
      std::memcpy(buffer.data() + 2 * i, &v, 2);
    } else {
      buffer[i] = static_cast<unsigned char>(data.samples[i]);
    }
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(data.height));
  for (int y = 0; y < data.height; ++y) rows[static_cast<std::size_t>(y)] = buffer.data() + row_bytes * y;
  std::string out;
  std::string message;
  if (!encode_raw(data, rows, out, message)) throw FormatError("PNG encoding failed: " + message);
  return out;
}

PngData decode_png(const std::string& bytes, const std::string& origin) {
  if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0) {
    throw FormatError(origin + ": not a PNG file");
  }
  PngData out;
  std::string message;
  if (!decode_raw(bytes, out, message)) throw FormatError(origin + ": malformed PNG (" + message + ")");
  return out;
}

}  // namespace rigidflow::io::detail
