#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rigidflow::io::detail {

// Decoded PNG samples, widened to 16 bits, channel-interleaved.
struct PngData {
  int width = 0;
  int height = 0;
  int channels = 0;   // 1 (gray) or 3 (RGB) after expansion
  int bit_depth = 8;  // 8 or 16
  std::vector<std::uint16_t> samples;
};

// Encoder settings are pinned (zlib level 9, adaptive filters, no time or
// text chunks) so equal inputs give byte-identical files.
std::string encode_png(const PngData& data);
PngData decode_png(const std::string& bytes, const std::string& origin);

}  // namespace rigidflow::io::detail
