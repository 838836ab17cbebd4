#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rigidflow/error.hpp"

namespace rigidflow {

// Dense H x W x C raster, channel-interleaved, row-major. x is the column
// index, y the row index; pixel centers sit on integer coordinates.
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, int channels = 1, T fill = T{})
      : width_(width), height_(height), channels_(channels),
        data_(static_cast<std::size_t>(width) * height * channels, fill) {
    if (width < 0 || height < 0 || channels < 1) {
      throw DimensionError("raster dimensions must be non-negative");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  T& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  const T& at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  T* row(int y) { return data_.data() + static_cast<std::size_t>(y) * width_ * channels_; }
  const T* row(int y) const { return data_.data() + static_cast<std::size_t>(y) * width_ * channels_; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool same_shape(const Raster& other) const {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }
  template <typename U>
  bool same_extent(const Raster<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

// Binary per-pixel raster; entries are 0 or 1.
using Mask = Raster<std::uint8_t>;
// Real-valued scalar field (residual maps, loss weights, range maps).
using ScalarField = Raster<double>;
// RGB (or any channel count) image with entries in [0, 1].
using Image = Raster<double>;

template <typename A, typename B>
void require_same_extent(const A& a, const B& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw DimensionError(std::string(what) + ": raster dimensions differ (" +
                         std::to_string(a.width()) + "x" + std::to_string(a.height()) + " vs " +
                         std::to_string(b.width()) + "x" + std::to_string(b.height()) + ")");
  }
}

inline Mask full_mask(int width, int height) { return Mask(width, height, 1, 1); }

inline std::size_t count_set(const Mask& m) {
  std::size_t n = 0;
  for (auto v : m.values()) n += v != 0;
  return n;
}

inline Mask mask_and(const Mask& a, const Mask& b) {
  require_same_extent(a, b, "mask_and");
  Mask out(a.width(), a.height());
  auto av = a.values();
  auto bv = b.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = (av[i] && bv[i]) ? 1 : 0;
  return out;
}

inline Mask mask_not(const Mask& a) {
  Mask out(a.width(), a.height());
  auto av = a.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] ? 0 : 1;
  return out;
}

// Horizontal mirror: x -> W-1-x. Channel values are copied untouched.
template <typename T>
Raster<T> flip_horizontal(const Raster<T>& r) {
  Raster<T> out(r.width(), r.height(), r.channels());
  for (int y = 0; y < r.height(); ++y)
    for (int x = 0; x < r.width(); ++x)
      for (int c = 0; c < r.channels(); ++c) out.at(r.width() - 1 - x, y, c) = r.at(x, y, c);
  return out;
}

}  // namespace rigidflow
