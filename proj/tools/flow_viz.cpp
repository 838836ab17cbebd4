#include "flow_viz.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace rigidflow::viz {

namespace {

std::vector<std::array<double, 3>> color_wheel() {
  constexpr int ry = 15, yg = 6, gc = 4, cb = 11, bm = 13, mr = 6;
  std::vector<std::array<double, 3>> w;
  for (int i = 0; i < ry; ++i) w.push_back({255, 255.0 * i / ry, 0});
  for (int i = 0; i < yg; ++i) w.push_back({255 - 255.0 * i / yg, 255, 0});
  for (int i = 0; i < gc; ++i) w.push_back({0, 255, 255.0 * i / gc});
  for (int i = 0; i < cb; ++i) w.push_back({0, 255 - 255.0 * i / cb, 255});
  for (int i = 0; i < bm; ++i) w.push_back({255.0 * i / bm, 0, 255});
  for (int i = 0; i < mr; ++i) w.push_back({255, 0, 255 - 255.0 * i / mr});
  return w;
}

}  // namespace

Image flow_to_color(const FlowField& flow, const Mask& valid, double max_magnitude) {
  const int w = flow.width(), h = flow.height();
  double scale = max_magnitude;
  if (scale <= 0.0) {
    scale = 0.0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (valid.at(x, y)) scale = std::max(scale, std::hypot(flow.u(x, y), flow.v(x, y)));
  }
  if (scale == 0.0) scale = 1.0;

  const auto wheel = color_wheel();
  const int n = static_cast<int>(wheel.size());
  Image out(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!valid.at(x, y)) continue;
      const double u = flow.u(x, y) / scale, v = flow.v(x, y) / scale;
      const double rad = std::hypot(u, v);
      const double a = std::atan2(-v, -u) / std::numbers::pi;
      const double fk = (a + 1.0) / 2.0 * (n - 1);
      const int k0 = static_cast<int>(std::floor(fk));
      const int k1 = (k0 + 1) % n;
      const double f = fk - k0;
      for (int c = 0; c < 3; ++c) {
        double col = ((1 - f) * wheel[k0][c] + f * wheel[k1][c]) / 255.0;
        col = rad <= 1.0 ? 1.0 - rad * (1.0 - col) : col * 0.75;
        out.at(x, y, c) = col;
      }
    }
  return out;
}

}  // namespace rigidflow::viz
