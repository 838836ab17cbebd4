#include "rigidflow/warp.hpp"

#include <cmath>

namespace rigidflow {

FlowField flip_horizontal(const FlowField& flow) {
  FlowField out;
  out.uv = flip_horizontal(flow.uv);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) out.u(x, y) = -out.u(x, y);
  return out;
}

WarpResult bilinear_warp(const Raster<double>& source, const FlowField& flow) {
  require_same_extent(source, flow.uv, "bilinear_warp");
  const int w = source.width();
  const int h = source.height();
  const int nc = source.channels();
  WarpResult out{Raster<double>(w, h, nc), Mask(w, h)};
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double sx = x + flow.u(x, y);
      const double sy = y + flow.v(x, y);
      if (!std::isfinite(sx) || !std::isfinite(sy)) continue;
      out.in_bounds.at(x, y) = sample_in_bounds(sx, sy, w, h) ? 1 : 0;
      const auto tap = BilinearTap::at(sx, sy);
      const double wx[2] = {1.0 - tap.fx, tap.fx};
      const double wy[2] = {1.0 - tap.fy, tap.fy};
      for (int c = 0; c < nc; ++c) {
        double acc = 0.0;
        for (int j = 0; j < 2; ++j) {
          const int ny = tap.y0 + j;
          if (wy[j] == 0.0 || ny < 0 || ny >= h) continue;
          double row_acc = 0.0;
          for (int i = 0; i < 2; ++i) {
            const int nx = tap.x0 + i;
            if (wx[i] == 0.0 || nx < 0 || nx >= w) continue;
            row_acc += wx[i] * source.at(nx, ny, c);
          }
          acc += wy[j] * row_acc;
        }
        out.values.at(x, y, c) = acc;
      }
    }
  }
  return out;
}

PointCloud warp_cloud(const PointCloud& cloud2, const FlowField& flow12) {
  require_same_extent(cloud2.points, flow12.uv, "warp_cloud");
  const int w = cloud2.width();
  const int h = cloud2.height();
  const WarpResult warped = bilinear_warp(cloud2.points, flow12);
  PointCloud out(w, h);
  out.points = warped.values;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!warped.in_bounds.at(x, y)) continue;
      const auto tap = BilinearTap::at(x + flow12.u(x, y), y + flow12.v(x, y));
      const double wx[2] = {1.0 - tap.fx, tap.fx};
      const double wy[2] = {1.0 - tap.fy, tap.fy};
      bool ok = true;
      for (int j = 0; j < 2 && ok; ++j)
        for (int i = 0; i < 2 && ok; ++i) {
          if (wx[i] == 0.0 || wy[j] == 0.0) continue;
          const int nx = tap.x0 + i;
          const int ny = tap.y0 + j;
          ok = cloud2.valid.contains(nx, ny) && cloud2.valid.at(nx, ny);
        }
      out.valid.at(x, y) = ok ? 1 : 0;
    }
  }
  return out;
}

ScalarField range_map(const FlowField& flow21) {
  const int w = flow21.width();
  const int h = flow21.height();
  ScalarField v(w, h);
  // Scatter in raster-scan order so the accumulation is reproducible.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double sx = x + flow21.u(x, y);
      const double sy = y + flow21.v(x, y);
      if (!std::isfinite(sx) || !std::isfinite(sy)) continue;
      const auto tap = BilinearTap::at(sx, sy);
      const double wx[2] = {1.0 - tap.fx, tap.fx};
      const double wy[2] = {1.0 - tap.fy, tap.fy};
      for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 2; ++i) {
          const int nx = tap.x0 + i;
          const int ny = tap.y0 + j;
          const double weight = wx[i] * wy[j];
          if (weight == 0.0 || !v.contains(nx, ny)) continue;
          v.at(nx, ny) += weight;
        }
    }
  }
  return v;
}

Mask estimate_occlusion(const FlowField& flow21, double threshold) {
  const ScalarField v = range_map(flow21);
  Mask out(v.width(), v.height());
  auto vv = v.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < vv.size(); ++i) ov[i] = vv[i] >= threshold ? 1 : 0;
  return out;
}

FlowField warp_flow_vjp(const Raster<double>& source, const FlowField& flow, const Raster<double>& grad_out) {
  require_same_extent(source, flow.uv, "warp_flow_vjp");
  require_same_extent(source, grad_out, "warp_flow_vjp");
  if (grad_out.channels() != source.channels()) throw DimensionError("warp_flow_vjp: channel count mismatch");
  const int w = source.width();
  const int h = source.height();
  const int nc = source.channels();
  FlowField g(w, h);
  const auto value = [&](int x, int y, int c) { return source.contains(x, y) ? source.at(x, y, c) : 0.0; };
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double sx = x + flow.u(x, y);
      const double sy = y + flow.v(x, y);
      if (!std::isfinite(sx) || !std::isfinite(sy)) continue;
      const auto tap = BilinearTap::at(sx, sy);
      double gu = 0.0;
      double gv = 0.0;
      for (int c = 0; c < nc; ++c) {
        const double go = grad_out.at(x, y, c);
        if (go == 0.0) continue;
        const double s00 = value(tap.x0, tap.y0, c);
        const double s10 = value(tap.x0 + 1, tap.y0, c);
        const double s01 = value(tap.x0, tap.y0 + 1, c);
        const double s11 = value(tap.x0 + 1, tap.y0 + 1, c);
        gu += go * ((1.0 - tap.fy) * (s10 - s00) + tap.fy * (s11 - s01));
        gv += go * ((1.0 - tap.fx) * (s01 - s00) + tap.fx * (s11 - s10));
      }
      g.u(x, y) = gu;
      g.v(x, y) = gv;
    }
  }
  return g;
}

Raster<double> warp_source_vjp(const FlowField& flow, const Raster<double>& grad_out) {
  require_same_extent(flow.uv, grad_out, "warp_source_vjp");
  const int w = flow.width();
  const int h = flow.height();
  const int nc = grad_out.channels();
  Raster<double> g(w, h, nc);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double sx = x + flow.u(x, y);
      const double sy = y + flow.v(x, y);
      if (!std::isfinite(sx) || !std::isfinite(sy)) continue;
      const auto tap = BilinearTap::at(sx, sy);
      const double wx[2] = {1.0 - tap.fx, tap.fx};
      const double wy[2] = {1.0 - tap.fy, tap.fy};
      for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 2; ++i) {
          const int nx = tap.x0 + i;
          const int ny = tap.y0 + j;
          const double weight = wx[i] * wy[j];
          if (weight == 0.0 || !g.contains(nx, ny)) continue;
          for (int c = 0; c < nc; ++c) g.at(nx, ny, c) += weight * grad_out.at(x, y, c);
        }
    }
  }
  return g;
}

ScalarField flow_magnitude_diff(const FlowField& a, const FlowField& b) {
  require_same_extent(a.uv, b.uv, "flow_magnitude_diff");
  ScalarField out(a.width(), a.height());
#pragma omp parallel for schedule(static)
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x)
      out.at(x, y) = std::hypot(a.u(x, y) - b.u(x, y), a.v(x, y) - b.v(x, y));
  return out;
}

}  // namespace rigidflow
