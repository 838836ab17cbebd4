#include "rigidflow/losses.hpp"

#include <cmath>
#include <vector>

#include "rigidflow/rigid.hpp"

namespace rigidflow {

void LossWeights::validate() const {
  if (lambda_sm < 0 || lambda_st < 0 || lambda_rig < 0 || lambda_con < 0 || alpha < 0 || beta < 0 || delta < 0) {
    throw InvalidArgument("loss weights must be non-negative");
  }
  if (alpha > 1.0) throw InvalidArgument("loss weights: alpha must not exceed 1");
}

namespace {

double l1_sign(double d) {
  if (std::abs(d) <= kL1KinkTolerance) return 0.0;
  return d > 0.0 ? 1.0 : -1.0;
}

struct WindowStats {
  double mu_a;
  double mu_b;
  double var_a;
  double var_b;
  double cov;
  double n;
};

WindowStats window_stats(const Image& a, const Image& b, int x, int y, int c, int r) {
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  int n = 0;
  for (int j = std::max(0, y - r); j <= std::min(a.height() - 1, y + r); ++j)
    for (int i = std::max(0, x - r); i <= std::min(a.width() - 1, x + r); ++i) {
      const double va = a.at(i, j, c);
      const double vb = b.at(i, j, c);
      sa += va;
      sb += vb;
      saa += va * va;
      sbb += vb * vb;
      sab += va * vb;
      ++n;
    }
  const double inv = 1.0 / n;
  WindowStats s;
  s.mu_a = sa * inv;
  s.mu_b = sb * inv;
  s.var_a = saa * inv - s.mu_a * s.mu_a;
  s.var_b = sbb * inv - s.mu_b * s.mu_b;
  s.cov = sab * inv - s.mu_a * s.mu_b;
  s.n = n;
  return s;
}

double ssim_of(const WindowStats& s) {
  const double a1 = 2.0 * s.mu_a * s.mu_b + kSsimC1;
  const double a2 = 2.0 * s.cov + kSsimC2;
  const double b1 = s.mu_a * s.mu_a + s.mu_b * s.mu_b + kSsimC1;
  const double b2 = s.var_a + s.var_b + kSsimC2;
  return (a1 * a2) / (b1 * b2);
}

void require_image_pair(const Image& a, const Image& b, const char* what) {
  require_same_extent(a, b, what);
  if (a.channels() != b.channels()) throw DimensionError(std::string(what) + ": channel counts differ");
}

void require_radius(int r) {
  if (r < 0) throw InvalidArgument("ssim window radius must be non-negative");
}

double weight_sum(const ScalarField& w) {
  double s = 0.0;
  for (double v : w.values()) s += v;
  return s;
}

// Fixed row-order reduction of per-row partial sums.
template <typename RowFn>
double sum_rows(int height, RowFn&& row_sum) {
  std::vector<double> partial(static_cast<std::size_t>(height), 0.0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y) partial[static_cast<std::size_t>(y)] = row_sum(y);
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

double mean_abs_channel_diff(const Image& img, int x0, int y0, int x1, int y1) {
  double s = 0.0;
  for (int c = 0; c < img.channels(); ++c) s += std::abs(img.at(x1, y1, c) - img.at(x0, y0, c));
  return s / img.channels();
}

}  // namespace

ScalarField ssim(const Image& a, const Image& b, int radius) {
  require_image_pair(a, b, "ssim");
  require_radius(radius);
  const int w = a.width();
  const int h = a.height();
  const int nc = a.channels();
  ScalarField out(w, h);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int c = 0; c < nc; ++c) s += ssim_of(window_stats(a, b, x, y, c, radius));
      out.at(x, y) = s / nc;
    }
  return out;
}

ScalarField to_weight(const Mask& m) {
  ScalarField w(m.width(), m.height());
  auto mv = m.values();
  auto wv = w.values();
  for (std::size_t i = 0; i < mv.size(); ++i) wv[i] = mv[i] ? 1.0 : 0.0;
  return w;
}

ScalarField weight_product(const ScalarField& w, const Mask& m) {
  require_same_extent(w, m, "weight_product");
  ScalarField out = w;
  auto mv = m.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < mv.size(); ++i)
    if (!mv[i]) ov[i] = 0.0;
  return out;
}

PhotometricTerm photometric_loss(const Image& target, const Image& recon, const ScalarField& weight, double alpha,
                                 int ssim_radius) {
  require_image_pair(target, recon, "photometric_loss");
  require_same_extent(target, weight, "photometric_loss");
  require_radius(ssim_radius);
  const int w = target.width();
  const int nc = target.channels();
  PhotometricTerm term;
  term.support = weight_sum(weight);
  if (term.support == 0.0) return term;
  const double sum = sum_rows(target.height(), [&](int y) {
    double row = 0.0;
    for (int x = 0; x < w; ++x) {
      const double wt = weight.at(x, y);
      if (wt == 0.0) continue;
      double s = 0.0;
      double l1 = 0.0;
      for (int c = 0; c < nc; ++c) {
        if (alpha != 0.0) s += ssim_of(window_stats(target, recon, x, y, c, ssim_radius));
        l1 += std::abs(target.at(x, y, c) - recon.at(x, y, c));
      }
      const double dssim = alpha != 0.0 ? alpha * (1.0 - s / nc) * 0.5 : 0.0;
      row += wt * (dssim + (1.0 - alpha) * l1 / nc);
    }
    return row;
  });
  term.value = sum / term.support;
  return term;
}

Image photometric_recon_gradient(const Image& target, const Image& recon, const ScalarField& weight, double alpha,
                                 int ssim_radius) {
  require_image_pair(target, recon, "photometric_recon_gradient");
  require_same_extent(target, weight, "photometric_recon_gradient");
  require_radius(ssim_radius);
  const int w = target.width();
  const int h = target.height();
  const int nc = target.channels();
  const int r = ssim_radius;
  Image grad(w, h, nc);
  const double support = weight_sum(weight);
  if (support == 0.0) return grad;

  // Per (pixel, channel) partials of SSIM with respect to mu_b, var_b and cov,
  // pre-scaled by dLoss/dSSIM and 1/n so the gather below is a plain sum.
  struct Partial {
    double d_mu = 0, d_var = 0, d_cov = 0, mu_a = 0, mu_b = 0;
  };
  std::vector<Partial> partial(static_cast<std::size_t>(w) * h * nc);
  if (alpha != 0.0) {
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double wt = weight.at(x, y);
        if (wt == 0.0) continue;
        const double coef = -alpha * wt / (2.0 * nc * support);
        for (int c = 0; c < nc; ++c) {
          const WindowStats s = window_stats(target, recon, x, y, c, r);
          const double a1 = 2.0 * s.mu_a * s.mu_b + kSsimC1;
          const double a2 = 2.0 * s.cov + kSsimC2;
          const double b1 = s.mu_a * s.mu_a + s.mu_b * s.mu_b + kSsimC1;
          const double b2 = s.var_a + s.var_b + kSsimC2;
          const double value = (a1 * a2) / (b1 * b2);
          Partial& p = partial[(static_cast<std::size_t>(y) * w + x) * nc + c];
          const double scale = coef / s.n;
          p.d_mu = scale * (2.0 * s.mu_a * a2 / (b1 * b2) - value * 2.0 * s.mu_b / b1);
          p.d_var = scale * (-value / b2);
          p.d_cov = scale * (2.0 * a1 / (b1 * b2));
          p.mu_a = s.mu_a;
          p.mu_b = s.mu_b;
        }
      }
  }

#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < nc; ++c) {
        const double a = target.at(x, y, c);
        const double b = recon.at(x, y, c);
        double g = 0.0;
        if (alpha != 0.0) {
          for (int j = std::max(0, y - r); j <= std::min(h - 1, y + r); ++j)
            for (int i = std::max(0, x - r); i <= std::min(w - 1, x + r); ++i) {
              const Partial& p = partial[(static_cast<std::size_t>(j) * w + i) * nc + c];
              g += p.d_mu + p.d_var * 2.0 * (b - p.mu_b) + p.d_cov * (a - p.mu_a);
            }
        }
        g += (1.0 - alpha) * weight.at(x, y) / (nc * support) * l1_sign(b - a);
        grad.at(x, y, c) = g;
      }
  return grad;
}

double smoothness_loss(const FlowField& flow, const Image& image, const Mask& region, double beta) {
  require_same_extent(flow.uv, image, "smoothness_loss");
  require_same_extent(flow.uv, region, "smoothness_loss");
  const int w = flow.width();
  const int h = flow.height();
  const double sum = sum_rows(h, [&](int y) {
    double row = 0.0;
    for (int x = 0; x < w; ++x) {
      if (!region.at(x, y)) continue;
      if (x > 0 && x < w - 1) {
        const double e = std::exp(-beta * 0.5 * mean_abs_channel_diff(image, x - 1, y, x + 1, y));
        for (int c = 0; c < 2; ++c)
          row += std::abs(flow.uv.at(x - 1, y, c) - 2.0 * flow.uv.at(x, y, c) + flow.uv.at(x + 1, y, c)) * e;
      }
      if (y > 0 && y < h - 1) {
        const double e = std::exp(-beta * 0.5 * mean_abs_channel_diff(image, x, y - 1, x, y + 1));
        for (int c = 0; c < 2; ++c)
          row += std::abs(flow.uv.at(x, y - 1, c) - 2.0 * flow.uv.at(x, y, c) + flow.uv.at(x, y + 1, c)) * e;
      }
    }
    return row;
  });
  return sum / (static_cast<double>(w) * h);
}

FlowField smoothness_gradient(const FlowField& flow, const Image& image, const Mask& region, double beta) {
  require_same_extent(flow.uv, image, "smoothness_gradient");
  require_same_extent(flow.uv, region, "smoothness_gradient");
  const int w = flow.width();
  const int h = flow.height();
  const double inv_n = 1.0 / (static_cast<double>(w) * h);
  FlowField g(w, h);
  // Scatter in raster order: each centre pixel touches its two neighbors.
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!region.at(x, y)) continue;
      if (x > 0 && x < w - 1) {
        const double e = std::exp(-beta * 0.5 * mean_abs_channel_diff(image, x - 1, y, x + 1, y)) * inv_n;
        for (int c = 0; c < 2; ++c) {
          const double s =
              e * l1_sign(flow.uv.at(x - 1, y, c) - 2.0 * flow.uv.at(x, y, c) + flow.uv.at(x + 1, y, c));
          g.uv.at(x - 1, y, c) += s;
          g.uv.at(x, y, c) -= 2.0 * s;
          g.uv.at(x + 1, y, c) += s;
        }
      }
      if (y > 0 && y < h - 1) {
        const double e = std::exp(-beta * 0.5 * mean_abs_channel_diff(image, x, y - 1, x, y + 1)) * inv_n;
        for (int c = 0; c < 2; ++c) {
          const double s =
              e * l1_sign(flow.uv.at(x, y - 1, c) - 2.0 * flow.uv.at(x, y, c) + flow.uv.at(x, y + 1, c));
          g.uv.at(x, y - 1, c) += s;
          g.uv.at(x, y, c) -= 2.0 * s;
          g.uv.at(x, y + 1, c) += s;
        }
      }
    }
  return g;
}

double consistency_loss(const FlowField& f_opt, const FlowField& f_rig_refined, const Mask& moving) {
  require_same_extent(f_opt.uv, f_rig_refined.uv, "consistency_loss");
  require_same_extent(f_opt.uv, moving, "consistency_loss");
  const int w = f_opt.width();
  const int h = f_opt.height();
  const double sum = sum_rows(h, [&](int y) {
    double row = 0.0;
    for (int x = 0; x < w; ++x) {
      if (moving.at(x, y)) continue;
      row += std::abs(f_opt.u(x, y) - f_rig_refined.u(x, y)) + std::abs(f_opt.v(x, y) - f_rig_refined.v(x, y));
    }
    return row;
  });
  return sum / (static_cast<double>(w) * h);
}

ConsistencyGradient consistency_gradient(const FlowField& f_opt, const FlowField& f_rig_refined, const Mask& moving) {
  require_same_extent(f_opt.uv, f_rig_refined.uv, "consistency_gradient");
  require_same_extent(f_opt.uv, moving, "consistency_gradient");
  const int w = f_opt.width();
  const int h = f_opt.height();
  const double inv_n = 1.0 / (static_cast<double>(w) * h);
  ConsistencyGradient g{FlowField(w, h), FlowField(w, h)};
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (moving.at(x, y)) continue;
      g.d_opt.u(x, y) = inv_n * l1_sign(f_opt.u(x, y) - f_rig_refined.u(x, y));
      g.d_opt.v(x, y) = inv_n * l1_sign(f_opt.v(x, y) - f_rig_refined.v(x, y));
    }
  return g;
}

// ---------------------------------------------------------------------------
// Stereo

namespace {

FlowField horizontal_flow(const ScalarField& d, double sign) {
  FlowField f(d.width(), d.height());
  for (int y = 0; y < d.height(); ++y)
    for (int x = 0; x < d.width(); ++x) f.u(x, y) = sign * d.at(x, y);
  return f;
}

struct StereoView {
  FlowField flow;     // sampling offsets into the other view
  WarpResult recon;   // other image sampled along flow
  WarpResult sampled; // other disparity sampled along flow
  ScalarField weight; // in-bounds and valid
};

StereoView make_view(const Image& other_image, const DisparityMap& own, const DisparityMap& other, double sign) {
  StereoView v;
  v.flow = horizontal_flow(own.values, sign);
  v.recon = bilinear_warp(other_image, v.flow);
  v.sampled = bilinear_warp(other.values, v.flow);
  v.weight = weight_product(to_weight(v.recon.in_bounds), own.valid);
  return v;
}

double disparity_smoothness(const DisparityMap& d, const Image& image, double beta) {
  const int w = d.width();
  const int h = d.height();
  const double sum = sum_rows(h, [&](int y) {
    double row = 0.0;
    for (int x = 0; x < w; ++x) {
      if (!d.valid.at(x, y)) continue;
      if (x + 1 < w && d.valid.at(x + 1, y))
        row += std::abs(d.values.at(x + 1, y) - d.values.at(x, y)) *
               std::exp(-beta * mean_abs_channel_diff(image, x, y, x + 1, y));
      if (y + 1 < h && d.valid.at(x, y + 1))
        row += std::abs(d.values.at(x, y + 1) - d.values.at(x, y)) *
               std::exp(-beta * mean_abs_channel_diff(image, x, y, x, y + 1));
    }
    return row;
  });
  return sum / (static_cast<double>(w) * h);
}

void disparity_smoothness_gradient(const DisparityMap& d, const Image& image, double beta, double scale,
                                   ScalarField& g) {
  const int w = d.width();
  const int h = d.height();
  const double k = scale / (static_cast<double>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!d.valid.at(x, y)) continue;
      if (x + 1 < w && d.valid.at(x + 1, y)) {
        const double s = k * std::exp(-beta * mean_abs_channel_diff(image, x, y, x + 1, y)) *
                         l1_sign(d.values.at(x + 1, y) - d.values.at(x, y));
        g.at(x + 1, y) += s;
        g.at(x, y) -= s;
      }
      if (y + 1 < h && d.valid.at(x, y + 1)) {
        const double s = k * std::exp(-beta * mean_abs_channel_diff(image, x, y, x, y + 1)) *
                         l1_sign(d.values.at(x, y + 1) - d.values.at(x, y));
        g.at(x, y + 1) += s;
        g.at(x, y) -= s;
      }
    }
}

double left_right_term(const DisparityMap& own, const StereoView& v) {
  const int w = own.width();
  const double sum = sum_rows(own.height(), [&](int y) {
    double row = 0.0;
    for (int x = 0; x < w; ++x)
      if (v.weight.at(x, y) != 0.0) row += std::abs(own.values.at(x, y) - v.sampled.values.at(x, y));
    return row;
  });
  return sum / (static_cast<double>(w) * own.height());
}

void require_stereo_inputs(const Image& left, const Image& right, const DisparityMap& dl, const DisparityMap& dr) {
  require_image_pair(left, right, "stereo_loss");
  require_same_extent(left, dl.values, "stereo_loss");
  require_same_extent(left, dr.values, "stereo_loss");
  require_same_extent(dl.values, dl.valid, "stereo_loss");
  require_same_extent(dr.values, dr.valid, "stereo_loss");
}

}  // namespace

StereoTerms stereo_loss(const Image& left, const Image& right, const DisparityMap& disp_left,
                        const DisparityMap& disp_right, const StereoParams& p) {
  require_stereo_inputs(left, right, disp_left, disp_right);
  const StereoView lv = make_view(right, disp_left, disp_right, -1.0);
  const StereoView rv = make_view(left, disp_right, disp_left, +1.0);
  StereoTerms t;
  t.appearance = photometric_loss(left, lv.recon.values, lv.weight, p.alpha, p.ssim_radius).value +
                 photometric_loss(right, rv.recon.values, rv.weight, p.alpha, p.ssim_radius).value;
  t.smoothness = disparity_smoothness(disp_left, left, p.edge_beta) + disparity_smoothness(disp_right, right, p.edge_beta);
  t.left_right = left_right_term(disp_left, lv) + left_right_term(disp_right, rv);
  t.total = p.appearance_weight * t.appearance + p.smoothness_weight * t.smoothness + p.lr_weight * t.left_right;
  return t;
}

StereoGradient stereo_gradient(const Image& left, const Image& right, const DisparityMap& disp_left,
                               const DisparityMap& disp_right, const StereoParams& p) {
  require_stereo_inputs(left, right, disp_left, disp_right);
  const int w = left.width();
  const int h = left.height();
  const double inv_n = 1.0 / (static_cast<double>(w) * h);
  const StereoView lv = make_view(right, disp_left, disp_right, -1.0);
  const StereoView rv = make_view(left, disp_right, disp_left, +1.0);
  StereoGradient g{ScalarField(w, h), ScalarField(w, h)};

  // Appearance: the left view samples along u = -d_L, the right along u = +d_R.
  {
    const Image gl = photometric_recon_gradient(left, lv.recon.values, lv.weight, p.alpha, p.ssim_radius);
    const FlowField fl = warp_flow_vjp(right, lv.flow, gl);
    const Image gr = photometric_recon_gradient(right, rv.recon.values, rv.weight, p.alpha, p.ssim_radius);
    const FlowField fr = warp_flow_vjp(left, rv.flow, gr);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        g.d_left.at(x, y) -= p.appearance_weight * fl.u(x, y);
        g.d_right.at(x, y) += p.appearance_weight * fr.u(x, y);
      }
  }

  disparity_smoothness_gradient(disp_left, left, p.edge_beta, p.smoothness_weight, g.d_left);
  disparity_smoothness_gradient(disp_right, right, p.edge_beta, p.smoothness_weight, g.d_right);

  // Left-right: e = d_own(p) - d_other(p + sign * d_own(p)).
  const auto lr = [&](const DisparityMap& own, const DisparityMap& other, const StereoView& v, double sign,
                      ScalarField& g_own, ScalarField& g_other) {
    ScalarField coef(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (v.weight.at(x, y) != 0.0)
          coef.at(x, y) = p.lr_weight * inv_n * l1_sign(own.values.at(x, y) - v.sampled.values.at(x, y));
    // d(sample)/du contracted with -coef; u = sign * d_own.
    ScalarField neg(w, h);
    for (std::size_t i = 0; i < coef.size(); ++i) neg.values()[i] = -coef.values()[i];
    const FlowField du = warp_flow_vjp(other.values, v.flow, neg);
    const Raster<double> splat = warp_source_vjp(v.flow, neg);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        g_own.at(x, y) += coef.at(x, y) + sign * du.u(x, y);
        g_other.at(x, y) += splat.at(x, y);
      }
  };
  lr(disp_left, disp_right, lv, -1.0, g.d_left, g.d_right);
  lr(disp_right, disp_left, rv, +1.0, g.d_right, g.d_left);
  return g;
}

RigidTerms rigid_loss(const Image& l1, const Image& recon_rig, const Image& recon_rig_refined, const Mask& non_occluded,
                      const Mask& moving, double alpha, const Mask* valid_rig, const Mask* valid_rig_refined) {
  require_same_extent(l1, non_occluded, "rigid_loss");
  require_same_extent(l1, moving, "rigid_loss");
  const ScalarField base = to_weight(mask_and(non_occluded, mask_not(moving)));
  ScalarField w1 = valid_rig ? weight_product(base, *valid_rig) : base;
  ScalarField w2 = valid_rig_refined ? weight_product(base, *valid_rig_refined) : base;
  return {photometric_loss(l1, recon_rig, w1, alpha), photometric_loss(l1, recon_rig_refined, w2, alpha)};
}

// ---------------------------------------------------------------------------
// Total loss and gradients

double weighted_total(const LossReport& r, const LossWeights& w) {
  return r.opt_ph + w.lambda_sm * r.opt_sm + w.lambda_st * r.stereo + w.lambda_rig * (r.rig1 + r.rig2) +
         w.lambda_con * r.con;
}

namespace {

struct Prepared {
  Mask moving;         // M1 (all zero when absent)
  Mask smooth_region;  // M1, or all ones when absent
  WarpResult recon_opt;
  ScalarField w_opt;
  RigidFlow rig_init;
  RigidFlow rig_refined;
  WarpResult recon_rig;
  WarpResult recon_rig_refined;
  ScalarField w_rig;
  ScalarField w_rig_refined;
  Mask con_moving;  // M1 plus pixels without a valid refined rigid flow
  StereoParams stereo;
};

void require_inputs(const LossInputs& in) {
  const Image& l1 = in.left1;
  require_image_pair(l1, in.left2, "total_loss");
  require_image_pair(l1, in.right1, "total_loss");
  require_same_extent(l1, in.flow_opt.uv, "total_loss");
  require_same_extent(l1, in.depth1.values, "total_loss");
  require_same_extent(l1, in.non_occluded, "total_loss");
  if (in.moving) require_same_extent(l1, *in.moving, "total_loss");
  if (l1.width() != in.intrinsics.width || l1.height() != in.intrinsics.height)
    throw DimensionError("total_loss: images do not match the intrinsics");
}

Prepared prepare(const LossInputs& in, const LossWeights& weights) {
  require_inputs(in);
  weights.validate();
  const int w = in.left1.width();
  const int h = in.left1.height();
  Prepared p;
  p.moving = in.moving ? *in.moving : Mask(w, h, 1, 0);
  p.smooth_region = in.moving ? *in.moving : full_mask(w, h);
  p.recon_opt = bilinear_warp(in.left2, in.flow_opt);
  p.w_opt = to_weight(mask_and(in.non_occluded, p.recon_opt.in_bounds));
  p.rig_init = rigid_flow(in.depth1, in.pose_init, in.intrinsics);
  p.rig_refined = rigid_flow(in.depth1, in.pose_refined, in.intrinsics);
  p.recon_rig = bilinear_warp(in.left2, p.rig_init.flow);
  p.recon_rig_refined = bilinear_warp(in.left2, p.rig_refined.flow);
  const Mask static_visible = mask_and(in.non_occluded, mask_not(p.moving));
  p.w_rig = to_weight(mask_and(static_visible, mask_and(p.rig_init.valid, p.recon_rig.in_bounds)));
  p.w_rig_refined =
      to_weight(mask_and(static_visible, mask_and(p.rig_refined.valid, p.recon_rig_refined.in_bounds)));
  p.con_moving = mask_not(mask_and(mask_not(p.moving), p.rig_refined.valid));
  p.stereo = in.stereo;
  p.stereo.alpha = weights.alpha;
  p.stereo.ssim_radius = in.ssim_radius;
  return p;
}

struct RigidPathGradient {
  Pose6 d_pose{};
  ScalarField d_depth;
};

RigidPathGradient rigid_path_gradient(const LossInputs& in, const PoseSE3& pose, const RigidFlow& rf,
                                      const WarpResult& recon, const ScalarField& weight, double alpha) {
  const int w = in.left1.width();
  const int h = in.left1.height();
  const Image g_recon = photometric_recon_gradient(in.left1, recon.values, weight, alpha, in.ssim_radius);
  const FlowField g_flow = warp_flow_vjp(in.left2, rf.flow, g_recon);
  const Intrinsics& k = in.intrinsics;
  const Eigen::Matrix3d& rot = pose.rotation();
  const Eigen::Vector3d& t = pose.translation();
  const Eigen::Matrix3d jl = so3_left_jacobian(rotation_log(rot));
  const Eigen::Matrix3d kinv = k.inverse_matrix();

  RigidPathGradient out;
  out.d_depth = ScalarField(w, h);
  Eigen::Vector3d g_rot = Eigen::Vector3d::Zero();
  Eigen::Vector3d g_t = Eigen::Vector3d::Zero();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!rf.valid.at(x, y)) continue;
      const double gu = g_flow.u(x, y);
      const double gv = g_flow.v(x, y);
      if (gu == 0.0 && gv == 0.0) continue;
      const Eigen::Vector3d ray = kinv * Eigen::Vector3d(x, y, 1.0);
      const Eigen::Vector3d rx = rot * (in.depth1.values.at(x, y) * ray);
      const Eigen::Vector3d q = rx + t;
      const double iz = 1.0 / q.z();
      const Eigen::Vector3d g_q(gu * k.fx * iz, gv * k.fy * iz,
                                -(gu * k.fx * q.x() + gv * k.fy * q.y()) * iz * iz);
      g_t += g_q;
      g_rot += jl.transpose() * rx.cross(g_q);
      out.d_depth.at(x, y) = g_q.dot(rot * ray);
    }
  out.d_pose = {g_rot.x(), g_rot.y(), g_rot.z(), g_t.x(), g_t.y(), g_t.z()};
  return out;
}

void add_scaled(Raster<double>& acc, const Raster<double>& g, double s) {
  auto a = acc.values();
  auto b = g.values();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
}

Raster<double> zeros_like(const Raster<double>& r) { return Raster<double>(r.width(), r.height(), r.channels()); }

}  // namespace

LossReport total_loss(const LossInputs& in, const LossWeights& weights) {
  const Prepared p = prepare(in, weights);
  LossReport r;
  const PhotometricTerm opt = photometric_loss(in.left1, p.recon_opt.values, p.w_opt, weights.alpha, in.ssim_radius);
  r.opt_ph = opt.value;
  r.opt_ph_support = opt.support;
  r.opt_sm = smoothness_loss(in.flow_opt, in.left1, p.smooth_region, weights.beta);
  r.smoothness_pixels = count_set(p.smooth_region);
  r.stereo_terms = stereo_loss(in.left1, in.right1, in.disp_left, in.disp_right, p.stereo);
  r.stereo = r.stereo_terms.total;
  const PhotometricTerm rig1 =
      photometric_loss(in.left1, p.recon_rig.values, p.w_rig, weights.alpha, in.ssim_radius);
  const PhotometricTerm rig2 =
      photometric_loss(in.left1, p.recon_rig_refined.values, p.w_rig_refined, weights.alpha, in.ssim_radius);
  r.rig1 = rig1.value;
  r.rig1_support = rig1.support;
  r.rig2 = rig2.value;
  r.rig2_support = rig2.support;
  r.con = consistency_loss(in.flow_opt, p.rig_refined.flow, p.con_moving);
  r.consistency_pixels = p.con_moving.pixel_count() - count_set(p.con_moving);
  r.moving_pixels = count_set(p.moving);
  r.total = weighted_total(r, weights);
  return r;
}

std::string to_string(LossTerm t) {
  switch (t) {
    case LossTerm::OptPhotometric: return "opt_ph";
    case LossTerm::OptSmoothness: return "opt_sm";
    case LossTerm::Stereo: return "stereo";
    case LossTerm::Rigid1: return "rig1";
    case LossTerm::Rigid2: return "rig2";
    case LossTerm::Consistency: return "con";
    case LossTerm::Total: return "total";
  }
  return "?";
}

std::string to_string(LossInput i) {
  switch (i) {
    case LossInput::FlowOpt: return "flow_opt";
    case LossInput::RigidFlowRefined: return "rigid_flow_refined";
    case LossInput::DispLeft: return "disp_left";
    case LossInput::DispRight: return "disp_right";
    case LossInput::Depth1: return "depth1";
    case LossInput::PoseInit: return "pose_init";
    case LossInput::PoseRefined: return "pose_refined";
  }
  return "?";
}

GradientBundle gradient(LossTerm term, const LossInputs& in, LossInput wrt, const LossWeights& weights) {
  const Prepared p = prepare(in, weights);
  const std::string key = to_string(wrt);
  const int w = in.left1.width();
  const int h = in.left1.height();
  GradientBundle out;

  const auto flow_term = [&](LossTerm t) -> Raster<double> {
    switch (t) {
      case LossTerm::OptPhotometric: {
        const Image g = photometric_recon_gradient(in.left1, p.recon_opt.values, p.w_opt, weights.alpha,
                                                   in.ssim_radius);
        return warp_flow_vjp(in.left2, in.flow_opt, g).uv;
      }
      case LossTerm::OptSmoothness:
        return smoothness_gradient(in.flow_opt, in.left1, p.smooth_region, weights.beta).uv;
      case LossTerm::Consistency:
        return consistency_gradient(in.flow_opt, p.rig_refined.flow, p.con_moving).d_opt.uv;
      default: break;
    }
    return Raster<double>(w, h, 2);
  };
  const auto unsupported = [&] {
    throw UnsupportedGradientError("no gradient path from " + to_string(term) + " to " + key);
  };

  switch (wrt) {
    case LossInput::FlowOpt: {
      if (term == LossTerm::OptPhotometric || term == LossTerm::OptSmoothness || term == LossTerm::Consistency) {
        out.rasters[key] = flow_term(term);
      } else if (term == LossTerm::Total) {
        Raster<double> g = flow_term(LossTerm::OptPhotometric);
        add_scaled(g, flow_term(LossTerm::OptSmoothness), weights.lambda_sm);
        add_scaled(g, flow_term(LossTerm::Consistency), weights.lambda_con);
        out.rasters[key] = std::move(g);
      } else {
        unsupported();
      }
      break;
    }
    case LossInput::RigidFlowRefined: {
      // Stop-gradient: the refined rigid flow is a fixed target.
      if (term != LossTerm::Consistency && term != LossTerm::Total) unsupported();
      out.rasters[key] = Raster<double>(w, h, 2);
      break;
    }
    case LossInput::DispLeft:
    case LossInput::DispRight: {
      if (term != LossTerm::Stereo && term != LossTerm::Total) unsupported();
      StereoGradient g = stereo_gradient(in.left1, in.right1, in.disp_left, in.disp_right, p.stereo);
      Raster<double> r = wrt == LossInput::DispLeft ? std::move(g.d_left) : std::move(g.d_right);
      if (term == LossTerm::Total) {
        Raster<double> scaled = zeros_like(r);
        add_scaled(scaled, r, weights.lambda_st);
        r = std::move(scaled);
      }
      out.rasters[key] = std::move(r);
      break;
    }
    case LossInput::Depth1: {
      Raster<double> g(w, h);
      if (term == LossTerm::Rigid1 || term == LossTerm::Total) {
        auto rg = rigid_path_gradient(in, in.pose_init, p.rig_init, p.recon_rig, p.w_rig, weights.alpha);
        add_scaled(g, rg.d_depth, term == LossTerm::Total ? weights.lambda_rig : 1.0);
      }
      if (term == LossTerm::Rigid2 || term == LossTerm::Total) {
        auto rg = rigid_path_gradient(in, in.pose_refined, p.rig_refined, p.recon_rig_refined, p.w_rig_refined,
                                      weights.alpha);
        add_scaled(g, rg.d_depth, term == LossTerm::Total ? weights.lambda_rig : 1.0);
      }
      if (term != LossTerm::Rigid1 && term != LossTerm::Rigid2 && term != LossTerm::Total &&
          term != LossTerm::Consistency)
        unsupported();
      out.rasters[key] = std::move(g);
      break;
    }
    case LossInput::PoseInit:
    case LossInput::PoseRefined: {
      const bool init = wrt == LossInput::PoseInit;
      const LossTerm own = init ? LossTerm::Rigid1 : LossTerm::Rigid2;
      Pose6 g{};
      if (term == own || term == LossTerm::Total) {
        auto rg = init ? rigid_path_gradient(in, in.pose_init, p.rig_init, p.recon_rig, p.w_rig, weights.alpha)
                       : rigid_path_gradient(in, in.pose_refined, p.rig_refined, p.recon_rig_refined,
                                             p.w_rig_refined, weights.alpha);
        const double s = term == LossTerm::Total ? weights.lambda_rig : 1.0;
        for (int i = 0; i < 6; ++i) g[static_cast<std::size_t>(i)] = s * rg.d_pose[static_cast<std::size_t>(i)];
      } else if (!(term == LossTerm::Consistency && !init)) {
        unsupported();
      }
      out.vectors[key] = g;
      break;
    }
  }
  return out;
}

}  // namespace rigidflow
