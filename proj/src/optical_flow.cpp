#include "tdd/optical_flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "tdd/resize.hpp"

namespace tdd {

namespace {

void validate_params(const FlowParams& p) {
  if (p.window < 3 || p.window % 2 == 0)
    throw std::invalid_argument("estimate_flow: window must be odd and >= 3");
  if (p.pyramid_levels < 1)
    throw std::invalid_argument("estimate_flow: pyramid_levels must be >= 1");
  if (p.iterations < 1)
    throw std::invalid_argument("estimate_flow: iterations must be >= 1");
}

/// Summed-area table with one extra row/column of zeros.
struct Integral {
  int h = 0, w = 0;
  std::vector<double> s;

  void build(const std::vector<float>& img, int height, int width) {
    h = height;
    w = width;
    s.assign(static_cast<std::size_t>(h + 1) * (w + 1), 0.0);
    for (int y = 0; y < h; ++y) {
      double row = 0.0;
      for (int x = 0; x < w; ++x) {
        row += img[static_cast<std::size_t>(y) * w + x];
        s[static_cast<std::size_t>(y + 1) * (w + 1) + (x + 1)] =
            s[static_cast<std::size_t>(y) * (w + 1) + (x + 1)] + row;
      }
    }
  }

  /// Sum over [y0, y1] x [x0, x1], clamped to the image.
  double rect(int y0, int x0, int y1, int x1) const {
    y0 = std::max(y0, 0);
    x0 = std::max(x0, 0);
    y1 = std::min(y1, h - 1);
    x1 = std::min(x1, w - 1);
    const std::size_t stride = w + 1;
    return s[(y1 + 1) * stride + (x1 + 1)] - s[y0 * stride + (x1 + 1)] -
           s[(y1 + 1) * stride + x0] + s[y0 * stride + x0];
  }
};

void gradients(const Image& img, std::vector<float>& gx, std::vector<float>& gy) {
  const int h = img.height, w = img.width;
  gx.assign(static_cast<std::size_t>(h) * w, 0.0f);
  gy.assign(static_cast<std::size_t>(h) * w, 0.0f);
  for (int y = 0; y < h; ++y) {
    const int ym = std::max(y - 1, 0), yp = std::min(y + 1, h - 1);
    for (int x = 0; x < w; ++x) {
      const int xm = std::max(x - 1, 0), xp = std::min(x + 1, w - 1);
      gx[static_cast<std::size_t>(y) * w + x] =
          0.5f * (img.at(y, xp) - img.at(y, xm));
      gy[static_cast<std::size_t>(y) * w + x] =
          0.5f * (img.at(yp, x) - img.at(ym, x));
    }
  }
}

}  // namespace

FlowField estimate_flow(const Image& a, const Image& b, const FlowParams& p) {
  validate_params(p);
  if (a.empty() || b.empty())
    throw std::invalid_argument("estimate_flow: empty image");
  if (a.channels != 1 || b.channels != 1)
    throw std::invalid_argument("estimate_flow: expects grayscale input");
  if (a.height != b.height || a.width != b.width)
    throw std::invalid_argument("estimate_flow: dimension mismatch");

  // Factor-2 pyramid, coarsest level kept at 8 px or larger.
  std::vector<Image> pyr_a{a}, pyr_b{b};
  for (int lvl = 1; lvl < p.pyramid_levels; ++lvl) {
    const Image& prev = pyr_a.back();
    if (std::min(prev.height, prev.width) < 16) break;
    pyr_a.push_back(resize_bilinear(prev, 0.5));
    pyr_b.push_back(resize_bilinear(pyr_b.back(), 0.5));
  }

  const int levels = static_cast<int>(pyr_a.size());
  const int radius = p.window / 2;
  FlowField flow(pyr_a[levels - 1].height, pyr_a[levels - 1].width);

  std::vector<float> gx, gy, xx, xy, yy, xt, yt;
  Integral ixx, ixy, iyy, ixt, iyt;

  for (int lvl = levels - 1; lvl >= 0; --lvl) {
    const Image& ia = pyr_a[lvl];
    const Image& ib = pyr_b[lvl];
    const int h = ia.height, w = ia.width;
    const std::size_t npix = static_cast<std::size_t>(h) * w;

    if (flow.height != h || flow.width != w) {
      // Upsample the coarser flow and rescale displacements to this level.
      FlowField up(h, w);
      const double fx = static_cast<double>(w) / flow.width;
      const double fy = static_cast<double>(h) / flow.height;
      for (int y = 0; y < h; ++y) {
        const double sy = (y + 0.5) / fy - 0.5;
        for (int x = 0; x < w; ++x) {
          const double sx = (x + 0.5) / fx - 0.5;
          const int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, flow.width - 1);
          const int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, flow.height - 1);
          const int x1 = std::min(x0 + 1, flow.width - 1);
          const int y1 = std::min(y0 + 1, flow.height - 1);
          const double wx = std::clamp(sx - x0, 0.0, 1.0);
          const double wy = std::clamp(sy - y0, 0.0, 1.0);
          const double u00 = flow.u_at(y0, x0), u01 = flow.u_at(y0, x1);
          const double u10 = flow.u_at(y1, x0), u11 = flow.u_at(y1, x1);
          const double v00 = flow.v_at(y0, x0), v01 = flow.v_at(y0, x1);
          const double v10 = flow.v_at(y1, x0), v11 = flow.v_at(y1, x1);
          up.u_at(y, x) = static_cast<float>(
              fx * ((u00 + wx * (u01 - u00)) * (1 - wy) + (u10 + wx * (u11 - u10)) * wy));
          up.v_at(y, x) = static_cast<float>(
              fy * ((v00 + wx * (v01 - v00)) * (1 - wy) + (v10 + wx * (v11 - v10)) * wy));
        }
      }
      flow = std::move(up);
    }

    gradients(ia, gx, gy);
    xx.resize(npix);
    xy.resize(npix);
    yy.resize(npix);
    for (std::size_t i = 0; i < npix; ++i) {
      xx[i] = gx[i] * gx[i];
      xy[i] = gx[i] * gy[i];
      yy[i] = gy[i] * gy[i];
    }
    ixx.build(xx, h, w);
    ixy.build(xy, h, w);
    iyy.build(yy, h, w);

    xt.resize(npix);
    yt.resize(npix);
    for (int iter = 0; iter < p.iterations; ++iter) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          const float warped =
              sample_bilinear_clamp(ib, x + flow.u_at(y, x), y + flow.v_at(y, x));
          const float it = warped - ia.at(y, x);
          xt[i] = gx[i] * it;
          yt[i] = gy[i] * it;
        }
      }
      ixt.build(xt, h, w);
      iyt.build(yt, h, w);

      for (int y = 0; y < h; ++y) {
        const int y0 = y - radius, y1 = y + radius;
        for (int x = 0; x < w; ++x) {
          const int x0 = x - radius, x1 = x + radius;
          const double sxx = ixx.rect(y0, x0, y1, x1);
          const double sxy = ixy.rect(y0, x0, y1, x1);
          const double syy = iyy.rect(y0, x0, y1, x1);
          const double count =
              (std::min(y1, h - 1) - std::max(y0, 0) + 1) *
              static_cast<double>(std::min(x1, w - 1) - std::max(x0, 0) + 1);
          const double tr = sxx + syy;
          const double disc =
              std::sqrt((sxx - syy) * (sxx - syy) + 4.0 * sxy * sxy);
          const double min_eig = 0.5 * (tr - disc) / count;
          if (min_eig < p.eig_floor) continue;
          const double det = sxx * syy - sxy * sxy;
          if (det <= 0.0) continue;
          const double sxt = ixt.rect(y0, x0, y1, x1);
          const double syt = iyt.rect(y0, x0, y1, x1);
          const double du = -(syy * sxt - sxy * syt) / det;
          const double dv = -(sxx * syt - sxy * sxt) / det;
          flow.u_at(y, x) += static_cast<float>(du);
          flow.v_at(y, x) += static_cast<float>(dv);
        }
      }
    }

    // Median pass between levels stops local outliers (occlusions, frame
    // borders) from being upsampled into a wide neighborhood.
    flow = median_filter_flow(flow, MedianKernel{3});
  }
  return flow;
}

FlowField median_filter_flow(const FlowField& f, const MedianKernel& k) {
  if (k.size < 3 || k.size % 2 == 0)
    throw std::invalid_argument("median_filter_flow: kernel size must be odd and >= 3");
  if (f.empty()) throw std::invalid_argument("median_filter_flow: empty flow");

  const int h = f.height, w = f.width, radius = k.size / 2;
  FlowField out(h, w);
  std::vector<float> win;
  win.reserve(static_cast<std::size_t>(k.size) * k.size);
  const auto median_of = [&](const std::vector<float>& plane, int y, int x) {
    win.clear();
    for (int dy = -radius; dy <= radius; ++dy) {
      const int yy = std::clamp(y + dy, 0, h - 1);
      for (int dx = -radius; dx <= radius; ++dx) {
        const int xx2 = std::clamp(x + dx, 0, w - 1);
        win.push_back(plane[static_cast<std::size_t>(yy) * w + xx2]);
      }
    }
    std::nth_element(win.begin(), win.begin() + win.size() / 2, win.end());
    return win[win.size() / 2];
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.u_at(y, x) = median_of(f.u, y, x);
      out.v_at(y, x) = median_of(f.v, y, x);
    }
  }
  return out;
}

FlowField quantize_flow(const FlowField& f, float bound) {
  if (!(bound > 0.0f))
    throw std::invalid_argument("quantize_flow: bound must be > 0");
  FlowField out(f.height, f.width);
  const auto quantize = [bound](float v) {
    const double t = 255.0 * (static_cast<double>(v) + bound) / (2.0 * bound);
    return static_cast<float>(std::clamp(static_cast<int>(std::floor(t + 0.5)), 0, 255));
  };
  for (std::size_t i = 0; i < f.u.size(); ++i) {
    out.u[i] = quantize(f.u[i]);
    out.v[i] = quantize(f.v[i]);
  }
  return out;
}

FlowField warped_flow(const Image& a, const Image& b, const Homography& H,
                      const FlowParams& p) {
  return estimate_flow(a, warp_frame(b, H.inverse()), p);
}

}  // namespace tdd
