#include "tdd/homography.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tdd/errors.hpp"
#include "tdd/rng.hpp"

namespace tdd {

Point2f Homography::apply(Point2f p) const {
  const double x = p.x, y = p.y;
  const double wz = h[6] * x + h[7] * y + h[8];
  return Point2f{static_cast<float>((h[0] * x + h[1] * y + h[2]) / wz),
                 static_cast<float>((h[3] * x + h[4] * y + h[5]) / wz)};
}

double Homography::determinant() const {
  const auto& m = h;
  return static_cast<double>(m[0]) * (static_cast<double>(m[4]) * m[8] - static_cast<double>(m[5]) * m[7]) -
         static_cast<double>(m[1]) * (static_cast<double>(m[3]) * m[8] - static_cast<double>(m[5]) * m[6]) +
         static_cast<double>(m[2]) * (static_cast<double>(m[3]) * m[7] - static_cast<double>(m[4]) * m[6]);
}

Homography Homography::inverse() const {
  const double det = determinant();
  if (!std::isfinite(det) || std::abs(det) < 1e-12)
    throw std::invalid_argument("homography is singular");
  const auto& m = h;
  std::array<double, 9> inv;
  inv[0] = (static_cast<double>(m[4]) * m[8] - static_cast<double>(m[5]) * m[7]) / det;
  inv[1] = (static_cast<double>(m[2]) * m[7] - static_cast<double>(m[1]) * m[8]) / det;
  inv[2] = (static_cast<double>(m[1]) * m[5] - static_cast<double>(m[2]) * m[4]) / det;
  inv[3] = (static_cast<double>(m[5]) * m[6] - static_cast<double>(m[3]) * m[8]) / det;
  inv[4] = (static_cast<double>(m[0]) * m[8] - static_cast<double>(m[2]) * m[6]) / det;
  inv[5] = (static_cast<double>(m[2]) * m[3] - static_cast<double>(m[0]) * m[5]) / det;
  inv[6] = (static_cast<double>(m[3]) * m[7] - static_cast<double>(m[4]) * m[6]) / det;
  inv[7] = (static_cast<double>(m[1]) * m[6] - static_cast<double>(m[0]) * m[7]) / det;
  inv[8] = (static_cast<double>(m[0]) * m[4] - static_cast<double>(m[1]) * m[3]) / det;
  if (std::abs(inv[8]) < 1e-15)
    throw std::invalid_argument("homography inverse cannot be normalized");
  Homography out;
  for (int i = 0; i < 9; ++i)
    out.h[i] = static_cast<float>(inv[i] / inv[8]);
  out.h[8] = 1.0f;
  return out;
}

std::vector<float> min_eig_response(const Image& img) {
  if (img.empty()) throw std::invalid_argument("min_eig_response: empty image");
  if (img.channels != 1)
    throw std::invalid_argument("min_eig_response: expects grayscale input");

  const int h = img.height, w = img.width;
  std::vector<float> gx(static_cast<std::size_t>(h) * w);
  std::vector<float> gy(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    const int ym = std::max(y - 1, 0), yp = std::min(y + 1, h - 1);
    for (int x = 0; x < w; ++x) {
      const int xm = std::max(x - 1, 0), xp = std::min(x + 1, w - 1);
      gx[static_cast<std::size_t>(y) * w + x] = 0.5f * (img.at(y, xp) - img.at(y, xm));
      gy[static_cast<std::size_t>(y) * w + x] = 0.5f * (img.at(yp, x) - img.at(ym, x));
    }
  }

  std::vector<float> response(static_cast<std::size_t>(h) * w, 0.0f);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double sxx = 0.0, sxy = 0.0, syy = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        const int yy = std::clamp(y + dy, 0, h - 1);
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = std::clamp(x + dx, 0, w - 1);
          const std::size_t i = static_cast<std::size_t>(yy) * w + xx;
          sxx += static_cast<double>(gx[i]) * gx[i];
          sxy += static_cast<double>(gx[i]) * gy[i];
          syy += static_cast<double>(gy[i]) * gy[i];
        }
      }
      const double disc = std::sqrt((sxx - syy) * (sxx - syy) + 4.0 * sxy * sxy);
      response[static_cast<std::size_t>(y) * w + x] =
          static_cast<float>(0.5 * (sxx + syy - disc));
    }
  }
  return response;
}

std::vector<Point2f> detect_corners(const Image& img, int max_count,
                                    float quality, float min_dist) {
  if (max_count <= 0) return {};
  const int h = img.height, w = img.width;
  const std::vector<float> response = min_eig_response(img);
  const float max_response =
      *std::max_element(response.begin(), response.end());
  if (max_response <= 0.0f) return {};

  const float threshold = quality * max_response;
  struct Candidate {
    float r;
    int y;
    int x;
  };
  std::vector<Candidate> candidates;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const float r = response[static_cast<std::size_t>(y) * w + x];
      if (r >= threshold && r > 0.0f) candidates.push_back({r, y, x});
    }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.r != b.r) return a.r > b.r;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });

  std::vector<Point2f> corners;
  const float min_dist2 = min_dist * min_dist;
  for (const Candidate& c : candidates) {
    if (static_cast<int>(corners.size()) >= max_count) break;
    bool keep = true;
    if (min_dist > 0.0f) {
      for (const Point2f& q : corners) {
        const float dx = q.x - c.x, dy = q.y - c.y;
        if (dx * dx + dy * dy < min_dist2) {
          keep = false;
          break;
        }
      }
    }
    if (keep)
      corners.push_back(Point2f{static_cast<float>(c.x), static_cast<float>(c.y)});
  }
  return corners;
}

std::vector<Correspondence> flow_correspondences(const FlowField& flow,
                                                 int grid_step) {
  if (grid_step < 1)
    throw std::invalid_argument("flow_correspondences: grid_step must be >= 1");
  std::vector<Correspondence> matches;
  for (int y = 0; y < flow.height; y += grid_step) {
    for (int x = 0; x < flow.width; x += grid_step) {
      const float qx = x + flow.u_at(y, x);
      const float qy = y + flow.v_at(y, x);
      if (qx < 0.0f || qy < 0.0f || qx > flow.width - 1.0f || qy > flow.height - 1.0f)
        continue;
      matches.push_back({Point2f{static_cast<float>(x), static_cast<float>(y)},
                         Point2f{qx, qy}});
    }
  }
  return matches;
}

namespace {

/// Least-squares DLT with Hartley normalization (centroid to origin, mean
/// distance sqrt(2)). Returns false when the system is degenerate.
bool fit_dlt(const std::vector<Correspondence>& matches,
             const std::vector<int>& idx, Homography& out) {
  const int n = static_cast<int>(idx.size());
  if (n < 4) return false;

  double cpx = 0, cpy = 0, cqx = 0, cqy = 0;
  for (int i : idx) {
    cpx += matches[i].p.x;
    cpy += matches[i].p.y;
    cqx += matches[i].q.x;
    cqy += matches[i].q.y;
  }
  cpx /= n; cpy /= n; cqx /= n; cqy /= n;

  double dp = 0, dq = 0;
  for (int i : idx) {
    dp += std::hypot(matches[i].p.x - cpx, matches[i].p.y - cpy);
    dq += std::hypot(matches[i].q.x - cqx, matches[i].q.y - cqy);
  }
  dp /= n; dq /= n;
  if (dp < 1e-9 || dq < 1e-9) return false;
  const double sp = std::sqrt(2.0) / dp;
  const double sq = std::sqrt(2.0) / dq;

  Eigen::MatrixXd A(2 * n, 9);
  for (int r = 0; r < n; ++r) {
    const Correspondence& m = matches[idx[r]];
    const double x = (m.p.x - cpx) * sp, y = (m.p.y - cpy) * sp;
    const double u = (m.q.x - cqx) * sq, v = (m.q.y - cqy) * sq;
    A.row(2 * r) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    A.row(2 * r + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  Eigen::VectorXd hv = svd.matrixV().col(8);

  Eigen::Matrix3d Hn;
  Hn << hv(0), hv(1), hv(2), hv(3), hv(4), hv(5), hv(6), hv(7), hv(8);

  // Denormalize: H = Tq^-1 * Hn * Tp.
  Eigen::Matrix3d Tp, Tq_inv;
  Tp << sp, 0, -sp * cpx, 0, sp, -sp * cpy, 0, 0, 1;
  Tq_inv << 1.0 / sq, 0, cqx, 0, 1.0 / sq, cqy, 0, 0, 1;
  Eigen::Matrix3d H = Tq_inv * Hn * Tp;

  if (!std::isfinite(H(2, 2)) || std::abs(H(2, 2)) < 1e-12) return false;
  H /= H(2, 2);
  if (std::abs(H.determinant()) < 1e-12) return false;

  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      out.h[r * 3 + c] = static_cast<float>(H(r, c));
  out.h[8] = 1.0f;
  return true;
}

/// Forward + backward squared transfer distances.
double symmetric_error2(const Homography& H, const Homography& Hinv,
                        const Correspondence& m) {
  const Point2f fwd = H.apply(m.p);
  const Point2f bwd = Hinv.apply(m.q);
  const double dfx = fwd.x - m.q.x, dfy = fwd.y - m.q.y;
  const double dbx = bwd.x - m.p.x, dby = bwd.y - m.p.y;
  return dfx * dfx + dfy * dfy + dbx * dbx + dby * dby;
}

}  // namespace

std::pair<Homography, std::vector<bool>> estimate_homography_ransac(
    const std::vector<Correspondence>& matches, const RansacParams& params) {
  const int n = static_cast<int>(matches.size());
  if (n < 4)
    throw std::invalid_argument("estimate_homography_ransac: insufficient matches");
  if (params.iterations < 1 || !(params.inlier_threshold > 0.0))
    throw std::invalid_argument("estimate_homography_ransac: invalid params");

  // Canonical ordering makes the result invariant to input permutation.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Correspondence& ma = matches[a];
    const Correspondence& mb = matches[b];
    if (ma.p.x != mb.p.x) return ma.p.x < mb.p.x;
    if (ma.p.y != mb.p.y) return ma.p.y < mb.p.y;
    if (ma.q.x != mb.q.x) return ma.q.x < mb.q.x;
    return ma.q.y < mb.q.y;
  });

  Rng rng(params.seed);
  const double thresh2 = params.inlier_threshold * params.inlier_threshold;

  int best_count = -1;
  std::vector<bool> best_mask_sorted(n, false);
  std::vector<bool> mask(n, false);
  std::vector<int> sample(4);

  for (int iter = 0; iter < params.iterations; ++iter) {
    // 4 distinct indices into the sorted order.
    for (int k = 0; k < 4; ++k) {
      bool fresh;
      do {
        sample[k] = order[rng.uniform_index(n)];
        fresh = true;
        for (int j = 0; j < k; ++j)
          if (sample[j] == sample[k]) fresh = false;
      } while (!fresh);
    }

    Homography H;
    if (!fit_dlt(matches, sample, H)) continue;
    Homography Hinv;
    try {
      Hinv = H.inverse();
    } catch (const std::invalid_argument&) {
      continue;
    }

    int count = 0;
    for (int i = 0; i < n; ++i) {
      const bool in = symmetric_error2(H, Hinv, matches[order[i]]) <= thresh2;
      mask[i] = in;
      if (in) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best_mask_sorted = mask;
    }
  }

  if (best_count < std::max(params.min_inliers, 4))
    throw DataError("estimate_homography_ransac: no model with enough inliers");

  std::vector<int> inlier_idx;
  inlier_idx.reserve(best_count);
  for (int i = 0; i < n; ++i)
    if (best_mask_sorted[i]) inlier_idx.push_back(order[i]);

  Homography refit;
  if (!fit_dlt(matches, inlier_idx, refit))
    throw DataError("estimate_homography_ransac: degenerate inlier set");

  // Trimmed second pass: a borderline outlier that slipped under the
  // threshold would otherwise bias the least-squares fit. Keep matches
  // whose residual under the refit model is within 10x the median
  // residual (never looser than the threshold itself), then refit.
  {
    Homography refit_inv;
    try {
      refit_inv = refit.inverse();
      std::vector<double> errs(inlier_idx.size());
      for (std::size_t i = 0; i < inlier_idx.size(); ++i)
        errs[i] = std::sqrt(symmetric_error2(refit, refit_inv, matches[inlier_idx[i]]));
      std::vector<double> sorted_errs = errs;
      std::nth_element(sorted_errs.begin(), sorted_errs.begin() + sorted_errs.size() / 2,
                       sorted_errs.end());
      const double med = sorted_errs[sorted_errs.size() / 2];
      const double gate = std::min(std::max(10.0 * med, 1e-6), params.inlier_threshold);
      std::vector<int> trimmed;
      trimmed.reserve(inlier_idx.size());
      for (std::size_t i = 0; i < inlier_idx.size(); ++i)
        if (errs[i] <= gate) trimmed.push_back(inlier_idx[i]);
      if (static_cast<int>(trimmed.size()) >= std::max(params.min_inliers, 4) &&
          trimmed.size() < inlier_idx.size()) {
        Homography retrimmed;
        if (fit_dlt(matches, trimmed, retrimmed)) {
          refit = retrimmed;
          inlier_idx = std::move(trimmed);
        }
      }
    } catch (const std::invalid_argument&) {
      // Refit model not invertible; keep the first fit.
    }
  }

  std::vector<bool> mask_out(n, false);
  for (int idx : inlier_idx) mask_out[idx] = true;
  return {refit, mask_out};
}

Image warp_frame(const Image& img, const Homography& H) {
  if (img.empty()) throw std::invalid_argument("warp_frame: empty image");
  const Homography Hinv = H.inverse();
  Image out(img.height, img.width, img.channels);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const Point2f src = Hinv.apply(Point2f{static_cast<float>(x), static_cast<float>(y)});
      for (int c = 0; c < img.channels; ++c)
        out.at(y, x, c) = sample_bilinear_zero(img, src.x, src.y, c);
    }
  }
  return out;
}

}  // namespace tdd
