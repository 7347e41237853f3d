#ifndef TDD_HOMOGRAPHY_HPP
#define TDD_HOMOGRAPHY_HPP

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "tdd/flow_field.hpp"
#include "tdd/image.hpp"

namespace tdd {

struct Point2f {
  float x = 0.0f;
  float y = 0.0f;
};

/// 3x3 plane-projective transform, row-major, normalized so h[8] = 1.
struct Homography {
  std::array<float, 9> h{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Homography identity() { return Homography{}; }
  static Homography translation(float tx, float ty) {
    Homography m;
    m.h = {1, 0, tx, 0, 1, ty, 0, 0, 1};
    return m;
  }

  /// Maps (x, y, 1) and dehomogenizes. Math in double.
  Point2f apply(Point2f p) const;

  double determinant() const;

  /// Inverse, renormalized so h[8] = 1. Throws std::invalid_argument for a
  /// singular matrix.
  Homography inverse() const;
};

/// A point match between frame t (p) and frame t+1 (q).
struct Correspondence {
  Point2f p;
  Point2f q;
};

struct RansacParams {
  int iterations = 200;
  double inlier_threshold = 3.0;  // pixels, symmetric transfer distance
  int min_inliers = 10;
  std::uint64_t seed = 1;
};

/// Per-pixel smaller eigenvalue of the 3x3-summed gradient structure
/// tensor (the corner response shared by corner detection and dense
/// trajectory sampling). Row-major h x w plane.
/// Throws std::invalid_argument for an empty or non-grayscale image.
std::vector<float> min_eig_response(const Image& img);

/// Shi-Tomasi style corners: points whose smaller structure-tensor
/// eigenvalue is >= quality * (global max response), non-max suppressed so
/// no two returned points are closer than min_dist. Strongest first, at
/// most max_count. A constant image yields no corners.
/// Throws std::invalid_argument for an empty or non-grayscale image.
std::vector<Point2f> detect_corners(const Image& img, int max_count,
                                    float quality, float min_dist);

/// One correspondence per grid point p = (x, y), x and y multiples of
/// grid_step: q = p + flow(p). Matches whose q falls outside the frame are
/// dropped.
std::vector<Correspondence> flow_correspondences(const FlowField& flow,
                                                 int grid_step);

/// RANSAC homography fit: 4-point minimal samples scored by symmetric
/// transfer error (forward + backward squared distances <= threshold^2),
/// followed by a normalized-DLT least-squares refit on the winning inlier
/// set. Deterministic for a fixed seed and invariant to match ordering
/// (matches are canonically sorted internally; ties keep the earliest
/// hypothesis). Returns the refit homography and a per-match inlier mask
/// in the caller's order.
/// Throws std::invalid_argument with "insufficient matches" for fewer than
/// 4 matches and DataError when no hypothesis reaches min_inliers.
std::pair<Homography, std::vector<bool>> estimate_homography_ransac(
    const std::vector<Correspondence>& matches, const RansacParams& params);

/// Inverse warp: output(p) = bilinear sample of img at H^-1 * p, zero for
/// samples outside the frame. Throws std::invalid_argument for singular H.
Image warp_frame(const Image& img, const Homography& H);

}  // namespace tdd

#endif  // TDD_HOMOGRAPHY_HPP
