#ifndef TDD_OPTICAL_FLOW_HPP
#define TDD_OPTICAL_FLOW_HPP

#include "tdd/flow_field.hpp"
#include "tdd/homography.hpp"
#include "tdd/image.hpp"

namespace tdd {

/// Coarse-to-fine Lucas-Kanade parameters. window must be odd and >= 3,
/// pyramid_levels >= 1. eig_floor is the per-pixel floor on the smaller
/// eigenvalue of the window-averaged structure tensor below which the
/// local update is rejected.
struct FlowParams {
  int pyramid_levels = 3;
  int window = 15;
  int iterations = 3;
  float eig_floor = 1e-4f;
};

struct MedianKernel {
  int size = 3;  // odd, >= 3
};

/// Dense optical flow a -> b via iterative coarse-to-fine Lucas-Kanade on a
/// factor-2 image pyramid. Inputs must be same-sized grayscale images.
/// Deterministic for fixed params. Throws std::invalid_argument on
/// dimension mismatch, non-grayscale input, or invalid params.
FlowField estimate_flow(const Image& a, const Image& b, const FlowParams& p);

/// Per-component k x k median with clamp-to-edge borders.
/// Throws std::invalid_argument for an even or too-small kernel.
FlowField median_filter_flow(const FlowField& f, const MedianKernel& k);

/// Maps each component linearly from [-bound, +bound] to [0, 255], clamps
/// and rounds; outputs are integers stored as f32. Throws
/// std::invalid_argument for bound <= 0.
FlowField quantize_flow(const FlowField& f, float bound);

/// Flow after camera-motion rectification: estimate_flow(a,
/// warp_frame(b, H.inverse()), p). Throws std::invalid_argument for a
/// singular homography.
FlowField warped_flow(const Image& a, const Image& b, const Homography& H,
                      const FlowParams& p);

}  // namespace tdd

#endif  // TDD_OPTICAL_FLOW_HPP
