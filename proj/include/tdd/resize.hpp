#ifndef TDD_RESIZE_HPP
#define TDD_RESIZE_HPP

#include <vector>

#include "tdd/image.hpp"

namespace tdd {

/// Ordered list of spatial scale ratios; all entries must be > 0.
struct ScaleSet {
  std::vector<double> scales;
};

/// Bilinear resize. Output dims are round(dim * s) with round(x) =
/// floor(x + 0.5), at least 1. Sampling uses pixel-center alignment:
/// src = (dst + 0.5) * (in / out) - 0.5, clamped to the edge, so constant
/// images are preserved exactly and s = 1 is the identity.
/// Throws std::invalid_argument for s <= 0 or an empty image.
Image resize_bilinear(const Image& img, double s);

/// One resized video per scale, frame order preserved.
/// Throws std::invalid_argument for an empty scale set.
std::vector<Video> build_pyramid(const Video& video, const ScaleSet& scales);

}  // namespace tdd

#endif  // TDD_RESIZE_HPP
