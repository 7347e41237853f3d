#include "tdd/resize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tdd/mathutil.hpp"

namespace tdd {

Image resize_bilinear(const Image& img, double s) {
  if (img.empty()) throw std::invalid_argument("resize_bilinear: empty image");
  if (!(s > 0.0)) throw std::invalid_argument("resize_bilinear: scale must be > 0");

  const int out_h = std::max(1, round_half_up(img.height * s));
  const int out_w = std::max(1, round_half_up(img.width * s));
  if (out_h == img.height && out_w == img.width) return img;

  Image out(out_h, out_w, img.channels);
  const double sy = static_cast<double>(img.height) / out_h;
  const double sx = static_cast<double>(img.width) / out_w;
  for (int y = 0; y < out_h; ++y) {
    const double src_y = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < out_w; ++x) {
      const double src_x = (x + 0.5) * sx - 0.5;
      for (int c = 0; c < img.channels; ++c)
        out.at(y, x, c) = sample_bilinear_clamp(img, src_x, src_y, c);
    }
  }
  return out;
}

std::vector<Video> build_pyramid(const Video& video, const ScaleSet& scales) {
  if (scales.scales.empty())
    throw std::invalid_argument("build_pyramid: empty scale set");
  validate_video(video);
  std::vector<Video> pyramid;
  pyramid.reserve(scales.scales.size());
  for (double s : scales.scales) {
    Video level;
    level.frames.reserve(video.frames.size());
    for (const Image& f : video.frames) level.frames.push_back(resize_bilinear(f, s));
    pyramid.push_back(std::move(level));
  }
  return pyramid;
}

}  // namespace tdd
