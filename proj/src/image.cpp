#include "tdd/image.hpp"

#include <cmath>
#include <stdexcept>

namespace tdd {

void validate_video(const Video& v) {
  if (v.frames.empty())
    throw std::invalid_argument("video has no frames");
  const Image& f0 = v.frames[0];
  if (f0.empty())
    throw std::invalid_argument("video frame 0 is empty");
  for (const Image& f : v.frames) {
    if (f.height != f0.height || f.width != f0.width ||
        f.channels != f0.channels)
      throw std::invalid_argument("video frames have mismatched dimensions");
  }
}

Image to_grayscale(const Image& img) {
  if (img.empty()) throw std::invalid_argument("empty image");
  if (img.channels == 1) return img;
  if (img.channels != 3)
    throw std::invalid_argument("grayscale conversion expects 1 or 3 channels");
  Image out(img.height, img.width, 1);
  const float* src = img.data.data();
  float* dst = out.data.data();
  const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
  for (std::size_t i = 0; i < n; ++i) {
    dst[i] = 0.299f * src[3 * i] + 0.587f * src[3 * i + 1] +
             0.114f * src[3 * i + 2];
  }
  return out;
}

namespace {

inline int clampi(int v, int lo, int hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

}  // namespace

float sample_bilinear_clamp(const Image& img, double x, double y, int c) {
  if (x < 0.0) x = 0.0;
  if (y < 0.0) y = 0.0;
  if (x > img.width - 1.0) x = img.width - 1.0;
  if (y > img.height - 1.0) y = img.height - 1.0;
  const int x0 = clampi(static_cast<int>(std::floor(x)), 0, img.width - 1);
  const int y0 = clampi(static_cast<int>(std::floor(y)), 0, img.height - 1);
  const int x1 = clampi(x0 + 1, 0, img.width - 1);
  const int y1 = clampi(y0 + 1, 0, img.height - 1);
  const double fx = x - std::floor(x);
  const double fy = y - std::floor(y);
  const double v00 = img.at(y0, x0, c);
  const double v01 = img.at(y0, x1, c);
  const double v10 = img.at(y1, x0, c);
  const double v11 = img.at(y1, x1, c);
  const double top = v00 + fx * (v01 - v00);
  const double bot = v10 + fx * (v11 - v10);
  return static_cast<float>(top + fy * (bot - top));
}

float sample_bilinear_zero(const Image& img, double x, double y, int c) {
  if (x < 0.0 || y < 0.0 || x > img.width - 1.0 || y > img.height - 1.0)
    return 0.0f;
  return sample_bilinear_clamp(img, x, y, c);
}

}  // namespace tdd
