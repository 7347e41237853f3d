#ifndef TDD_IMAGE_HPP
#define TDD_IMAGE_HPP

#include <cstddef>
#include <vector>

namespace tdd {

/// Dense f32 image, row-major, channel-interleaved:
/// data[(y * width + x) * channels + c].
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  Image() = default;
  Image(int h, int w, int c, float fill = 0.0f)
      : height(h), width(w), channels(c),
        data(static_cast<std::size_t>(h) * w * c, fill) {}

  float& at(int y, int x, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  float at(int y, int x, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool empty() const { return height <= 0 || width <= 0 || channels <= 0; }
  std::size_t size() const { return data.size(); }
};

/// Ordered frame sequence; every frame shares height/width/channels.
struct Video {
  std::vector<Image> frames;

  int length() const { return static_cast<int>(frames.size()); }
  int height() const { return frames.empty() ? 0 : frames[0].height; }
  int width() const { return frames.empty() ? 0 : frames[0].width; }
  int channels() const { return frames.empty() ? 0 : frames[0].channels; }
};

/// Throws std::invalid_argument if frames are empty or dimensions disagree.
void validate_video(const Video& v);

/// Luma conversion 0.299 R + 0.587 G + 0.114 B for 3-channel input;
/// 1-channel input is copied through.
Image to_grayscale(const Image& img);

/// Bilinear sample with clamp-to-edge addressing, single channel c.
float sample_bilinear_clamp(const Image& img, double x, double y, int c = 0);

/// Bilinear sample that returns 0 for positions outside the image.
float sample_bilinear_zero(const Image& img, double x, double y, int c = 0);

}  // namespace tdd

#endif  // TDD_IMAGE_HPP
