#ifndef TDD_CONVNET_HPP
#define TDD_CONVNET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tdd/feature_map.hpp"
#include "tdd/flow_field.hpp"
#include "tdd/image.hpp"

namespace tdd {

enum class LayerKind { kConv, kPool };

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::kConv;
  int kernel = 3;
  int stride = 1;
  int channels_out = 0;  // ignored for pool layers (channel count passes through)
  bool lrn = false;      // cross-channel response normalization after activation
};

struct LrnParams {
  int n = 5;
  double alpha = 5e-4;
  double beta = 0.75;
};

struct NetSpec {
  std::vector<LayerSpec> layers;
  Stream stream = Stream::kSpatial;
  int input_channels = 3;
  std::vector<std::string> tap_layers;
  std::uint64_t seed = 42;
  LrnParams lrn;
};

/// Per-layer geometry. Map size ratio is always 1 / (product of strides up
/// to the layer), kept exact as the integer denominator. receptive_field is
/// the side of the square input region feeding one output cell:
///   rf_i = rf_{i-1} + (k_i - 1) * inv_ratio_{i-1},  rf_0 = 1, inv_ratio_0 = 1.
struct LayerGeometry {
  std::string name;
  std::uint32_t inv_ratio = 1;       // ratio = 1 / inv_ratio
  std::uint32_t receptive_field = 1; // pixels, square side
};

/// Geometry for every layer in order. Throws std::invalid_argument for an
/// empty net or invalid kernel/stride entries.
std::vector<LayerGeometry> compute_geometry(const NetSpec& net);

/// Geometry of a single named layer. Throws DataError if absent.
LayerGeometry layer_geometry(const NetSpec& net, const std::string& layer);

/// Reference architecture: conv1(7/2) pool1(3/2) conv2(5/2) pool2(3/2)
/// conv3(3/1) conv4(3/1) conv5(3/1) pool5(3/2). Channel counts are
/// 96/256/512 divided by channel_divisor (1 = full size, 16 = desk scale).
NetSpec make_reference_net(Stream stream, int input_channels,
                           int channel_divisor,
                           std::vector<std::string> tap_layers,
                           std::uint64_t seed = 42);

/// NetSpec JSON round-trip (used for config files and the .tdt sidecars).
std::string net_to_json(const NetSpec& net);
NetSpec net_from_json_text(const std::string& text);

/// Deterministic filter-bank feature extraction. Each conv layer applies
/// fixed filters drawn once from a PRNG seeded by (net seed, layer index,
/// stream) -- standard normal scaled by 1/sqrt(fan-in) -- followed by
/// max(0, .); pool layers are max-pools. Every layer zero-pads its input
/// by floor(k/2), so spatial extent shrinks only by the stride product.
/// One FeatureMapStack per tap layer, in tap_layers order; temporal length
/// equals the number of input frames/volumes. scale is a label stored on
/// the output stacks (inputs arrive already resized).
/// Throws std::invalid_argument on channel mismatch or empty input.
std::vector<FeatureMapStack> extract_feature_maps(const Video& input,
                                                  const NetSpec& net,
                                                  double scale);
std::vector<FeatureMapStack> extract_feature_maps(
    const std::vector<FlowVolume>& input, const NetSpec& net, double scale);

/// Map a video-coordinate trajectory point onto feature-map indices:
/// i = clamp(round(x * s / inv_ratio), 0, map_w - 1), j likewise with the
/// height; z passes through. round(x) = floor(x + 0.5).
struct MapCoord {
  int i = 0;  // column (x)
  int j = 0;  // row (y)
  int z = 0;
};
MapCoord map_coordinates(float x, float y, int z, std::uint32_t inv_ratio,
                         double s, int map_w, int map_h);

/// Plain correlation / pooling kernels behind the extractor, exposed for
/// oracle tests. Planar layout: planes[c * h * w + y * w + x].
/// conv2d_same: zero padding floor(k/2), no activation. weights layout
/// [c_out][c_in][ky][kx].
std::vector<float> conv2d_same(const std::vector<float>& in, int h, int w,
                               int c_in, const std::vector<float>& weights,
                               int c_out, int k, int stride, int* out_h,
                               int* out_w);
std::vector<float> maxpool2d_same(const std::vector<float>& in, int h, int w,
                                  int c, int k, int stride, int* out_h,
                                  int* out_w);

}  // namespace tdd

#endif  // TDD_CONVNET_HPP
