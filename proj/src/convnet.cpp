#include "tdd/convnet.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "tdd/errors.hpp"
#include "tdd/mathutil.hpp"
#include "tdd/rng.hpp"

namespace tdd {

namespace {

using nlohmann::json;

void validate_net(const NetSpec& net) {
  if (net.layers.empty()) throw std::invalid_argument("net has no layers");
  if (net.input_channels < 1)
    throw std::invalid_argument("net input_channels must be >= 1");
  for (const LayerSpec& l : net.layers) {
    if (l.kernel < 1) throw std::invalid_argument("layer kernel must be >= 1");
    if (l.stride < 1) throw std::invalid_argument("layer stride must be >= 1");
    if (l.kind == LayerKind::kConv && l.channels_out < 1)
      throw std::invalid_argument("conv layer needs channels_out >= 1");
  }
  for (const std::string& tap : net.tap_layers) {
    const bool found = std::any_of(net.layers.begin(), net.layers.end(),
                                   [&](const LayerSpec& l) { return l.name == tap; });
    if (!found) throw std::invalid_argument("tap layer not in net: " + tap);
  }
}

}  // namespace

std::vector<LayerGeometry> compute_geometry(const NetSpec& net) {
  validate_net(net);
  std::vector<LayerGeometry> out;
  out.reserve(net.layers.size());
  std::uint32_t inv_ratio = 1;
  std::uint32_t rf = 1;
  for (const LayerSpec& l : net.layers) {
    rf += static_cast<std::uint32_t>(l.kernel - 1) * inv_ratio;
    inv_ratio *= static_cast<std::uint32_t>(l.stride);
    out.push_back(LayerGeometry{l.name, inv_ratio, rf});
  }
  return out;
}

LayerGeometry layer_geometry(const NetSpec& net, const std::string& layer) {
  for (const LayerGeometry& g : compute_geometry(net))
    if (g.name == layer) return g;
  throw DataError("layer not found in net: " + layer);
}

NetSpec make_reference_net(Stream stream, int input_channels,
                           int channel_divisor,
                           std::vector<std::string> tap_layers,
                           std::uint64_t seed) {
  if (channel_divisor < 1)
    throw std::invalid_argument("channel_divisor must be >= 1");
  const auto ch = [channel_divisor](int full) {
    return std::max(1, full / channel_divisor);
  };
  NetSpec net;
  net.stream = stream;
  net.input_channels = input_channels;
  net.tap_layers = std::move(tap_layers);
  net.seed = seed;
  net.layers = {
      {"conv1", LayerKind::kConv, 7, 2, ch(96), false},
      {"pool1", LayerKind::kPool, 3, 2, 0, false},
      {"conv2", LayerKind::kConv, 5, 2, ch(256), false},
      {"pool2", LayerKind::kPool, 3, 2, 0, false},
      {"conv3", LayerKind::kConv, 3, 1, ch(512), false},
      {"conv4", LayerKind::kConv, 3, 1, ch(512), false},
      {"conv5", LayerKind::kConv, 3, 1, ch(512), false},
      {"pool5", LayerKind::kPool, 3, 2, 0, false},
  };
  validate_net(net);
  return net;
}

std::string net_to_json(const NetSpec& net) {
  json j;
  j["stream"] = stream_name(net.stream);
  j["input_channels"] = net.input_channels;
  j["tap_layers"] = net.tap_layers;
  j["seed"] = net.seed;
  j["lrn"] = {{"n", net.lrn.n}, {"alpha", net.lrn.alpha}, {"beta", net.lrn.beta}};
  j["layers"] = json::array();
  for (const LayerSpec& l : net.layers) {
    j["layers"].push_back({{"name", l.name},
                           {"kind", l.kind == LayerKind::kConv ? "conv" : "pool"},
                           {"kernel", l.kernel},
                           {"stride", l.stride},
                           {"channels_out", l.channels_out},
                           {"lrn", l.lrn}});
  }
  return j.dump(2);
}

NetSpec net_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("net spec parse error: ") + e.what());
  }
  try {
    NetSpec net;
    const std::string stream = j.at("stream").get<std::string>();
    if (stream == "spatial")
      net.stream = Stream::kSpatial;
    else if (stream == "temporal")
      net.stream = Stream::kTemporal;
    else
      throw ConfigError("net spec: unknown stream " + stream);
    net.input_channels = j.at("input_channels").get<int>();
    net.tap_layers = j.at("tap_layers").get<std::vector<std::string>>();
    net.seed = j.value("seed", std::uint64_t{42});
    if (j.contains("lrn")) {
      net.lrn.n = j["lrn"].value("n", 5);
      net.lrn.alpha = j["lrn"].value("alpha", 5e-4);
      net.lrn.beta = j["lrn"].value("beta", 0.75);
    }
    for (const json& lj : j.at("layers")) {
      LayerSpec l;
      l.name = lj.at("name").get<std::string>();
      const std::string kind = lj.at("kind").get<std::string>();
      if (kind == "conv")
        l.kind = LayerKind::kConv;
      else if (kind == "pool")
        l.kind = LayerKind::kPool;
      else
        throw ConfigError("net spec: unknown layer kind " + kind);
      l.kernel = lj.at("kernel").get<int>();
      l.stride = lj.at("stride").get<int>();
      l.channels_out = lj.value("channels_out", 0);
      l.lrn = lj.value("lrn", false);
      net.layers.push_back(std::move(l));
    }
    validate_net(net);
    return net;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("net spec field error: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("net spec invalid: ") + e.what());
  }
}

std::vector<float> conv2d_same(const std::vector<float>& in, int h, int w,
                               int c_in, const std::vector<float>& weights,
                               int c_out, int k, int stride, int* out_h,
                               int* out_w) {
  const int pad = k / 2;
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (w + 2 * pad - k) / stride + 1;
  *out_h = oh;
  *out_w = ow;
  std::vector<float> out(static_cast<std::size_t>(c_out) * oh * ow, 0.0f);
  const std::size_t in_plane = static_cast<std::size_t>(h) * w;
  const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
  const std::size_t wstride_ci = static_cast<std::size_t>(k) * k;
  const std::size_t wstride_co = wstride_ci * c_in;

  for (int co = 0; co < c_out; ++co) {
    for (int oy = 0; oy < oh; ++oy) {
      const int iy0 = oy * stride - pad;
      for (int ox = 0; ox < ow; ++ox) {
        const int ix0 = ox * stride - pad;
        float acc = 0.0f;
        for (int ci = 0; ci < c_in; ++ci) {
          const float* plane = in.data() + ci * in_plane;
          const float* wk = weights.data() + co * wstride_co + ci * wstride_ci;
          const int ky_lo = std::max(0, -iy0);
          const int ky_hi = std::min(k, h - iy0);
          for (int ky = ky_lo; ky < ky_hi; ++ky) {
            const float* row = plane + static_cast<std::size_t>(iy0 + ky) * w;
            const float* wrow = wk + static_cast<std::size_t>(ky) * k;
            const int kx_lo = std::max(0, -ix0);
            const int kx_hi = std::min(k, w - ix0);
            for (int kx = kx_lo; kx < kx_hi; ++kx)
              acc += row[ix0 + kx] * wrow[kx];
          }
        }
        out[co * out_plane + static_cast<std::size_t>(oy) * ow + ox] = acc;
      }
    }
  }
  return out;
}

std::vector<float> maxpool2d_same(const std::vector<float>& in, int h, int w,
                                  int c, int k, int stride, int* out_h,
                                  int* out_w) {
  const int pad = k / 2;
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (w + 2 * pad - k) / stride + 1;
  *out_h = oh;
  *out_w = ow;
  std::vector<float> out(static_cast<std::size_t>(c) * oh * ow, 0.0f);
  const std::size_t in_plane = static_cast<std::size_t>(h) * w;
  const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;

  for (int ci = 0; ci < c; ++ci) {
    const float* plane = in.data() + ci * in_plane;
    for (int oy = 0; oy < oh; ++oy) {
      const int iy0 = oy * stride - pad;
      for (int ox = 0; ox < ow; ++ox) {
        const int ix0 = ox * stride - pad;
        // Zero padding participates in the max.
        float best = (iy0 < 0 || ix0 < 0 || iy0 + k > h || ix0 + k > w)
                         ? 0.0f
                         : -std::numeric_limits<float>::max();
        const int ky_lo = std::max(0, -iy0);
        const int ky_hi = std::min(k, h - iy0);
        const int kx_lo = std::max(0, -ix0);
        const int kx_hi = std::min(k, w - ix0);
        for (int ky = ky_lo; ky < ky_hi; ++ky) {
          const float* row = plane + static_cast<std::size_t>(iy0 + ky) * w;
          for (int kx = kx_lo; kx < kx_hi; ++kx)
            best = std::max(best, row[ix0 + kx]);
        }
        out[ci * out_plane + static_cast<std::size_t>(oy) * ow + ox] = best;
      }
    }
  }
  return out;
}

namespace {

struct FilterBank {
  std::vector<std::vector<float>> per_layer;  // empty entry for pool layers
};

FilterBank build_filters(const NetSpec& net) {
  FilterBank bank;
  bank.per_layer.resize(net.layers.size());
  int c_in = net.input_channels;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const LayerSpec& l = net.layers[li];
    if (l.kind == LayerKind::kPool) continue;
    const std::uint64_t layer_seed =
        net.seed ^ (0x9e3779b97f4a7c15ull * (li + 1)) ^
        (net.stream == Stream::kTemporal ? 0xd6e8feb86659fd93ull : 0ull);
    Rng rng(layer_seed);
    const std::size_t count =
        static_cast<std::size_t>(l.channels_out) * c_in * l.kernel * l.kernel;
    const double scale = 1.0 / std::sqrt(static_cast<double>(c_in) * l.kernel * l.kernel);
    std::vector<float>& weights = bank.per_layer[li];
    weights.resize(count);
    for (std::size_t i = 0; i < count; ++i)
      weights[i] = static_cast<float>(rng.normal() * scale);
    c_in = l.channels_out;
  }
  return bank;
}

void apply_relu(std::vector<float>& v) {
  for (float& x : v) x = std::max(0.0f, x);
}

void apply_lrn(std::vector<float>& v, int h, int w, int c, const LrnParams& p) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const int half = p.n / 2;
  std::vector<float> out(v.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t px = static_cast<std::size_t>(y) * w + x;
      for (int ci = 0; ci < c; ++ci) {
        double sum = 0.0;
        const int lo = std::max(0, ci - half);
        const int hi = std::min(c - 1, ci + half);
        for (int j = lo; j <= hi; ++j) {
          const double a = v[j * plane + px];
          sum += a * a;
        }
        const double denom = std::pow(1.0 + (p.alpha / p.n) * sum, p.beta);
        out[ci * plane + px] = static_cast<float>(v[ci * plane + px] / denom);
      }
    }
  }
  v = std::move(out);
}

/// Runs one frame (planar channels) through the net, writing tap slices.
/// tapped[li] holds the tap-stack index for layer li, or -1.
void run_frame(std::vector<float> planes, int h, int w, int c,
               const NetSpec& net, const FilterBank& bank, int z,
               const std::vector<int>& tapped,
               std::vector<FeatureMapStack>& taps) {
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const LayerSpec& l = net.layers[li];
    int oh = 0, ow = 0;
    if (l.kind == LayerKind::kConv) {
      planes = conv2d_same(planes, h, w, c, bank.per_layer[li], l.channels_out,
                           l.kernel, l.stride, &oh, &ow);
      c = l.channels_out;
      apply_relu(planes);
    } else {
      planes = maxpool2d_same(planes, h, w, c, l.kernel, l.stride, &oh, &ow);
    }
    h = oh;
    w = ow;
    if (l.lrn) apply_lrn(planes, h, w, c, net.lrn);

    if (tapped[li] >= 0) {
      FeatureMapStack& stack = taps[tapped[li]];
      const std::size_t plane = static_cast<std::size_t>(h) * w;
      for (int n = 0; n < c; ++n)
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x)
            stack.at(x, y, z, n) = planes[n * plane + static_cast<std::size_t>(y) * w + x];
    }
  }
}

struct LayerDims {
  int h = 0, w = 0, c = 0;
};

std::vector<LayerDims> layer_dims(const NetSpec& net, int in_h, int in_w) {
  std::vector<LayerDims> dims;
  int h = in_h, w = in_w, c = net.input_channels;
  for (const LayerSpec& l : net.layers) {
    const int pad = l.kernel / 2;
    h = (h + 2 * pad - l.kernel) / l.stride + 1;
    w = (w + 2 * pad - l.kernel) / l.stride + 1;
    if (l.kind == LayerKind::kConv) c = l.channels_out;
    dims.push_back(LayerDims{h, w, c});
  }
  return dims;
}

std::vector<FeatureMapStack> extract_impl(
    int n_frames, int in_h, int in_w, int in_c, const NetSpec& net,
    double scale,
    const std::function<std::vector<float>(int)>& planar_frame) {
  validate_net(net);
  if (n_frames < 1) throw std::invalid_argument("extract_feature_maps: empty input");
  if (in_c != net.input_channels)
    throw std::invalid_argument("extract_feature_maps: channel mismatch");

  const FilterBank bank = build_filters(net);
  const std::vector<LayerDims> dims = layer_dims(net, in_h, in_w);

  // Tap stacks ordered by tap_layers; tapped[] maps layer index -> stack.
  std::vector<FeatureMapStack> taps;
  std::vector<int> tapped(net.layers.size(), -1);
  for (const std::string& t : net.tap_layers) {
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
      if (net.layers[li].name != t) continue;
      FeatureMapStack stack(dims[li].h, dims[li].w, n_frames, dims[li].c);
      stack.layer_id = net.layers[li].name;
      stack.stream = net.stream;
      stack.scale = static_cast<float>(scale);
      tapped[li] = static_cast<int>(taps.size());
      taps.push_back(std::move(stack));
      break;
    }
  }

  for (int z = 0; z < n_frames; ++z)
    run_frame(planar_frame(z), in_h, in_w, in_c, net, bank, z, tapped, taps);
  return taps;
}

std::vector<float> image_to_planar(const Image& img) {
  const std::size_t plane = static_cast<std::size_t>(img.height) * img.width;
  std::vector<float> planes(plane * img.channels);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        planes[c * plane + static_cast<std::size_t>(y) * img.width + x] = img.at(y, x, c);
  return planes;
}

std::vector<float> volume_to_planar(const FlowVolume& vol) {
  const std::size_t plane = static_cast<std::size_t>(vol.height) * vol.width;
  std::vector<float> planes(plane * vol.depth);
  for (int c = 0; c < vol.depth; ++c)
    for (int y = 0; y < vol.height; ++y)
      for (int x = 0; x < vol.width; ++x)
        planes[c * plane + static_cast<std::size_t>(y) * vol.width + x] = vol.at(y, x, c);
  return planes;
}

}  // namespace

std::vector<FeatureMapStack> extract_feature_maps(const Video& input,
                                                  const NetSpec& net,
                                                  double scale) {
  validate_video(input);
  return extract_impl(input.length(), input.height(), input.width(),
                      input.channels(), net, scale,
                      [&](int z) { return image_to_planar(input.frames[z]); });
}

std::vector<FeatureMapStack> extract_feature_maps(
    const std::vector<FlowVolume>& input, const NetSpec& net, double scale) {
  if (input.empty()) throw std::invalid_argument("extract_feature_maps: empty input");
  for (const FlowVolume& v : input)
    if (v.height != input[0].height || v.width != input[0].width ||
        v.depth != input[0].depth)
      throw std::invalid_argument("extract_feature_maps: mismatched volumes");
  return extract_impl(static_cast<int>(input.size()), input[0].height,
                      input[0].width, input[0].depth, net, scale,
                      [&](int z) { return volume_to_planar(input[z]); });
}

MapCoord map_coordinates(float x, float y, int z, std::uint32_t inv_ratio,
                         double s, int map_w, int map_h) {
  if (inv_ratio == 0 || !(s > 0.0))
    throw std::invalid_argument("map_coordinates: invalid ratio or scale");
  const double r = 1.0 / static_cast<double>(inv_ratio);
  MapCoord c;
  c.i = clamp_int(round_half_up(r * s * x), 0, map_w - 1);
  c.j = clamp_int(round_half_up(r * s * y), 0, map_h - 1);
  c.z = z;
  return c;
}

}  // namespace tdd
