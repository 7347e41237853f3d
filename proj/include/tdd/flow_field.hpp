#ifndef TDD_FLOW_FIELD_HPP
#define TDD_FLOW_FIELD_HPP

#include <cstddef>
#include <vector>

namespace tdd {

/// Dense per-pixel motion in pixels/frame; u and v are separate planes,
/// row-major: u[y * width + x].
struct FlowField {
  int height = 0;
  int width = 0;
  std::vector<float> u;
  std::vector<float> v;

  FlowField() = default;
  FlowField(int h, int w)
      : height(h), width(w),
        u(static_cast<std::size_t>(h) * w, 0.0f),
        v(static_cast<std::size_t>(h) * w, 0.0f) {}

  float& u_at(int y, int x) { return u[static_cast<std::size_t>(y) * width + x]; }
  float u_at(int y, int x) const { return u[static_cast<std::size_t>(y) * width + x]; }
  float& v_at(int y, int x) { return v[static_cast<std::size_t>(y) * width + x]; }
  float v_at(int y, int x) const { return v[static_cast<std::size_t>(y) * width + x]; }

  bool empty() const { return height <= 0 || width <= 0; }
};

/// Stack of F flow fields as a 2F-channel pixel-interleaved volume
/// (u0, v0, u1, v1, ...): data[(y * width + x) * depth + ch].
struct FlowVolume {
  int height = 0;
  int width = 0;
  int depth = 0;  // 2F, always even
  std::vector<float> data;

  FlowVolume() = default;
  FlowVolume(int h, int w, int d)
      : height(h), width(w), depth(d),
        data(static_cast<std::size_t>(h) * w * d, 0.0f) {}

  float& at(int y, int x, int ch) {
    return data[(static_cast<std::size_t>(y) * width + x) * depth + ch];
  }
  float at(int y, int x, int ch) const {
    return data[(static_cast<std::size_t>(y) * width + x) * depth + ch];
  }
};

/// One 2F-channel volume per input flow: volume t stacks flows
/// [t-F+1 ... t] oldest first, with indices below 0 clamped to flow 0.
/// Output length equals input length.
/// Throws std::invalid_argument for F < 1 or an empty flow list.
std::vector<FlowVolume> stack_flows(const std::vector<FlowField>& flows, int F);

}  // namespace tdd

#endif  // TDD_FLOW_FIELD_HPP
