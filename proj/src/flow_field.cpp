#include "tdd/flow_field.hpp"

#include <algorithm>
#include <stdexcept>

namespace tdd {

std::vector<FlowVolume> stack_flows(const std::vector<FlowField>& flows, int F) {
  if (F < 1) throw std::invalid_argument("stack_flows: F must be >= 1");
  if (flows.empty()) throw std::invalid_argument("stack_flows: empty flow list");
  const int h = flows[0].height;
  const int w = flows[0].width;
  for (const FlowField& f : flows) {
    if (f.height != h || f.width != w)
      throw std::invalid_argument("stack_flows: mismatched flow dimensions");
  }

  const int n = static_cast<int>(flows.size());
  std::vector<FlowVolume> volumes;
  volumes.reserve(flows.size());
  for (int t = 0; t < n; ++t) {
    FlowVolume vol(h, w, 2 * F);
    for (int i = 0; i < F; ++i) {
      const int src = std::max(0, t - F + 1 + i);
      const FlowField& f = flows[src];
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          vol.at(y, x, 2 * i) = f.u_at(y, x);
          vol.at(y, x, 2 * i + 1) = f.v_at(y, x);
        }
      }
    }
    volumes.push_back(std::move(vol));
  }
  return volumes;
}

}  // namespace tdd
