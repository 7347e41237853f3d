#ifndef TDD_DESCRIPTOR_HPP
#define TDD_DESCRIPTOR_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tdd/feature_map.hpp"
#include "tdd/tracking.hpp"

namespace tdd {

enum class NormKind : std::uint8_t { kSpatiotemporal = 0, kChannel = 1 };

const char* norm_name(NormKind n);         // "spatiotemporal" / "channel"
const char* norm_short_name(NormKind n);   // "st" / "ch"
NormKind norm_from_name(const std::string& name);

/// A feature-map stack rescaled into [0, 1] by one of the two
/// normalizations. Slices that were all zero stay zero.
struct NormalizedStack {
  FeatureMapStack stack;
  NormKind norm = NormKind::kSpatiotemporal;
};

/// Per-channel division by the channel's maximum over the whole video
/// extent. Throws std::invalid_argument if the input contains negatives.
NormalizedStack normalize_spatiotemporal(const FeatureMapStack& c);

/// Per-pixel division by the cross-channel maximum at that position.
/// Throws std::invalid_argument if the input contains negatives.
NormalizedStack normalize_channel(const FeatureMapStack& c);

/// Trajectory-pooled descriptor: the sum of normalized map values sampled
/// at the trajectory's mapped coordinates, one value per channel.
struct TddDescriptor {
  std::vector<float> values;
  int trajectory_id = 0;
  std::string layer;
  Stream stream = Stream::kSpatial;
  NormKind norm = NormKind::kSpatiotemporal;
  float scale = 1.0f;
};

/// Sum-pools the normalized stack along the trajectory:
///   values[n] = sum_p c(round(x_p * s / inv_ratio), round(y_p * s / inv_ratio), z_p, n)
/// with map coordinates clamped to the stack extent. Points are summed in
/// trajectory order into f64 accumulators and emitted as f32.
/// Throws std::invalid_argument if any trajectory frame index falls
/// outside [0, L).
TddDescriptor pool_trajectory(const Trajectory& traj, int trajectory_id,
                              const NormalizedStack& c,
                              std::uint32_t inv_ratio, double s);

/// A normalized stack paired with its layer's map-size ratio.
struct PoolableStack {
  NormalizedStack norm_stack;
  std::uint32_t inv_ratio = 1;
};

/// One descriptor per (trajectory x layer x norm x scale), ordered by
/// (trajectory id, layer, stream, norm, scale). The stacks must form a
/// complete grid: every (layer, stream) must appear with every norm kind
/// and every scale present in the set; a hole throws DataError naming the
/// missing combination.
std::vector<TddDescriptor> extract_tdds(const TrajectorySet& ts,
                                        const std::vector<PoolableStack>& stacks);

/// On-disk descriptor group: all descriptors sharing (layer, stream, norm,
/// scale); records are trajectory-ascending, dim floats each.
struct DescriptorGroup {
  std::string layer;
  Stream stream = Stream::kSpatial;
  NormKind norm = NormKind::kSpatiotemporal;
  float scale = 1.0f;
  int dim = 0;
  int count = 0;
  std::uint64_t offset = 0;  // float offset into the payload
};

struct DescriptorFile {
  std::string video_id;
  std::vector<int> trajectory_ids;
  std::vector<DescriptorGroup> groups;
  std::vector<float> payload;

  const float* record(const DescriptorGroup& g, int index) const {
    return payload.data() + g.offset + static_cast<std::uint64_t>(index) * g.dim;
  }
};

/// Descriptor container: binary payload ("TDD1" magic, u64 float count,
/// f32 payload grouped per DescriptorGroup) plus a JSON sidecar at
/// path + ".json" holding video id, trajectory ids and group keys.
void write_descriptors(const std::vector<TddDescriptor>& descriptors,
                       const std::string& video_id, const std::string& path);
DescriptorFile read_descriptors(const std::string& path);

}  // namespace tdd

#endif  // TDD_DESCRIPTOR_HPP
