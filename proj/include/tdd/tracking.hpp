#ifndef TDD_TRACKING_HPP
#define TDD_TRACKING_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tdd/flow_field.hpp"
#include "tdd/homography.hpp"
#include "tdd/image.hpp"
#include "tdd/optical_flow.hpp"

namespace tdd {

struct TrajPoint {
  float x = 0.0f;
  float y = 0.0f;
  int z = 0;  // frame index, strictly increasing by 1 along a trajectory
};

/// A completed track of exactly cfg.traj_len points in original-scale
/// video coordinates.
struct Trajectory {
  std::vector<TrajPoint> points;
};

struct TrackerConfig {
  int step = 5;                 // sampling grid / occupancy cell size W
  float quality = 0.001f;       // fraction of the frame-max corner response
  int traj_len = 15;            // P, points per trajectory
  float static_thresh = 1.0f;   // px, mean and stddev of step magnitudes
  float jump_frac = 0.7f;       // fraction of total path length
  float jump_abs = 20.0f;       // px, single-step cap
  bool use_camera_comp = false;
};

struct TrajectorySet {
  std::vector<Trajectory> trajectories;
  int width = 0;
  int height = 0;
  int length = 0;

  int count() const { return static_cast<int>(trajectories.size()); }
};

enum class PruneResult { kKeep, kStatic, kJump };

/// Grid sampling: candidate points at the centers of step x step cells,
/// kept when the smaller structure-tensor eigenvalue is >= quality times
/// the frame maximum and the cell is not already occupied. occupied may be
/// empty (treated as all free) or sized ceil(h/step) * ceil(w/step),
/// row-major.
std::vector<Point2f> sample_points(const Image& frame,
                                   const std::vector<bool>& occupied,
                                   const TrackerConfig& cfg);

/// One tracking step: each point is displaced by the median-filtered flow
/// sampled at its rounded position. Points whose new position leaves the
/// frame come back as nullopt.
std::vector<std::optional<Point2f>> track_step(
    const std::vector<Point2f>& pts, const FlowField& flow_med);

/// Keep/drop decision for a completed trajectory. camera_steps, when
/// nonempty, holds the homography-predicted background displacement per
/// step; the static test then runs on the residual motion, so tracks that
/// only follow the camera are dropped. The jump test always uses raw
/// steps.
PruneResult prune(const Trajectory& traj, const TrackerConfig& cfg,
                  std::span<const Point2f> camera_steps = {});

/// Dense trajectory extraction over the full video, single spatial scale.
/// flows must hold length-1 fields (flows[t]: frame t -> t+1). camera must
/// hold one homography per flow when cfg.use_camera_comp is set, empty
/// otherwise. Every returned trajectory has exactly cfg.traj_len points
/// with consecutive frame indices. Deterministic: identical inputs produce
/// identical output bit-for-bit.
TrajectorySet extract_trajectories(const Video& video,
                                   std::span<const FlowField> flows,
                                   const TrackerConfig& cfg,
                                   std::span<const Homography> camera = {},
                                   const MedianKernel& kernel = MedianKernel{});

/// Binary trajectory file: magic "TDJ1"; u32 id length + id bytes; u32
/// width, height, length, P, K; K records of P x 3 f32 (x, y, z),
/// little-endian. Sidecar (same path + ".json") carries the config and
/// per-frame homographies and is written by the pipeline layer.
void write_trajectories(const TrajectorySet& ts, const std::string& video_id,
                        int traj_len, const std::string& path);
TrajectorySet read_trajectories(const std::string& path,
                                std::string* video_id = nullptr);

}  // namespace tdd

#endif  // TDD_TRACKING_HPP
