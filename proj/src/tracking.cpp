#include "tdd/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

#include "tdd/errors.hpp"
#include "tdd/mathutil.hpp"

namespace tdd {

namespace {

inline int grid_cells(int extent, int step) { return (extent + step - 1) / step; }

void validate_config(const TrackerConfig& cfg) {
  if (cfg.step < 1) throw std::invalid_argument("tracker: step must be >= 1");
  if (cfg.traj_len < 2) throw std::invalid_argument("tracker: traj_len must be >= 2");
  if (!(cfg.static_thresh > 0.0f) || !(cfg.jump_abs > 0.0f) || !(cfg.jump_frac > 0.0f))
    throw std::invalid_argument("tracker: thresholds must be > 0");
}

}  // namespace

std::vector<Point2f> sample_points(const Image& frame,
                                   const std::vector<bool>& occupied,
                                   const TrackerConfig& cfg) {
  validate_config(cfg);
  const Image gray = to_grayscale(frame);
  const std::vector<float> response = min_eig_response(gray);
  const float max_response = *std::max_element(response.begin(), response.end());
  if (max_response <= 0.0f) return {};

  const int w = gray.width, h = gray.height, step = cfg.step;
  const int cells_x = grid_cells(w, step);
  const float threshold = cfg.quality * max_response;

  std::vector<Point2f> points;
  for (int cy = 0; cy * step < h; ++cy) {
    const int y = std::min(cy * step + step / 2, h - 1);
    for (int cx = 0; cx * step < w; ++cx) {
      const int x = std::min(cx * step + step / 2, w - 1);
      if (!occupied.empty() && occupied[static_cast<std::size_t>(cy) * cells_x + cx])
        continue;
      if (response[static_cast<std::size_t>(y) * w + x] >= threshold)
        points.push_back(Point2f{static_cast<float>(x), static_cast<float>(y)});
    }
  }
  return points;
}

std::vector<std::optional<Point2f>> track_step(
    const std::vector<Point2f>& pts, const FlowField& flow_med) {
  std::vector<std::optional<Point2f>> out;
  out.reserve(pts.size());
  for (const Point2f& p : pts) {
    const int xr = clamp_int(round_half_up(p.x), 0, flow_med.width - 1);
    const int yr = clamp_int(round_half_up(p.y), 0, flow_med.height - 1);
    const float nx = p.x + flow_med.u_at(yr, xr);
    const float ny = p.y + flow_med.v_at(yr, xr);
    if (nx < 0.0f || ny < 0.0f || nx > flow_med.width - 1.0f ||
        ny > flow_med.height - 1.0f) {
      out.push_back(std::nullopt);
    } else {
      out.push_back(Point2f{nx, ny});
    }
  }
  return out;
}

PruneResult prune(const Trajectory& traj, const TrackerConfig& cfg,
                  std::span<const Point2f> camera_steps) {
  const int steps = static_cast<int>(traj.points.size()) - 1;
  if (steps < 1) throw std::invalid_argument("prune: trajectory too short");
  if (!camera_steps.empty() && static_cast<int>(camera_steps.size()) != steps)
    throw std::invalid_argument("prune: camera_steps size mismatch");

  double total_len = 0.0;
  double mean_res = 0.0, mean_sq_res = 0.0;
  bool jump = false;
  for (int i = 0; i < steps; ++i) {
    const float dx = traj.points[i + 1].x - traj.points[i].x;
    const float dy = traj.points[i + 1].y - traj.points[i].y;
    const double mag = std::hypot(dx, dy);
    total_len += mag;
    if (mag > cfg.jump_abs) jump = true;

    double rx = dx, ry = dy;
    if (!camera_steps.empty()) {
      rx -= camera_steps[i].x;
      ry -= camera_steps[i].y;
    }
    const double rmag = std::hypot(rx, ry);
    mean_res += rmag;
    mean_sq_res += rmag * rmag;
  }

  mean_res /= steps;
  mean_sq_res /= steps;
  const double stddev = std::sqrt(std::max(0.0, mean_sq_res - mean_res * mean_res));
  if (stddev < cfg.static_thresh && mean_res < cfg.static_thresh)
    return PruneResult::kStatic;

  if (jump) return PruneResult::kJump;
  for (int i = 0; i < steps; ++i) {
    const float dx = traj.points[i + 1].x - traj.points[i].x;
    const float dy = traj.points[i + 1].y - traj.points[i].y;
    if (std::hypot(dx, dy) > cfg.jump_frac * total_len) return PruneResult::kJump;
  }
  return PruneResult::kKeep;
}

TrajectorySet extract_trajectories(const Video& video,
                                   std::span<const FlowField> flows,
                                   const TrackerConfig& cfg,
                                   std::span<const Homography> camera,
                                   const MedianKernel& kernel) {
  validate_config(cfg);
  validate_video(video);
  const int L = video.length();
  if (static_cast<int>(flows.size()) != L - 1)
    throw std::invalid_argument("extract_trajectories: need L-1 flow fields");
  if (cfg.use_camera_comp && static_cast<int>(camera.size()) != L - 1)
    throw std::invalid_argument(
        "extract_trajectories: camera compensation requires one homography per flow");

  const int h = video.height(), w = video.width();
  for (const FlowField& f : flows)
    if (f.height != h || f.width != w)
      throw std::invalid_argument("extract_trajectories: flow/frame dimension mismatch");

  const int step = cfg.step;
  const int cells_x = grid_cells(w, step);
  const int cells_y = grid_cells(h, step);
  const int P = cfg.traj_len;

  struct Track {
    std::vector<TrajPoint> points;
    std::uint64_t birth_order = 0;
  };

  std::vector<Track> active;
  std::vector<Trajectory> done;
  std::uint64_t births = 0;
  std::vector<bool> occupied(static_cast<std::size_t>(cells_x) * cells_y, false);

  const auto cell_of = [&](const Point2f& p) {
    const int cx = clamp_int(static_cast<int>(p.x) / step, 0, cells_x - 1);
    const int cy = clamp_int(static_cast<int>(p.y) / step, 0, cells_y - 1);
    return static_cast<std::size_t>(cy) * cells_x + cx;
  };

  const auto sample_into = [&](int t) {
    // Tracks born after frame L - P can never reach P points; skip them.
    if (t > L - P) return;
    std::fill(occupied.begin(), occupied.end(), false);
    for (const Track& tr : active) occupied[cell_of({tr.points.back().x, tr.points.back().y})] = true;
    for (const Point2f& p : sample_points(video.frames[t], occupied, cfg)) {
      Track tr;
      tr.points.push_back(TrajPoint{p.x, p.y, t});
      tr.birth_order = births++;
      active.push_back(std::move(tr));
    }
  };

  const auto finish_track = [&](Track& tr) {
    Trajectory traj{std::move(tr.points)};
    std::vector<Point2f> cam_steps;
    if (cfg.use_camera_comp) {
      cam_steps.reserve(traj.points.size() - 1);
      for (std::size_t i = 0; i + 1 < traj.points.size(); ++i) {
        const TrajPoint& p = traj.points[i];
        const Point2f moved = camera[p.z].apply(Point2f{p.x, p.y});
        cam_steps.push_back(Point2f{moved.x - p.x, moved.y - p.y});
      }
    }
    if (prune(traj, cfg, cam_steps) == PruneResult::kKeep)
      done.push_back(std::move(traj));
  };

  sample_into(0);

  for (int t = 1; t < L; ++t) {
    const FlowField flow_med = median_filter_flow(flows[t - 1], kernel);

    std::vector<Point2f> heads;
    heads.reserve(active.size());
    for (const Track& tr : active)
      heads.push_back(Point2f{tr.points.back().x, tr.points.back().y});
    const std::vector<std::optional<Point2f>> moved = track_step(heads, flow_med);

    std::vector<Track> survivors;
    survivors.reserve(active.size());
    for (std::size_t i = 0; i < active.size(); ++i) {
      if (!moved[i]) continue;  // left the frame
      active[i].points.push_back(TrajPoint{moved[i]->x, moved[i]->y, t});
      survivors.push_back(std::move(active[i]));
    }

    // One live track per grid cell: on collision the older track wins,
    // ties broken by birth order.
    std::map<std::size_t, std::size_t> cell_owner;
    std::vector<bool> keep(survivors.size(), true);
    for (std::size_t i = 0; i < survivors.size(); ++i) {
      const std::size_t cell = cell_of(
          {survivors[i].points.back().x, survivors[i].points.back().y});
      const auto [it, inserted] = cell_owner.emplace(cell, i);
      if (inserted) continue;
      const std::size_t other = it->second;
      const bool other_wins =
          survivors[other].points.size() > survivors[i].points.size() ||
          (survivors[other].points.size() == survivors[i].points.size() &&
           survivors[other].birth_order < survivors[i].birth_order);
      if (other_wins) {
        keep[i] = false;
      } else {
        keep[other] = false;
        it->second = i;
      }
    }

    active.clear();
    for (std::size_t i = 0; i < survivors.size(); ++i) {
      if (!keep[i]) continue;
      if (static_cast<int>(survivors[i].points.size()) == P)
        finish_track(survivors[i]);
      else
        active.push_back(std::move(survivors[i]));
    }

    sample_into(t);
  }

  TrajectorySet ts;
  ts.trajectories = std::move(done);
  ts.width = w;
  ts.height = h;
  ts.length = L;
  return ts;
}

namespace {

void put_u32(std::ofstream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff),
               static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t read_u32(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

constexpr char kTrajMagic[4] = {'T', 'D', 'J', '1'};

}  // namespace

void write_trajectories(const TrajectorySet& ts, const std::string& video_id,
                        int traj_len, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("write_trajectories: cannot open " + path);
  out.write(kTrajMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(video_id.size()));
  out.write(video_id.data(), static_cast<std::streamsize>(video_id.size()));
  put_u32(out, static_cast<std::uint32_t>(ts.width));
  put_u32(out, static_cast<std::uint32_t>(ts.height));
  put_u32(out, static_cast<std::uint32_t>(ts.length));
  put_u32(out, static_cast<std::uint32_t>(traj_len));
  put_u32(out, static_cast<std::uint32_t>(ts.trajectories.size()));
  for (const Trajectory& traj : ts.trajectories) {
    if (static_cast<int>(traj.points.size()) != traj_len)
      throw InternalError("write_trajectories: trajectory length mismatch");
    for (const TrajPoint& p : traj.points) {
      const float rec[3] = {p.x, p.y, static_cast<float>(p.z)};
      out.write(reinterpret_cast<const char*>(rec), sizeof(rec));
    }
  }
  if (!out) throw DataError("write_trajectories: write failed for " + path);
}

TrajectorySet read_trajectories(const std::string& path, std::string* video_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("read_trajectories: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kTrajMagic, 4) != 0)
    throw DataError("read_trajectories: bad magic in " + path);
  const std::uint32_t id_len = read_u32(in);
  if (id_len > 4096) throw DataError("read_trajectories: oversized id in " + path);
  std::string id(id_len, '\0');
  in.read(id.data(), id_len);
  TrajectorySet ts;
  ts.width = static_cast<int>(read_u32(in));
  ts.height = static_cast<int>(read_u32(in));
  ts.length = static_cast<int>(read_u32(in));
  const std::uint32_t P = read_u32(in);
  const std::uint32_t K = read_u32(in);
  if (!in) throw DataError("read_trajectories: truncated header in " + path);
  ts.trajectories.reserve(K);
  for (std::uint32_t k = 0; k < K; ++k) {
    Trajectory traj;
    traj.points.reserve(P);
    for (std::uint32_t p = 0; p < P; ++p) {
      float rec[3];
      in.read(reinterpret_cast<char*>(rec), sizeof(rec));
      traj.points.push_back(TrajPoint{rec[0], rec[1], static_cast<int>(rec[2])});
    }
    ts.trajectories.push_back(std::move(traj));
  }
  if (!in) throw DataError("read_trajectories: truncated payload in " + path);
  if (video_id) *video_id = id;
  return ts;
}

}  // namespace tdd
