#include "tdd/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <nlohmann/json.hpp>

#include "tdd/convnet.hpp"
#include "tdd/errors.hpp"

namespace tdd {

const char* norm_name(NormKind n) {
  return n == NormKind::kSpatiotemporal ? "spatiotemporal" : "channel";
}

const char* norm_short_name(NormKind n) {
  return n == NormKind::kSpatiotemporal ? "st" : "ch";
}

NormKind norm_from_name(const std::string& name) {
  if (name == "spatiotemporal" || name == "st") return NormKind::kSpatiotemporal;
  if (name == "channel" || name == "ch") return NormKind::kChannel;
  throw DataError("unknown normalization kind: " + name);
}

namespace {

void require_nonnegative(const FeatureMapStack& c, const char* op) {
  for (float v : c.data)
    if (v < 0.0f || !std::isfinite(v))
      throw std::invalid_argument(std::string(op) + ": input must be finite and nonnegative");
}

}  // namespace

NormalizedStack normalize_spatiotemporal(const FeatureMapStack& c) {
  require_nonnegative(c, "normalize_spatiotemporal");
  NormalizedStack out{c, NormKind::kSpatiotemporal};
  const int n_ch = c.channels;
  std::vector<float> maxv(n_ch, 0.0f);
  const std::size_t total = c.data.size();
  for (std::size_t base = 0; base < total; base += n_ch)
    for (int n = 0; n < n_ch; ++n)
      maxv[n] = std::max(maxv[n], c.data[base + n]);
  for (std::size_t base = 0; base < total; base += n_ch)
    for (int n = 0; n < n_ch; ++n)
      if (maxv[n] > 0.0f) out.stack.data[base + n] = c.data[base + n] / maxv[n];
  return out;
}

NormalizedStack normalize_channel(const FeatureMapStack& c) {
  require_nonnegative(c, "normalize_channel");
  NormalizedStack out{c, NormKind::kChannel};
  const int n_ch = c.channels;
  const std::size_t total = c.data.size();
  for (std::size_t base = 0; base < total; base += n_ch) {
    float maxv = 0.0f;
    for (int n = 0; n < n_ch; ++n) maxv = std::max(maxv, c.data[base + n]);
    if (maxv > 0.0f)
      for (int n = 0; n < n_ch; ++n) out.stack.data[base + n] = c.data[base + n] / maxv;
  }
  return out;
}

TddDescriptor pool_trajectory(const Trajectory& traj, int trajectory_id,
                              const NormalizedStack& c,
                              std::uint32_t inv_ratio, double s) {
  const FeatureMapStack& stack = c.stack;
  if (traj.points.empty())
    throw std::invalid_argument("pool_trajectory: empty trajectory");
  for (const TrajPoint& p : traj.points)
    if (p.z < 0 || p.z >= stack.length)
      throw std::invalid_argument("pool_trajectory: trajectory frame outside stack length");

  std::vector<double> acc(stack.channels, 0.0);
  for (const TrajPoint& p : traj.points) {
    const MapCoord mc =
        map_coordinates(p.x, p.y, p.z, inv_ratio, s, stack.width, stack.height);
    const std::size_t base = stack.index(mc.i, mc.j, mc.z, 0);
    for (int n = 0; n < stack.channels; ++n) acc[n] += stack.data[base + n];
  }

  TddDescriptor d;
  d.values.resize(stack.channels);
  for (int n = 0; n < stack.channels; ++n) d.values[n] = static_cast<float>(acc[n]);
  d.trajectory_id = trajectory_id;
  d.layer = stack.layer_id;
  d.stream = stack.stream;
  d.norm = c.norm;
  d.scale = stack.scale;
  return d;
}

namespace {

using GroupKey = std::tuple<std::string, int, int, float>;  // layer, stream, norm, scale

GroupKey key_of(const PoolableStack& ps) {
  return {ps.norm_stack.stack.layer_id, static_cast<int>(ps.norm_stack.stack.stream),
          static_cast<int>(ps.norm_stack.norm), ps.norm_stack.stack.scale};
}

}  // namespace

std::vector<TddDescriptor> extract_tdds(const TrajectorySet& ts,
                                        const std::vector<PoolableStack>& stacks) {
  if (stacks.empty()) throw DataError("extract_tdds: no stacks supplied");

  // Completeness: every (layer, stream) x norm x scale combination present.
  std::set<std::pair<std::string, int>> layers;
  std::set<int> norms;
  std::set<float> scales;
  std::map<GroupKey, const PoolableStack*> by_key;
  for (const PoolableStack& ps : stacks) {
    layers.insert({ps.norm_stack.stack.layer_id,
                   static_cast<int>(ps.norm_stack.stack.stream)});
    norms.insert(static_cast<int>(ps.norm_stack.norm));
    scales.insert(ps.norm_stack.stack.scale);
    if (!by_key.emplace(key_of(ps), &ps).second)
      throw DataError("extract_tdds: duplicate stack for layer " +
                      ps.norm_stack.stack.layer_id);
  }
  for (const auto& [layer, stream] : layers) {
    for (int norm : norms) {
      for (float scale : scales) {
        if (!by_key.count({layer, stream, norm, scale})) {
          std::ostringstream msg;
          msg << "extract_tdds: missing stack for layer " << layer << " stream "
              << stream_name(static_cast<Stream>(stream)) << " norm "
              << norm_name(static_cast<NormKind>(norm)) << " scale " << scale;
          throw DataError(msg.str());
        }
      }
    }
  }

  // by_key iteration order is (layer, stream, norm, scale) ascending.
  std::vector<TddDescriptor> out;
  out.reserve(ts.trajectories.size() * by_key.size());
  for (int tid = 0; tid < ts.count(); ++tid) {
    for (const auto& [key, ps] : by_key) {
      out.push_back(pool_trajectory(ts.trajectories[tid], tid, ps->norm_stack,
                                    ps->inv_ratio,
                                    static_cast<double>(ps->norm_stack.stack.scale)));
    }
  }
  return out;
}

namespace {

constexpr char kDescMagic[4] = {'T', 'D', 'D', '1'};

}  // namespace

void write_descriptors(const std::vector<TddDescriptor>& descriptors,
                       const std::string& video_id, const std::string& path) {
  // Group records by (layer, stream, norm, scale), trajectory-ascending
  // inside each group.
  std::map<GroupKey, std::vector<const TddDescriptor*>> grouped;
  std::set<int> traj_ids;
  for (const TddDescriptor& d : descriptors) {
    grouped[{d.layer, static_cast<int>(d.stream), static_cast<int>(d.norm), d.scale}]
        .push_back(&d);
    traj_ids.insert(d.trajectory_id);
  }

  nlohmann::json meta;
  meta["video"] = video_id;
  meta["trajectory_ids"] = std::vector<int>(traj_ids.begin(), traj_ids.end());
  meta["groups"] = nlohmann::json::array();

  std::vector<float> payload;
  for (auto& [key, records] : grouped) {
    std::sort(records.begin(), records.end(),
              [](const TddDescriptor* a, const TddDescriptor* b) {
                return a->trajectory_id < b->trajectory_id;
              });
    const int dim = records.empty() ? 0 : static_cast<int>(records[0]->values.size());
    for (const TddDescriptor* d : records)
      if (static_cast<int>(d->values.size()) != dim)
        throw InternalError("write_descriptors: inconsistent dims in group");
    nlohmann::json g;
    g["layer"] = std::get<0>(key);
    g["stream"] = stream_name(static_cast<Stream>(std::get<1>(key)));
    g["norm"] = norm_name(static_cast<NormKind>(std::get<2>(key)));
    g["scale"] = std::get<3>(key);
    g["dim"] = dim;
    g["count"] = static_cast<int>(records.size());
    g["offset"] = payload.size();
    meta["groups"].push_back(g);
    for (const TddDescriptor* d : records)
      payload.insert(payload.end(), d->values.begin(), d->values.end());
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("write_descriptors: cannot open " + path);
  out.write(kDescMagic, 4);
  const std::uint64_t count = payload.size();
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (!out) throw DataError("write_descriptors: write failed for " + path);

  std::ofstream side(path + ".json", std::ios::trunc);
  if (!side) throw DataError("write_descriptors: cannot open " + path + ".json");
  side << meta.dump(2) << "\n";
}

DescriptorFile read_descriptors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("read_descriptors: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kDescMagic, 4) != 0)
    throw DataError("read_descriptors: bad magic in " + path);
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  DescriptorFile f;
  f.payload.resize(count);
  in.read(reinterpret_cast<char*>(f.payload.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (!in) throw DataError("read_descriptors: truncated payload in " + path);

  std::ifstream side(path + ".json");
  if (!side) throw DataError("read_descriptors: missing sidecar " + path + ".json");
  nlohmann::json meta;
  try {
    side >> meta;
    f.video_id = meta.at("video").get<std::string>();
    f.trajectory_ids = meta.at("trajectory_ids").get<std::vector<int>>();
    for (const nlohmann::json& g : meta.at("groups")) {
      DescriptorGroup dg;
      dg.layer = g.at("layer").get<std::string>();
      dg.stream = g.at("stream").get<std::string>() == "temporal"
                      ? Stream::kTemporal
                      : Stream::kSpatial;
      dg.norm = norm_from_name(g.at("norm").get<std::string>());
      dg.scale = g.at("scale").get<float>();
      dg.dim = g.at("dim").get<int>();
      dg.count = g.at("count").get<int>();
      dg.offset = g.at("offset").get<std::uint64_t>();
      if (dg.offset + static_cast<std::uint64_t>(dg.dim) * dg.count > f.payload.size())
        throw DataError("read_descriptors: group exceeds payload in " + path);
      f.groups.push_back(std::move(dg));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("read_descriptors: bad sidecar " + path + ".json: " + e.what());
  }
  return f;
}

}  // namespace tdd
