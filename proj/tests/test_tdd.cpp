#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "tdd/convnet.hpp"
#include "tdd/descriptor.hpp"
#include "tdd/errors.hpp"
#include "tdd/rng.hpp"

using namespace tdd;

namespace {

// Random stack with dyadic values (k / 1024, k < 2^17) so that scaling by
// small integers stays exact in f32; the scale-invariance property is
// about exact scaling, not multiply rounding.
FeatureMapStack dyadic_stack(int h, int w, int l, int n, std::uint64_t seed) {
  FeatureMapStack s(h, w, l, n);
  Rng rng(seed);
  for (float& v : s.data)
    v = static_cast<float>(rng.uniform_index(1 << 17)) / 1024.0f;
  return s;
}

Trajectory random_traj(int P, int w, int h, int L, std::uint64_t seed) {
  Rng rng(seed);
  Trajectory t;
  const int z0 = static_cast<int>(rng.uniform_index(std::max(1, L - P + 1)));
  float x = static_cast<float>(rng.uniform(0, w - 1));
  float y = static_cast<float>(rng.uniform(0, h - 1));
  for (int p = 0; p < P; ++p) {
    t.points.push_back(TrajPoint{x, y, z0 + p});
    x = std::clamp(x + static_cast<float>(rng.uniform(-2, 2)), 0.0f, w - 1.0f);
    y = std::clamp(y + static_cast<float>(rng.uniform(-2, 2)), 0.0f, h - 1.0f);
  }
  return t;
}

}  // namespace

TEST_CASE("spatiotemporal normalization divides each channel by its video max") {
  FeatureMapStack s(2, 2, 2, 2);
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int z = 0; z < 2; ++z) {
        s.at(x, y, z, 0) = 0.5f;
        s.at(x, y, z, 1) = 0.0f;  // all-zero channel
      }
  s.at(1, 1, 1, 0) = 2.0f;
  const NormalizedStack ns = normalize_spatiotemporal(s);
  CHECK(ns.stack.at(0, 0, 0, 0) == 0.25f);
  CHECK(ns.stack.at(1, 1, 1, 0) == 1.0f);
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int z = 0; z < 2; ++z) CHECK(ns.stack.at(x, y, z, 1) == 0.0f);
}

TEST_CASE("spatiotemporal normalization matches the per-channel max oracle") {
  const FeatureMapStack s = dyadic_stack(6, 6, 4, 3, 21);
  const NormalizedStack ns = normalize_spatiotemporal(s);
  for (int n = 0; n < 3; ++n) {
    float maxv = 0.0f;  // brute-force per-channel max
    for (int x = 0; x < 6; ++x)
      for (int y = 0; y < 6; ++y)
        for (int z = 0; z < 4; ++z) maxv = std::max(maxv, s.at(x, y, z, n));
    float norm_max = 0.0f;
    for (int x = 0; x < 6; ++x)
      for (int y = 0; y < 6; ++y)
        for (int z = 0; z < 4; ++z) {
          CHECK(ns.stack.at(x, y, z, n) == s.at(x, y, z, n) / maxv);
          norm_max = std::max(norm_max, ns.stack.at(x, y, z, n));
        }
    CHECK(norm_max == 1.0f);
  }
}

TEST_CASE("channel normalization divides each pixel by its channel max") {
  FeatureMapStack s(1, 1, 1, 3);
  s.at(0, 0, 0, 0) = 2.0f;
  s.at(0, 0, 0, 1) = 4.0f;
  s.at(0, 0, 0, 2) = 8.0f;
  const NormalizedStack ns = normalize_channel(s);
  CHECK(ns.stack.at(0, 0, 0, 0) == 0.25f);
  CHECK(ns.stack.at(0, 0, 0, 1) == 0.5f);
  CHECK(ns.stack.at(0, 0, 0, 2) == 1.0f);
}

TEST_CASE("channel normalization of a single-channel stack is all ones where positive") {
  FeatureMapStack s = dyadic_stack(4, 4, 3, 1, 5);
  s.at(0, 0, 0, 0) = 0.0f;
  const NormalizedStack ns = normalize_channel(s);
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 4; ++y)
      for (int z = 0; z < 3; ++z) {
        if (s.at(x, y, z, 0) > 0.0f)
          CHECK(ns.stack.at(x, y, z, 0) == 1.0f);
        else
          CHECK(ns.stack.at(x, y, z, 0) == 0.0f);
      }
}

TEST_CASE("channel normalization matches the per-pixel max oracle") {
  const FeatureMapStack s = dyadic_stack(5, 4, 3, 4, 31);
  const NormalizedStack ns = normalize_channel(s);
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 5; ++y)
      for (int z = 0; z < 3; ++z) {
        float maxv = 0.0f;
        for (int n = 0; n < 4; ++n) maxv = std::max(maxv, s.at(x, y, z, n));
        float norm_max = 0.0f;
        for (int n = 0; n < 4; ++n) {
          CHECK(ns.stack.at(x, y, z, n) ==
                (maxv > 0 ? s.at(x, y, z, n) / maxv : 0.0f));
          norm_max = std::max(norm_max, ns.stack.at(x, y, z, n));
        }
        if (maxv > 0) CHECK(norm_max == 1.0f);
      }
}

TEST_CASE("normalization rejects negative inputs") {
  FeatureMapStack s(2, 2, 1, 1);
  s.at(0, 0, 0, 0) = -0.5f;
  CHECK_THROWS_AS(normalize_spatiotemporal(s), std::invalid_argument);
  CHECK_THROWS_AS(normalize_channel(s), std::invalid_argument);
}

TEST_CASE("pooling a constant normalized map gives P * v") {
  FeatureMapStack s(8, 8, 16, 3);
  std::fill(s.data.begin(), s.data.end(), 1.0f);
  NormalizedStack ns{s, NormKind::kSpatiotemporal};
  // Inject a constant 0.25 by hand (already normalized bookkeeping).
  std::fill(ns.stack.data.begin(), ns.stack.data.end(), 0.25f);
  const Trajectory t = random_traj(15, 64, 64, 16, 3);
  const TddDescriptor d = pool_trajectory(t, 0, ns, 8, 1.0);
  REQUIRE(d.values.size() == 3);
  for (float v : d.values) CHECK(v == 15.0f * 0.25f);
}

TEST_CASE("pooling matches the brute-force oracle bit-exactly") {
  Rng shapes(77);
  for (int trial = 0; trial < 50; ++trial) {
    const int h = 2 + static_cast<int>(shapes.uniform_index(15));
    const int w = 2 + static_cast<int>(shapes.uniform_index(15));
    const int l = 15 + static_cast<int>(shapes.uniform_index(2));
    const int n = 1 + static_cast<int>(shapes.uniform_index(8));
    FeatureMapStack s = dyadic_stack(h, w, l, n, 1000 + trial);
    const NormalizedStack ns = normalize_spatiotemporal(s);
    const std::uint32_t inv_ratio = 1u << shapes.uniform_index(4);
    const double scale = std::vector<double>{0.5, 1.0, 2.0}[shapes.uniform_index(3)];
    const Trajectory t = random_traj(15, w * inv_ratio, h * inv_ratio, l, 2000 + trial);

    const TddDescriptor d = pool_trajectory(t, trial, ns, inv_ratio, scale);

    // Oracle: channel-major loop, f64 accumulation in trajectory order.
    for (int ch = 0; ch < n; ++ch) {
      double acc = 0.0;
      for (const TrajPoint& p : t.points) {
        const double r = 1.0 / inv_ratio;
        int i = static_cast<int>(std::floor(r * scale * p.x + 0.5));
        int j = static_cast<int>(std::floor(r * scale * p.y + 0.5));
        i = std::clamp(i, 0, w - 1);
        j = std::clamp(j, 0, h - 1);
        acc += ns.stack.at(i, j, p.z, ch);
      }
      CHECK(d.values[ch] == static_cast<float>(acc));  // bit-exact
    }
  }
}

TEST_CASE("pooled components stay in [0, P]") {
  const FeatureMapStack s = dyadic_stack(8, 8, 16, 4, 9);
  const NormalizedStack ns = normalize_spatiotemporal(s);
  for (int trial = 0; trial < 10; ++trial) {
    const Trajectory t = random_traj(15, 64, 64, 16, 50 + trial);
    const TddDescriptor d = pool_trajectory(t, trial, ns, 8, 1.0);
    for (float v : d.values) {
      CHECK(v >= 0.0f);
      CHECK(v <= 15.0f);
    }
  }
}

TEST_CASE("pooling rejects out-of-range frames") {
  const FeatureMapStack s = dyadic_stack(4, 4, 16, 2, 13);
  const NormalizedStack ns = normalize_spatiotemporal(s);
  Trajectory t;
  for (int p = 0; p < 15; ++p) t.points.push_back(TrajPoint{1.0f, 1.0f, 6 + p});
  // Frames 6..20 exceed L=16.
  CHECK_THROWS_AS(pool_trajectory(t, 0, ns, 1, 1.0), std::invalid_argument);
}

TEST_CASE("extract_tdds produces the full cartesian set of descriptors") {
  TrajectorySet ts;
  ts.width = 32;
  ts.height = 32;
  ts.length = 16;
  ts.trajectories.push_back(random_traj(15, 32, 32, 16, 4));

  std::vector<PoolableStack> stacks;
  const std::vector<double> scales{0.5, 1.0 / std::sqrt(2.0), 1.0, std::sqrt(2.0), 2.0};
  for (const char* layer : {"conv4", "conv5"}) {
    for (double s : scales) {
      FeatureMapStack fm = dyadic_stack(4, 4, 16, 3, 100 + s * 10);
      fm.layer_id = layer;
      fm.scale = static_cast<float>(s);
      stacks.push_back({normalize_spatiotemporal(fm), 16});
      stacks.push_back({normalize_channel(fm), 16});
    }
  }
  const std::vector<TddDescriptor> ds = extract_tdds(ts, stacks);
  CHECK(ds.size() == 1 * 2 * 2 * 5);

  // Deterministic ordering: trajectory, then layer, then norm, then scale.
  for (std::size_t i = 1; i < ds.size(); ++i) {
    const auto key = [](const TddDescriptor& d) {
      return std::make_tuple(d.trajectory_id, d.layer, static_cast<int>(d.stream),
                             static_cast<int>(d.norm), d.scale);
    };
    CHECK(key(ds[i - 1]) < key(ds[i]));
  }
}

TEST_CASE("extract_tdds at scale 1 equals direct pooling") {
  TrajectorySet ts;
  ts.width = 32;
  ts.height = 32;
  ts.length = 16;
  ts.trajectories.push_back(random_traj(15, 32, 32, 16, 8));

  FeatureMapStack fm = dyadic_stack(8, 8, 16, 4, 60);
  fm.layer_id = "conv4";
  fm.scale = 1.0f;
  const NormalizedStack ns = normalize_spatiotemporal(fm);
  const std::vector<TddDescriptor> ds = extract_tdds(ts, {{ns, 4}});
  REQUIRE(ds.size() == 1);
  const TddDescriptor direct = pool_trajectory(ts.trajectories[0], 0, ns, 4, 1.0);
  CHECK(ds[0].values == direct.values);
}

TEST_CASE("descriptors at scale 2 pool doubled map coordinates") {
  TrajectorySet ts;
  ts.width = 32;
  ts.height = 32;
  ts.length = 16;
  Trajectory t;
  for (int p = 0; p < 15; ++p)
    t.points.push_back(TrajPoint{3.0f + p, 5.0f, p});
  ts.trajectories.push_back(t);

  FeatureMapStack fm = dyadic_stack(16, 16, 16, 2, 61);
  fm.layer_id = "conv4";
  fm.scale = 2.0f;
  const NormalizedStack ns = normalize_spatiotemporal(fm);
  const TddDescriptor d = pool_trajectory(ts.trajectories[0], 0, ns, 4, 2.0);

  for (int ch = 0; ch < 2; ++ch) {
    double acc = 0.0;
    for (const TrajPoint& p : t.points) {
      // Coordinate oracle: scale doubles the mapped position, then clamps.
      const int i = std::clamp(static_cast<int>(std::floor(2.0 * p.x / 4.0 + 0.5)), 0, 15);
      const int j = std::clamp(static_cast<int>(std::floor(2.0 * p.y / 4.0 + 0.5)), 0, 15);
      acc += ns.stack.at(i, j, p.z, ch);
    }
    CHECK(d.values[ch] == static_cast<float>(acc));
  }
}

TEST_CASE("extract_tdds reports a missing layer/scale combination") {
  TrajectorySet ts;
  ts.width = 16;
  ts.height = 16;
  ts.length = 16;
  ts.trajectories.push_back(random_traj(15, 16, 16, 16, 3));

  FeatureMapStack a = dyadic_stack(4, 4, 16, 2, 70);
  a.layer_id = "conv4";
  a.scale = 1.0f;
  FeatureMapStack b = dyadic_stack(4, 4, 16, 2, 71);
  b.layer_id = "conv5";
  b.scale = 2.0f;  // hole: conv4@2 and conv5@1 absent
  std::vector<PoolableStack> stacks{{normalize_spatiotemporal(a), 16},
                                    {normalize_spatiotemporal(b), 16}};
  CHECK_THROWS_WITH_AS(extract_tdds(ts, stacks), doctest::Contains("missing"),
                       DataError);
}

TEST_CASE("normalization and TDDs are invariant to exact positive scaling") {
  // Values are dyadic so multiplying by 0.5, 3 and 100 is exact in f32.
  const FeatureMapStack base = dyadic_stack(8, 8, 16, 4, 90);
  const NormalizedStack st0 = normalize_spatiotemporal(base);
  const NormalizedStack ch0 = normalize_channel(base);
  const Trajectory t = random_traj(15, 64, 64, 16, 91);
  const TddDescriptor d_st0 = pool_trajectory(t, 0, st0, 8, 1.0);
  const TddDescriptor d_ch0 = pool_trajectory(t, 0, ch0, 8, 1.0);

  for (float lambda : {0.5f, 3.0f, 100.0f}) {
    FeatureMapStack scaled = base;
    for (float& v : scaled.data) v *= lambda;
    const NormalizedStack st = normalize_spatiotemporal(scaled);
    const NormalizedStack ch = normalize_channel(scaled);
    CHECK(st.stack.data == st0.stack.data);  // bit-identical
    CHECK(ch.stack.data == ch0.stack.data);
    CHECK(pool_trajectory(t, 0, st, 8, 1.0).values == d_st0.values);
    CHECK(pool_trajectory(t, 0, ch, 8, 1.0).values == d_ch0.values);
  }
}

TEST_CASE("permuting trajectories permutes descriptors with values unchanged") {
  TrajectorySet ts;
  ts.width = 32;
  ts.height = 32;
  ts.length = 16;
  for (int k = 0; k < 4; ++k) ts.trajectories.push_back(random_traj(15, 32, 32, 16, 10 + k));

  FeatureMapStack fm = dyadic_stack(8, 8, 16, 3, 80);
  fm.layer_id = "conv4";
  fm.scale = 1.0f;
  const std::vector<PoolableStack> stacks{{normalize_spatiotemporal(fm), 4}};

  const std::vector<TddDescriptor> d1 = extract_tdds(ts, stacks);

  TrajectorySet rev = ts;
  std::reverse(rev.trajectories.begin(), rev.trajectories.end());
  const std::vector<TddDescriptor> d2 = extract_tdds(rev, stacks);
  REQUIRE(d1.size() == d2.size());
  for (std::size_t i = 0; i < d1.size(); ++i)
    CHECK(d1[i].values == d2[d1.size() - 1 - i].values);
}

TEST_CASE("descriptor files round-trip through binary plus sidecar") {
  TrajectorySet ts;
  ts.width = 32;
  ts.height = 32;
  ts.length = 16;
  for (int k = 0; k < 3; ++k) ts.trajectories.push_back(random_traj(15, 32, 32, 16, 40 + k));

  std::vector<PoolableStack> stacks;
  for (const char* layer : {"conv4", "conv5"}) {
    FeatureMapStack fm = dyadic_stack(4, 4, 16, 3, layer[4]);
    fm.layer_id = layer;
    fm.scale = 1.0f;
    stacks.push_back({normalize_spatiotemporal(fm), 16});
    stacks.push_back({normalize_channel(fm), 16});
  }
  const std::vector<TddDescriptor> ds = extract_tdds(ts, stacks);

  const std::string path =
      (std::filesystem::temp_directory_path() / "desc_roundtrip.tdd").string();
  write_descriptors(ds, "vid_42", path);
  const DescriptorFile f = read_descriptors(path);
  CHECK(f.video_id == "vid_42");
  CHECK(f.trajectory_ids == std::vector<int>{0, 1, 2});
  REQUIRE(f.groups.size() == 4);  // 2 layers x 2 norms x 1 scale
  for (const DescriptorGroup& g : f.groups) {
    CHECK(g.dim == 3);
    CHECK(g.count == 3);
  }
  // Every record matches its in-memory descriptor.
  for (const TddDescriptor& d : ds) {
    bool matched = false;
    for (const DescriptorGroup& g : f.groups) {
      if (g.layer != d.layer || g.norm != d.norm || g.scale != d.scale ||
          g.stream != d.stream)
        continue;
      const float* rec = f.record(g, d.trajectory_id);
      matched = std::equal(d.values.begin(), d.values.end(), rec);
    }
    CHECK(matched);
  }
  std::remove(path.c_str());
  std::remove((path + ".json").c_str());
}
