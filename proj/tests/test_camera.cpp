#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "tdd/errors.hpp"
#include "tdd/homography.hpp"
#include "tdd/image.hpp"
#include "tdd/rng.hpp"

using namespace tdd;

namespace {

Image make_texture(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  Image img(h, w, 1);
  for (float& v : img.data) v = static_cast<float>(rng.uniform(0.0, 255.0));
  return img;
}

// Rotation by angle about (cx, cy) plus translation (tx, ty).
Homography rigid_motion(double angle, double cx, double cy, double tx, double ty) {
  const double c = std::cos(angle), s = std::sin(angle);
  Homography H;
  H.h = {static_cast<float>(c), static_cast<float>(-s),
         static_cast<float>(cx - c * cx + s * cy + tx),
         static_cast<float>(s), static_cast<float>(c),
         static_cast<float>(cy - s * cx - c * cy + ty),
         0.0f, 0.0f, 1.0f};
  return H;
}

std::vector<Correspondence> exact_matches_under(const Homography& H, int count,
                                                Rng& rng, double extent = 64.0) {
  std::vector<Correspondence> m;
  m.reserve(count);
  for (int i = 0; i < count; ++i) {
    const Point2f p{static_cast<float>(rng.uniform(0.0, extent)),
                    static_cast<float>(rng.uniform(0.0, extent))};
    m.push_back({p, H.apply(p)});
  }
  return m;
}

}  // namespace

TEST_CASE("detect_corners returns nothing on a constant image") {
  const Image img(32, 32, 1, 9.0f);
  CHECK(detect_corners(img, 100, 0.01f, 3.0f).empty());
}

TEST_CASE("detect_corners finds the four corners of a bright square") {
  Image img(40, 40, 1, 0.0f);
  for (int y = 12; y <= 26; ++y)
    for (int x = 12; x <= 26; ++x) img.at(y, x) = 255.0f;
  const std::vector<Point2f> corners = detect_corners(img, 8, 0.5f, 5.0f);
  REQUIRE(corners.size() == 4);
  const float want[4][2] = {{12, 12}, {26, 12}, {12, 26}, {26, 26}};
  for (const auto& w : want) {
    bool found = false;
    for (const Point2f& c : corners)
      if (std::abs(c.x - w[0]) <= 2.0f && std::abs(c.y - w[1]) <= 2.0f) found = true;
    CHECK(found);
  }
}

TEST_CASE("detect_corners caps the count with zero quality and distance") {
  const Image img = make_texture(32, 32, 4);
  const std::vector<Point2f> corners = detect_corners(img, 7, 0.0f, 0.0f);
  CHECK(corners.size() == 7);
}

TEST_CASE("flow_correspondences maps grid points through the flow") {
  FlowField flow(20, 30);

  SUBCASE("zero flow gives q = p") {
    const std::vector<Correspondence> m = flow_correspondences(flow, 5);
    CHECK(m.size() == 4 * 6);
    for (const Correspondence& c : m) {
      CHECK(c.q.x == c.p.x);
      CHECK(c.q.y == c.p.y);
    }
  }

  SUBCASE("constant flow offsets every q and drops exits") {
    std::fill(flow.u.begin(), flow.u.end(), 3.0f);
    const std::vector<Correspondence> m = flow_correspondences(flow, 5);
    for (const Correspondence& c : m) {
      CHECK(c.q.x == c.p.x + 3.0f);
      CHECK(c.q.y == c.p.y);
      CHECK(c.q.x <= 29.0f);
    }
    // Grid columns 0,5,10,15,20,25 all stay inside after +3.
    CHECK(m.size() == 4 * 6);
  }

  SUBCASE("random flow matches direct indexing") {
    Rng rng(8);
    for (float& v : flow.u) v = static_cast<float>(rng.uniform(-4, 4));
    for (float& v : flow.v) v = static_cast<float>(rng.uniform(-4, 4));
    const std::vector<Correspondence> m = flow_correspondences(flow, 4);
    std::size_t expected = 0;
    for (int y = 0; y < 20; y += 4)
      for (int x = 0; x < 30; x += 4) {
        const float qx = x + flow.u_at(y, x);
        const float qy = y + flow.v_at(y, x);
        if (qx < 0 || qy < 0 || qx > 29 || qy > 19) continue;
        REQUIRE(expected < m.size());
        CHECK(m[expected].p.x == static_cast<float>(x));
        CHECK(m[expected].p.y == static_cast<float>(y));
        CHECK(m[expected].q.x == qx);
        CHECK(m[expected].q.y == qy);
        ++expected;
      }
    CHECK(m.size() == expected);
  }
}

TEST_CASE("ransac recovers the identity from exact matches") {
  Rng rng(12);
  const std::vector<Correspondence> m =
      exact_matches_under(Homography::identity(), 50, rng);
  const auto [H, mask] = estimate_homography_ransac(m, RansacParams{});
  for (int i = 0; i < 9; ++i) {
    const float want = (i % 4 == 0) ? 1.0f : 0.0f;
    CHECK(std::abs(H.h[i] - want) < 1e-6f);
  }
  CHECK(std::count(mask.begin(), mask.end(), true) == 50);
  CHECK(H.h[8] == 1.0f);
}

TEST_CASE("ransac survives 30% outliers on a synthetic homography") {
  Rng rng(77);
  const Homography truth = rigid_motion(0.05, 32, 32, 4.0, -2.5);
  std::vector<Correspondence> m = exact_matches_under(truth, 70, rng);
  for (int i = 0; i < 30; ++i) {
    m.push_back({Point2f{static_cast<float>(rng.uniform(0, 64)),
                         static_cast<float>(rng.uniform(0, 64))},
                 Point2f{static_cast<float>(rng.uniform(0, 64)),
                         static_cast<float>(rng.uniform(0, 64))}});
  }
  const auto [H, mask] = estimate_homography_ransac(m, RansacParams{});
  double err = 0.0;
  for (int i = 0; i < 70; ++i) {
    const Point2f proj = H.apply(m[i].p);
    err += std::hypot(proj.x - m[i].q.x, proj.y - m[i].q.y);
  }
  err /= 70;
  CHECK(err < 0.01);
  for (int i = 0; i < 70; ++i) CHECK(mask[i]);
}

TEST_CASE("ransac rejects insufficient matches") {
  Rng rng(5);
  const std::vector<Correspondence> m =
      exact_matches_under(Homography::identity(), 3, rng);
  CHECK_THROWS_WITH_AS(estimate_homography_ransac(m, RansacParams{}),
                       doctest::Contains("insufficient matches"),
                       std::invalid_argument);
}

TEST_CASE("ransac fails cleanly when nothing fits") {
  Rng rng(6);
  std::vector<Correspondence> m;
  for (int i = 0; i < 30; ++i)
    m.push_back({Point2f{static_cast<float>(rng.uniform(0, 64)),
                         static_cast<float>(rng.uniform(0, 64))},
                 Point2f{static_cast<float>(rng.uniform(0, 64)),
                         static_cast<float>(rng.uniform(0, 64))}});
  RansacParams params;
  params.min_inliers = 25;
  CHECK_THROWS_AS(estimate_homography_ransac(m, params), DataError);
}

TEST_CASE("ransac is invariant to match ordering") {
  Rng rng(91);
  const Homography truth = rigid_motion(-0.03, 20, 20, -3.0, 1.5);
  std::vector<Correspondence> m = exact_matches_under(truth, 40, rng);
  for (int i = 0; i < 15; ++i)
    m.push_back({Point2f{static_cast<float>(rng.uniform(0, 64)),
                         static_cast<float>(rng.uniform(0, 64))},
                 Point2f{static_cast<float>(rng.uniform(0, 64)),
                         static_cast<float>(rng.uniform(0, 64))}});

  const auto [H1, mask1] = estimate_homography_ransac(m, RansacParams{});

  // Deterministic permutation.
  std::vector<int> perm(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) perm[i] = static_cast<int>((i * 17 + 5) % m.size());
  std::vector<Correspondence> shuffled(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) shuffled[i] = m[perm[i]];

  const auto [H2, mask2] = estimate_homography_ransac(shuffled, RansacParams{});
  for (int i = 0; i < 9; ++i) CHECK(std::abs(H1.h[i] - H2.h[i]) <= 1e-9f);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(mask1[perm[i]] == mask2[i]);
}

TEST_CASE("ransac statistical recovery over seeded trials") {
  // Smaller sibling of the acceptance run: 10 seeds, all must recover.
  int successes = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed * 101);
    const Homography truth =
        rigid_motion(rng.uniform(-0.1, 0.1), 32, 32, rng.uniform(-5, 5),
                     rng.uniform(-5, 5));
    std::vector<Correspondence> m = exact_matches_under(truth, 70, rng);
    for (int i = 0; i < 30; ++i)
      m.push_back({Point2f{static_cast<float>(rng.uniform(0, 64)),
                           static_cast<float>(rng.uniform(0, 64))},
                   Point2f{static_cast<float>(rng.uniform(0, 64)),
                           static_cast<float>(rng.uniform(0, 64))}});
    RansacParams params;
    params.seed = seed;
    const auto [H, mask] = estimate_homography_ransac(m, params);
    double err = 0.0;
    for (int i = 0; i < 70; ++i) {
      const Point2f proj = H.apply(m[i].p);
      err += std::hypot(proj.x - m[i].q.x, proj.y - m[i].q.y);
    }
    if (err / 70 < 0.01) ++successes;
  }
  CHECK(successes == 10);
}

TEST_CASE("warp_frame with identity returns the image") {
  const Image img = make_texture(24, 24, 3);
  const Image out = warp_frame(img, Homography::identity());
  CHECK(out.data == img.data);
}

TEST_CASE("warp_frame translates with zero fill") {
  const Image img = make_texture(16, 16, 9);
  const Image out = warp_frame(img, Homography::translation(5.0f, 0.0f));
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 5; ++x) CHECK(out.at(y, x) == 0.0f);
    for (int x = 5; x < 16; ++x) CHECK(out.at(y, x) == img.at(y, x - 5));
  }
}

TEST_CASE("warp then inverse warp reproduces the interior") {
  // Band-limited image: bilinear resampling error stays below curvature
  // bounds, unlike raw noise.
  Image img(64, 64, 1);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      img.at(y, x) = static_cast<float>(
          127.0 + 60.0 * std::sin(2.0 * 3.14159265 * x / 16.0) *
                      std::cos(2.0 * 3.14159265 * y / 16.0));
  Homography H = rigid_motion(0.04, 32, 32, 2.0, -1.0);
  const Image there = warp_frame(img, H);
  const Image back = warp_frame(there, H.inverse());
  double mae = 0.0;
  int n = 0;
  for (int y = 8; y < 56; ++y)
    for (int x = 8; x < 56; ++x) {
      mae += std::abs(back.at(y, x) - img.at(y, x));
      ++n;
    }
  CHECK(mae / n < 2.0);
}

TEST_CASE("warp_frame rejects a singular homography") {
  Homography H;
  H.h = {1, 0, 0, 2, 0, 0, 0, 0, 1};  // rank 2
  CHECK_THROWS_AS(warp_frame(make_texture(8, 8, 1), H), std::invalid_argument);
}
