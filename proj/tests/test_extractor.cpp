#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "poleloc/extractor.hpp"
#include "poleloc/random.hpp"
#include "poleloc/simulator.hpp"
#include "test_helpers.hpp"

using namespace poleloc;

namespace {

ExtractorParams default_params() { return ExtractorParams{}; }

/// Hand-built image: every written pixel carries z above the ground cutoff
/// unless stated otherwise, and a sensor-plausible (x, y).
struct ImageBuilder {
  RangeImage img;
  explicit ImageBuilder(int h, int w) : img(h, w) {}

  void put(int u, int v, double range, double z = 0.0) {
    const double yaw = M_PI * (1.0 - 2.0 * (u + 0.5) / img.width());
    const double horiz = std::sqrt(std::max(0.0, range * range - z * z));
    img.set(u, v, {horiz * std::cos(yaw), horiz * std::sin(yaw), z}, range);
  }
};

SensorConfig os64_cfg() { return SensorConfig{}; }

/// Scan of a world from a fixed pose, noise free.
RangeImage scan_world(const WorldSpec& world, const Pose2D& pose,
                      const SensorConfig& cfg, double mount = 1.5) {
  Rng rng(1);
  const auto points = raycast_scan(world, pose, 0.0, mount, cfg, 0.0, rng);
  return project_scan(points, cfg);
}

/// Independent component oracle: union-find over all valid above-ground
/// pixels with edges in random order.
std::vector<std::set<std::pair<int, int>>> brute_components(
    const RangeImage& img, const ExtractorParams& params,
    std::uint64_t shuffle_seed) {
  const int w = img.width(), h = img.height();
  const auto ok = [&](int u, int v) {
    return img.valid(u, v) && img.point(u, v).z > params.ground_z_cutoff;
  };
  std::vector<int> parent(static_cast<std::size_t>(w) * h);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };

  struct Edge {
    int a, b;
  };
  std::vector<Edge> edges;
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      if (!ok(u, v)) continue;
      const int nbrs[3][2] = {{(u + 1) % w, v}, {(u + w - 1) % w, v},
                              {u, v + 1}};
      for (const auto& n : nbrs) {
        if (n[1] >= h || !ok(n[0], n[1])) continue;
        if (std::abs(img.range(u, v) - img.range(n[0], n[1])) >=
            params.range_gap)
          continue;
        edges.push_back({v * w + u, n[1] * w + n[0]});
      }
    }
  std::mt19937_64 shuffler(shuffle_seed);
  std::shuffle(edges.begin(), edges.end(), shuffler);
  for (const Edge& e : edges) parent[find(e.a)] = find(e.b);

  std::map<int, std::set<std::pair<int, int>>> comps;
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
      if (ok(u, v)) comps[find(v * w + u)].insert({u, v});

  std::vector<std::set<std::pair<int, int>>> out;
  for (auto& [root, members] : comps)
    if (static_cast<int>(members.size()) >= params.min_cluster_pixels)
      out.push_back(std::move(members));
  return out;
}

std::set<std::pair<int, int>> to_set(const PixelCluster& c) {
  std::set<std::pair<int, int>> s;
  for (const auto& m : c.pixels) s.insert({m.u, m.v});
  return s;
}

}  // namespace

TEST_SUITE("extractor") {

TEST_CASE("all-invalid image clusters to nothing") {
  const RangeImage img(16, 32);
  CHECK(cluster_range_image(img, default_params()).empty());
  CHECK(extract_poles(img, default_params()).empty());
}

TEST_CASE("vertical run of equal ranges forms one cluster") {
  ImageBuilder b(16, 32);
  for (int v = 4; v < 9; ++v) b.put(10, v, 8.0);
  auto params = default_params();
  params.min_cluster_pixels = 3;
  const auto clusters = cluster_range_image(b.img, params);
  REQUIRE(clusters.size() == 1);
  CHECK(clusters[0].size() == 5);
  CHECK(clusters[0].width() == 1);
  CHECK(clusters[0].height() == 5);
}

TEST_CASE("a range jump of twice the gap splits clusters") {
  auto params = default_params();
  params.min_cluster_pixels = 3;
  SUBCASE("both sides big enough") {
    ImageBuilder b(16, 32);
    for (int v = 2; v < 6; ++v) b.put(10, v, 8.0);
    for (int v = 6; v < 10; ++v) b.put(10, v, 8.0 + 2.0 * params.range_gap);
    const auto clusters = cluster_range_image(b.img, params);
    CHECK(clusters.size() == 2);
  }
  SUBCASE("small side discarded") {
    ImageBuilder b(16, 32);
    for (int v = 2; v < 6; ++v) b.put(10, v, 8.0);
    for (int v = 6; v < 8; ++v) b.put(10, v, 8.0 + 2.0 * params.range_gap);
    const auto clusters = cluster_range_image(b.img, params);
    REQUIRE(clusters.size() == 1);
    CHECK(clusters[0].size() == 4);
  }
}

TEST_CASE("clusters wrap across the horizontal seam") {
  ImageBuilder b(16, 32);
  for (int v = 4; v < 10; ++v) {
    b.put(31, v, 8.0);
    b.put(0, v, 8.0);
  }
  const auto clusters = cluster_range_image(b.img, default_params());
  REQUIRE(clusters.size() == 1);
  CHECK(clusters[0].size() == 12);
  CHECK(clusters[0].width() == 2);  // wrap-aware, not 32
}

TEST_CASE("ground pixels below the z cutoff are ignored") {
  ImageBuilder b(16, 32);
  for (int v = 4; v < 8; ++v) b.put(10, v, 8.0, 0.5);
  for (int v = 8; v < 12; ++v) b.put(10, v, 8.0, -1.4);  // below cutoff
  const auto clusters = cluster_range_image(b.img, default_params());
  REQUIRE(clusters.size() == 1);
  CHECK(clusters[0].size() == 4);
}

TEST_CASE("cluster pixel count matches the ray-cast oracle hit count") {
  WorldSpec world;
  world.poles.push_back({10.0, 0.0, 0.15, 4.0});
  const auto cfg = os64_cfg();
  const auto params = default_params();

  Rng rng(3);
  const auto hits =
      raycast_scan_hits(world, {0, 0, 0}, 0.0, 1.5, cfg, 0.0, rng);
  int pole_hits_above_ground = 0;
  for (const RayHit& h : hits)
    if (h.surface == Surface::kPole && h.point.z > params.ground_z_cutoff)
      ++pole_hits_above_ground;
  REQUIRE(pole_hits_above_ground > 20);

  std::vector<Point3> points;
  for (const RayHit& h : hits) points.push_back(h.point);
  const auto img = project_scan(points, cfg);
  const auto clusters = cluster_range_image(img, params);
  REQUIRE(clusters.size() == 1);
  CHECK(clusters[0].size() == pole_hits_above_ground);
}

TEST_CASE("partition property against a union-find oracle") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    ImageBuilder b(12, 24);
    const int n = 30 + static_cast<int>(rng.uniform01() * 120);
    for (int i = 0; i < n; ++i) {
      const int u = static_cast<int>(rng.uniform01() * 24);
      const int v = static_cast<int>(rng.uniform01() * 12);
      b.put(u, v, rng.uniform(2.0, 8.0));
    }
    auto params = default_params();
    params.min_cluster_pixels = 2;
    params.range_gap = 1.0;

    const auto clusters = cluster_range_image(b.img, params);
    auto expected = brute_components(b.img, params, 1000 + trial);

    // same partition, regardless of traversal order
    std::vector<std::set<std::pair<int, int>>> got;
    got.reserve(clusters.size());
    for (const auto& c : clusters) got.push_back(to_set(c));
    const auto by_first = [](const auto& a, const auto& b2) {
      return *a.begin() < *b2.begin();
    };
    std::sort(got.begin(), got.end(), by_first);
    std::sort(expected.begin(), expected.end(), by_first);
    CHECK(got == expected);

    // disjointness
    std::set<std::pair<int, int>> all;
    std::size_t total = 0;
    for (const auto& s : got) {
      total += s.size();
      all.insert(s.begin(), s.end());
    }
    CHECK(all.size() == total);
  }
}

TEST_CASE("growing the range gap never shrinks a pixel's cluster") {
  Rng rng(37);
  ImageBuilder b(12, 24);
  for (int i = 0; i < 140; ++i)
    b.put(static_cast<int>(rng.uniform01() * 24),
          static_cast<int>(rng.uniform01() * 12), rng.uniform(2.0, 6.0));

  auto params = default_params();
  params.min_cluster_pixels = 1;
  const auto size_of_cluster_at = [&](double gap, int u, int v) -> int {
    params.range_gap = gap;
    for (const auto& c : cluster_range_image(b.img, params))
      for (const auto& m : c.pixels)
        if (m.u == u && m.v == v) return c.size();
    return 0;
  };

  for (int probe = 0; probe < 25; ++probe) {
    const int u = static_cast<int>(rng.uniform01() * 24);
    const int v = static_cast<int>(rng.uniform01() * 12);
    if (!b.img.valid(u, v)) continue;
    int prev = 0;
    for (const double gap : {0.1, 0.5, 1.0, 2.0, 5.0}) {
      const int size = size_of_cluster_at(gap, u, v);
      CHECK(size >= prev);
      prev = size;
    }
  }
}

TEST_CASE("wide clusters fail the aspect-ratio rule") {
  ImageBuilder b(16, 32);
  for (int v = 4; v < 6; ++v)
    for (int u = 10; u < 13; ++u) b.put(u, v, 8.0);  // 3 wide x 2 tall
  auto params = default_params();
  params.min_cluster_pixels = 3;
  auto clusters = cluster_range_image(b.img, params);
  REQUIRE(clusters.size() == 1);
  CHECK(filter_clusters(std::move(clusters), b.img, params).empty());
}

TEST_CASE("isolated cluster passes the foreground rule") {
  ImageBuilder b(16, 32);
  for (int v = 4; v < 9; ++v) b.put(10, v, 8.0);
  auto params = default_params();
  params.smaller_range_fraction = 0.6;
  auto clusters = cluster_range_image(b.img, params);
  REQUIRE(clusters.size() == 1);
  CHECK(filter_clusters(std::move(clusters), b.img, params).size() == 1);
}

TEST_CASE("cluster flush against nearer walls fails the foreground rule") {
  // pole at 10 m flanked left and right by a wall face ~0.9 m nearer:
  // separate clusters (gap >= range_gap), but the pole is not in front of
  // its horizontal background.
  ImageBuilder b(16, 32);
  for (int v = 4; v < 10; ++v) {
    b.put(15, v, 10.0);
    b.put(16, v, 10.0);
    for (int u = 10; u < 15; ++u) b.put(u, v, 9.1);
    for (int u = 17; u < 22; ++u) b.put(u, v, 9.1);
  }
  const auto params = default_params();
  auto clusters = cluster_range_image(b.img, params);
  REQUIRE(clusters.size() == 3);

  // independent count of the foreground pixels of the middle cluster
  const auto kept = filter_clusters(std::move(clusters), b.img, params);
  for (const auto& c : kept) {
    for (const auto& m : c.pixels) {
      CHECK(m.range < 10.0);  // only wall clusters may survive
    }
  }
}

TEST_CASE("fit_circle: symmetric four-point circle") {
  const std::vector<Point2> pts{{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  const auto c = fit_circle(pts);
  REQUIRE(c.has_value());
  CHECK(c->x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(c->y == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(c->radius == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fit_circle matches the three-point circumcenter closed form") {
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const double cx = rng.uniform(-5.0, 5.0);
    const double cy = rng.uniform(-5.0, 5.0);
    const double r = rng.uniform(0.05, 2.0);
    std::vector<Point2> pts;
    for (int i = 0; i < 3; ++i) {
      const double a = rng.uniform(0.0, 2.0 * M_PI);
      pts.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
    }
    const auto oracle = test::circumcircle(pts[0], pts[1], pts[2]);
    const auto fitted = fit_circle(pts);
    if (!oracle) continue;  // nearly collinear draw
    REQUIRE(fitted.has_value());
    CHECK(fitted->x == doctest::Approx(oracle->x).epsilon(1e-9));
    CHECK(fitted->y == doctest::Approx(oracle->y).epsilon(1e-9));
    CHECK(fitted->radius == doctest::Approx(oracle->radius).epsilon(1e-9));
  }
}

TEST_CASE("fit_circle recovers a known circle exactly from many samples") {
  Rng rng(43);
  for (int trial = 0; trial < 50; ++trial) {
    const double cx = rng.uniform(-10.0, 10.0);
    const double cy = rng.uniform(-10.0, 10.0);
    const double r = rng.uniform(0.02, 0.5);
    std::vector<Point2> pts;
    const int n = 3 + static_cast<int>(rng.uniform01() * 40);
    for (int i = 0; i < n; ++i) {
      const double a = rng.uniform(0.0, M_PI);  // half arc
      pts.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
    }
    const auto fitted = fit_circle(pts);
    if (!fitted) continue;
    CHECK(std::abs(fitted->x - cx) < 1e-6);
    CHECK(std::abs(fitted->y - cy) < 1e-6);
    CHECK(std::abs(fitted->radius - r) < 1e-6);
  }
}

TEST_CASE("fit_circle rejects degenerate input") {
  CHECK_FALSE(fit_circle(std::vector<Point2>{{0, 0}, {1, 1}}).has_value());
  CHECK_FALSE(
      fit_circle(std::vector<Point2>{{0, 0}, {1, 1}, {2, 2}}).has_value());
  CHECK_FALSE(fit_circle(std::vector<Point2>{{0, 0}, {1, 0}, {2, 0}, {3, 0}})
                  .has_value());
  // two distinct points repeated many times are still degenerate
  std::vector<Point2> two;
  for (int i = 0; i < 30; ++i) two.push_back(i % 2 ? Point2{1.0, 2.0}
                                                   : Point2{1.2, 2.1});
  CHECK_FALSE(fit_circle(two).has_value());
}

TEST_CASE("fit_circle is equivariant under rigid transforms") {
  Rng rng(47);
  std::vector<Point2> pts;
  for (int i = 0; i < 12; ++i) {
    const double a = rng.uniform(0.0, 2.0 * M_PI);
    pts.push_back({2.0 + 0.3 * std::cos(a), -1.0 + 0.3 * std::sin(a)});
  }
  const auto base = fit_circle(pts);
  REQUIRE(base.has_value());

  const double phi = 0.7, tx = 3.5, ty = -2.25;
  std::vector<Point2> moved;
  for (const Point2& p : pts)
    moved.push_back({std::cos(phi) * p.x - std::sin(phi) * p.y + tx,
                     std::sin(phi) * p.x + std::cos(phi) * p.y + ty});
  const auto shifted = fit_circle(moved);
  REQUIRE(shifted.has_value());
  const double ex = std::cos(phi) * base->x - std::sin(phi) * base->y + tx;
  const double ey = std::sin(phi) * base->x + std::cos(phi) * base->y + ty;
  CHECK(shifted->x == doctest::Approx(ex).epsilon(1e-9));
  CHECK(shifted->y == doctest::Approx(ey).epsilon(1e-9));
  CHECK(shifted->radius == doctest::Approx(base->radius).epsilon(1e-9));
}

TEST_CASE("single pole world extracts one accurate detection") {
  WorldSpec world;
  world.poles.push_back({8.0, 2.0, 0.15, 4.0});
  const auto cfg = os64_cfg();
  const auto img = scan_world(world, {0, 0, 0}, cfg);
  const auto poles = extract_poles(img, default_params());
  REQUIRE(poles.size() == 1);

  const double range = std::hypot(8.0, 2.0);
  const double tol = range * 2.0 * M_PI / cfg.width;  // angular footprint
  CHECK(std::hypot(poles[0].x - 8.0, poles[0].y - 2.0) < tol);
  CHECK(std::abs(poles[0].radius - 0.15) < 0.05);
  CHECK(poles[0].support >= default_params().min_cluster_pixels);
}

TEST_CASE("a wall segment yields no detection") {
  WorldSpec world;
  world.walls.push_back({8.0, 1.0, 8.0, 3.0, 4.0});  // 2 m wide face
  const auto img = scan_world(world, {0, 0, 0}, os64_cfg());
  CHECK(extract_poles(img, default_params()).empty());
}

TEST_CASE("a stub below the z-extent gate yields no detection") {
  WorldSpec world;
  world.poles.push_back({8.0, 2.0, 0.15, 0.5});
  const auto img = scan_world(world, {0, 0, 0}, os64_cfg());
  CHECK(extract_poles(img, default_params()).empty());
}

TEST_CASE("returned detections satisfy every gate when re-checked") {
  WorldSpec world;
  world.poles.push_back({8.0, 2.0, 0.15, 4.0});
  world.poles.push_back({12.0, -3.0, 0.25, 5.0});
  world.poles.push_back({6.0, -6.0, 0.1, 3.0});
  world.walls.push_back({15.0, -2.0, 15.0, 6.0, 3.0});
  const auto cfg = os64_cfg();
  const auto params = default_params();
  const auto img = scan_world(world, {0, 0, 0}, cfg);

  // post-hoc validator: re-derive the winning cluster set and check gates
  const auto detections = extract_poles(img, params);
  REQUIRE(!detections.empty());
  auto clusters = filter_clusters(cluster_range_image(img, params), img,
                                  params);
  for (const PoleDetection& det : detections) {
    CHECK(det.radius >= params.min_radius);
    CHECK(det.radius <= params.max_radius);
    CHECK(det.support >= params.min_cluster_pixels);

    // find the source cluster by refitting each candidate
    bool matched = false;
    for (const auto& c : clusters) {
      std::vector<Point2> xy;
      for (const auto& m : c.pixels) xy.push_back({m.point.x, m.point.y});
      const auto fit = fit_circle(xy);
      if (!fit) continue;
      if (std::hypot(fit->x - det.x, fit->y - det.y) > 1e-9) continue;
      matched = true;
      CHECK(c.height() >= c.width());
      double z_min = 1e18, z_max = -1e18;
      for (const auto& m : c.pixels) {
        z_min = std::min(z_min, m.point.z);
        z_max = std::max(z_max, m.point.z);
      }
      CHECK(z_max > params.min_top_z);
      CHECK(z_min < params.max_bottom_z);
      CHECK(z_max - z_min > params.min_z_extent);
      CHECK(c.size() == det.support);
    }
    CHECK(matched);
  }
}

}  // TEST_SUITE
