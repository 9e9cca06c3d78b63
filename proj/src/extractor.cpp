#include "poleloc/extractor.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace poleloc {

namespace {

int wrap_col(int u, int w) {
  if (u < 0) return u + w;
  if (u >= w) return u - w;
  return u;
}

bool clusterable(const RangeImage& img, const ExtractorParams& params, int u,
                 int v) {
  return img.valid(u, v) && img.point(u, v).z > params.ground_z_cutoff;
}

/// Wrap-aware width in columns of the smallest arc covering all members.
int covering_arc_width(const std::vector<PixelCluster::Member>& pixels, int w) {
  std::vector<int> cols;
  cols.reserve(pixels.size());
  for (const auto& m : pixels) cols.push_back(m.u);
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  if (cols.size() == 1) return 1;
  int max_gap = cols.front() + w - cols.back();
  for (std::size_t i = 1; i < cols.size(); ++i)
    max_gap = std::max(max_gap, cols[i] - cols[i - 1]);
  return w - max_gap + 1;
}

/// Cluster id per pixel, -1 where unclaimed.
std::vector<int> label_map(const std::vector<PixelCluster>& clusters,
                           const RangeImage& img) {
  std::vector<int> labels(
      static_cast<std::size_t>(img.height()) * img.width(), -1);
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (const auto& m : clusters[c].pixels)
      labels[static_cast<std::size_t>(m.v) * img.width() + m.u] =
          static_cast<int>(c);
  return labels;
}

}  // namespace

std::vector<PixelCluster> cluster_range_image(const RangeImage& img,
                                              const ExtractorParams& params) {
  const int w = img.width();
  const int h = img.height();
  std::vector<char> visited(static_cast<std::size_t>(w) * h, 0);
  const auto idx = [w](int u, int v) {
    return static_cast<std::size_t>(v) * w + u;
  };

  std::vector<PixelCluster> clusters;
  std::deque<std::pair<int, int>> frontier;

  for (int v0 = 0; v0 < h; ++v0) {
    for (int u0 = 0; u0 < w; ++u0) {
      if (visited[idx(u0, v0)] || !clusterable(img, params, u0, v0)) continue;

      PixelCluster cluster;
      frontier.clear();
      frontier.emplace_back(u0, v0);
      visited[idx(u0, v0)] = 1;

      while (!frontier.empty()) {
        const auto [u, v] = frontier.front();
        frontier.pop_front();
        cluster.pixels.push_back({u, v, img.range(u, v), img.point(u, v)});

        const double r = img.range(u, v);
        // left/right wrap around the panorama seam; up mirrors the "below"
        // edges of the row above, so components stay well-defined.
        const int nbrs[4][2] = {{wrap_col(u - 1, w), v},
                                {wrap_col(u + 1, w), v},
                                {u, v + 1},
                                {u, v - 1}};
        for (const auto& n : nbrs) {
          const int nu = n[0], nv = n[1];
          if (nv < 0 || nv >= h) continue;
          if (visited[idx(nu, nv)] || !clusterable(img, params, nu, nv))
            continue;
          if (std::abs(img.range(nu, nv) - r) >= params.range_gap) continue;
          visited[idx(nu, nv)] = 1;
          frontier.emplace_back(nu, nv);
        }
      }

      if (cluster.size() < params.min_cluster_pixels) continue;

      std::sort(cluster.pixels.begin(), cluster.pixels.end(),
                [](const auto& a, const auto& b) {
                  return a.v != b.v ? a.v < b.v : a.u < b.u;
                });
      cluster.u_min = cluster.u_max = cluster.pixels.front().u;
      cluster.v_min = cluster.v_max = cluster.pixels.front().v;
      for (const auto& m : cluster.pixels) {
        cluster.u_min = std::min(cluster.u_min, m.u);
        cluster.u_max = std::max(cluster.u_max, m.u);
        cluster.v_min = std::min(cluster.v_min, m.v);
        cluster.v_max = std::max(cluster.v_max, m.v);
      }
      cluster.u_extent = covering_arc_width(cluster.pixels, w);
      clusters.push_back(std::move(cluster));
    }
  }
  return clusters;
}

namespace {

/// Member pixels of one image row whose range undercuts the row's horizontal
/// background: the first non-member pixel beyond each end of the pixel's
/// run (wrap-aware). Background with no return counts as farther away.
int count_foreground_in_row(
    const RangeImage& img, int v,
    const std::vector<const PixelCluster::Member*>& row) {
  const int w = img.width();

  // maximal runs of consecutive member columns (row is sorted by u)
  struct Run {
    std::size_t begin, end;  // indices into `row`, end inclusive
  };
  std::vector<Run> runs;
  for (std::size_t i = 0; i < row.size();) {
    std::size_t j = i;
    while (j + 1 < row.size() && row[j + 1]->u == row[j]->u + 1) ++j;
    runs.push_back({i, j});
    i = j + 1;
  }
  // a run touching column 0 continues a run touching column w-1
  const bool wraps = runs.size() >= 2 && row.front()->u == 0 &&
                     row.back()->u == w - 1;
  if (static_cast<int>(row.size()) == w) return 0;  // no background at all

  int count = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    std::size_t lead = r;                   // run providing the left end
    std::size_t tail = r;                   // run providing the right end
    if (wraps && r == 0) lead = runs.size() - 1;
    if (wraps && r == runs.size() - 1) continue;  // handled as part of run 0
    const int left_col = wrap_col(row[runs[lead].begin]->u - 1, w);
    const int right_col = wrap_col(row[runs[tail].end]->u + 1, w);

    const auto counts = [&](double range) {
      const bool left_farther =
          !img.valid(left_col, v) || range < img.range(left_col, v);
      const bool right_farther =
          !img.valid(right_col, v) || range < img.range(right_col, v);
      return left_farther || right_farther;
    };
    for (std::size_t k = runs[r].begin; k <= runs[r].end; ++k)
      if (counts(row[k]->range)) ++count;
    if (wraps && r == 0)  // pixels of the wrapped tail share this background
      for (std::size_t k = runs.back().begin; k <= runs.back().end; ++k)
        if (counts(row[k]->range)) ++count;
  }
  return count;
}

}  // namespace

std::vector<PixelCluster> filter_clusters(std::vector<PixelCluster> clusters,
                                          const RangeImage& img,
                                          const ExtractorParams& params) {
  std::vector<PixelCluster> kept;
  for (PixelCluster& cluster : clusters) {
    if (cluster.height() < cluster.width()) continue;  // aspect ratio h/w >= 1

    int n_small_r = 0;
    for (std::size_t i = 0; i < cluster.pixels.size();) {
      std::size_t j = i;
      while (j < cluster.pixels.size() &&
             cluster.pixels[j].v == cluster.pixels[i].v)
        ++j;
      std::vector<const PixelCluster::Member*> row;
      row.reserve(j - i);
      for (std::size_t k = i; k < j; ++k) row.push_back(&cluster.pixels[k]);
      n_small_r += count_foreground_in_row(img, cluster.pixels[i].v, row);
      i = j;
    }
    if (n_small_r < params.smaller_range_fraction * cluster.size()) continue;
    kept.push_back(std::move(cluster));
  }
  return kept;
}

std::optional<Circle> fit_circle(std::span<const Point2> points) {
  const std::size_t n = points.size();
  if (n < 3) return std::nullopt;

  double mx = 0.0, my = 0.0;
  for (const Point2& p : points) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  // Kåsa fit in centroid-centered coordinates: solve the 2x2 normal system
  //   [Suu Suv][uc]   1 [Suuu + Suvv]
  //   [Suv Svv][vc] = 2 [Svvv + Svuu]
  double suu = 0.0, suv = 0.0, svv = 0.0;
  double suuu = 0.0, svvv = 0.0, suvv = 0.0, svuu = 0.0;
  for (const Point2& p : points) {
    const double u = p.x - mx;
    const double v = p.y - my;
    const double uu = u * u;
    const double vv = v * v;
    suu += uu;
    svv += vv;
    suv += u * v;
    suuu += uu * u;
    svvv += vv * v;
    suvv += u * vv;
    svuu += v * uu;
  }

  const double det = suu * svv - suv * suv;
  const double scale = suu + svv;
  if (det <= 1e-12 * scale * scale) return std::nullopt;  // collinear

  const double rhs1 = 0.5 * (suuu + suvv);
  const double rhs2 = 0.5 * (svvv + svuu);
  const double uc = (rhs1 * svv - rhs2 * suv) / det;
  const double vc = (suu * rhs2 - suv * rhs1) / det;
  const double r_sq = uc * uc + vc * vc + scale / static_cast<double>(n);
  return Circle{mx + uc, my + vc, std::sqrt(r_sq)};
}

namespace {

/// Occupied pixels in the ring (radius, radius + margin] around the fitted
/// center, scanned over a window of rows/columns around the cluster.
int ring_occupancy(const RangeImage& img, const std::vector<int>& labels,
                   int cluster_id, const PixelCluster& cluster,
                   const Circle& circle, const ExtractorParams& params) {
  const int w = img.width();
  const int h = img.height();
  const double outer = circle.radius + params.free_space_margin;
  const double center_dist = std::hypot(circle.x, circle.y);
  const double half_ang =
      std::atan2(outer, std::max(0.5, center_dist - outer));

  const double col_res = 2.0 * M_PI / w;
  const int du_win = std::min(
      (w - 1) / 2, static_cast<int>(std::ceil(half_ang / col_res)) + 1);
  // Structures beside the pole sit at comparable range, i.e. in comparable
  // rows; reuse the (conservative) angular window for the row expansion.
  const int dv_win = du_win;

  const double yaw = std::atan2(circle.y, circle.x);
  const int center_u = std::clamp(
      static_cast<int>(std::floor(0.5 * (1.0 - yaw / M_PI) * w)), 0, w - 1);

  const int v_lo = std::max(0, cluster.v_min - dv_win);
  const int v_hi = std::min(h - 1, cluster.v_max + dv_win);

  int occupied = 0;
  for (int v = v_lo; v <= v_hi; ++v) {
    for (int du = -du_win; du <= du_win; ++du) {
      const int u = wrap_col(wrap_col(center_u + du, w), w);
      if (labels[static_cast<std::size_t>(v) * w + u] == cluster_id) continue;
      if (!img.valid(u, v)) continue;
      const Point3 p = img.point(u, v);
      if (p.z <= params.ground_z_cutoff) continue;
      const double d = std::hypot(p.x - circle.x, p.y - circle.y);
      if (d > circle.radius && d <= outer) ++occupied;
    }
  }
  return occupied;
}

}  // namespace

std::vector<PoleDetection> extract_poles(const RangeImage& img,
                                         const ExtractorParams& params) {
  std::vector<PixelCluster> clusters = cluster_range_image(img, params);
  clusters = filter_clusters(std::move(clusters), img, params);
  const std::vector<int> labels = label_map(clusters, img);

  std::vector<PoleDetection> poles;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const PixelCluster& cluster = clusters[c];

    double z_min = std::numeric_limits<double>::infinity();
    double z_max = -std::numeric_limits<double>::infinity();
    for (const auto& m : cluster.pixels) {
      z_min = std::min(z_min, m.point.z);
      z_max = std::max(z_max, m.point.z);
    }
    if (!(z_max > params.min_top_z && z_min < params.max_bottom_z &&
          z_max - z_min > params.min_z_extent))
      continue;

    std::vector<Point2> xy;
    xy.reserve(cluster.pixels.size());
    for (const auto& m : cluster.pixels) xy.push_back({m.point.x, m.point.y});
    const auto circle = fit_circle(xy);
    if (!circle) continue;

    if (circle->radius < params.min_radius ||
        circle->radius > params.max_radius)
      continue;

    const int n_free = ring_occupancy(img, labels, static_cast<int>(c),
                                      cluster, *circle, params);
    if (n_free >= params.free_space_fraction * cluster.size()) continue;

    poles.push_back({circle->x, circle->y, circle->radius, cluster.size(),
                     Frame::kSensor});
  }
  return poles;
}

}  // namespace poleloc
