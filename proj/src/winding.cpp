#include "kloop/winding.hpp"

#include <algorithm>
#include <random>
#include <vector>

namespace kloop::winding {

namespace {

double point_segment_distance(const Vec2& z, const Vec2& p, const Vec2& q) {
  const Vec2 d = q - p;
  const double len2 = d.squaredNorm();
  if (len2 == 0.0) return (z - p).norm();
  const double t = std::clamp((z - p).dot(d) / len2, 0.0, 1.0);
  return (z - (p + t * d)).norm();
}

double polyline_distance(const Mat2X& p, const Vec2& z) {
  const Eigen::Index n = p.cols();
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < n; ++k) {
    best = std::min(best, point_segment_distance(z, p.col(k), p.col((k + 1) % n)));
  }
  return best;
}

// Signed +x ray crossings: an edge (p,q) crosses the horizontal line at z.y
// when p.y <= z.y < q.y (upward, +1) or q.y <= z.y < p.y (downward, -1); the
// crossing counts if its x coordinate exceeds z.x.
int ray_cast_index(const Mat2X& pts, const Vec2& z) {
  const Eigen::Index n = pts.cols();
  int wind = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Vec2 p = pts.col(k);
    const Vec2 q = pts.col((k + 1) % n);
    const bool up = p.y() <= z.y() && z.y() < q.y();
    const bool down = q.y() <= z.y() && z.y() < p.y();
    if (!up && !down) continue;
    const double x_cross = p.x() + (z.y() - p.y()) / (q.y() - p.y()) * (q.x() - p.x());
    if (x_cross > z.x()) wind += up ? 1 : -1;
  }
  return wind;
}

}  // namespace

int point_index(const LoopCurve& u, const Vec2& z) {
  const double guard = 1e-9 * std::max(1.0, arc_length(u));
  if (polyline_distance(u.pts(), z) <= guard) {
    throw Error(ErrKind::TooCloseToCurve, "query point sits on the polyline");
  }
  return ray_cast_index(u.pts(), z);
}

IndexMap index_map(const LoopCurve& u, int resolution) {
  if (resolution < 64) throw Error(ErrKind::BadConfig, "index_map resolution must be >= 64");
  const Mat2X& p = u.pts();
  const Vec2 lo = p.rowwise().minCoeff();
  const Vec2 hi = p.rowwise().maxCoeff();
  const double extent = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1e-12});

  IndexMap map;
  map.spacing = extent / (resolution - 3);
  map.nx = static_cast<int>(std::ceil((hi.x() - lo.x()) / map.spacing)) + 3;
  map.ny = static_cast<int>(std::ceil((hi.y() - lo.y()) / map.spacing)) + 3;
  map.origin = lo - Vec2(1.0, 1.0) * map.spacing;  // one padding cell ring before the first center
  map.exclusion_band = 2.0 * map.spacing * std::sqrt(2.0);
  map.indices.setZero(map.nx, map.ny);
  map.ambiguous.setZero(map.nx, map.ny);

  // Row scanline: collect the signed crossings of each grid row once, then
  // accumulate suffix sums right-to-left, which equals the +x ray count at
  // every center of that row.
  const Eigen::Index n = p.cols();
  std::vector<std::vector<std::pair<double, int>>> rows(map.ny);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Vec2 a = p.col(k);
    const Vec2 b = p.col((k + 1) % n);
    const double ylo = std::min(a.y(), b.y());
    const double yhi = std::max(a.y(), b.y());
    int j0 = static_cast<int>(std::ceil((ylo - map.origin.y()) / map.spacing));
    int j1 = static_cast<int>(std::floor((yhi - map.origin.y()) / map.spacing));
    j0 = std::max(j0, 0);
    j1 = std::min(j1, map.ny - 1);
    for (int j = j0; j <= j1; ++j) {
      const double y = map.origin.y() + j * map.spacing;
      const bool up = a.y() <= y && y < b.y();
      const bool down = b.y() <= y && y < a.y();
      if (!up && !down) continue;
      const double x = a.x() + (y - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
      rows[j].emplace_back(x, up ? 1 : -1);
    }
  }
  for (int j = 0; j < map.ny; ++j) {
    auto& row = rows[j];
    std::sort(row.begin(), row.end());
    int acc = 0;
    auto it = row.rbegin();
    for (int i = map.nx - 1; i >= 0; --i) {
      const double x = map.origin.x() + i * map.spacing;
      while (it != row.rend() && it->first > x) {
        acc += it->second;
        ++it;
      }
      map.indices(i, j) = acc;
    }
  }

  // Ambiguity marking by rasterizing a band around each edge.
  const int reach = static_cast<int>(std::ceil(map.exclusion_band / map.spacing)) + 1;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Vec2 a = p.col(k);
    const Vec2 b = p.col((k + 1) % n);
    const int i0 = std::max(0, static_cast<int>(std::floor((std::min(a.x(), b.x()) - map.origin.x()) / map.spacing)) - reach);
    const int i1 = std::min(map.nx - 1, static_cast<int>(std::ceil((std::max(a.x(), b.x()) - map.origin.x()) / map.spacing)) + reach);
    const int j0 = std::max(0, static_cast<int>(std::floor((std::min(a.y(), b.y()) - map.origin.y()) / map.spacing)) - reach);
    const int j1 = std::min(map.ny - 1, static_cast<int>(std::ceil((std::max(a.y(), b.y()) - map.origin.y()) / map.spacing)) + reach);
    for (int i = i0; i <= i1; ++i) {
      for (int j = j0; j <= j1; ++j) {
        if (map.ambiguous(i, j)) continue;
        if (point_segment_distance(map.center(i, j), a, b) <= map.exclusion_band) {
          map.ambiguous(i, j) = 1;
        }
      }
    }
  }
  map.ambiguous_count = static_cast<int>(map.ambiguous.cast<int>().sum());
  return map;
}

double abs_index_area(const LoopCurve& u) {
  const IndexMap map = index_map(u, 512);
  double acc = 0.0;
  for (int i = 0; i < map.nx; ++i) {
    for (int j = 0; j < map.ny; ++j) acc += std::abs(map.indices(i, j));
  }
  return acc * map.cell_area();
}

LoopCurve perturb_generic(const LoopCurve& u, uint64_t seed) {
  // Per-coordinate amplitude amp/sqrt(2) keeps every node displacement,
  // hence the Hausdorff distance to the input, at or below amp.
  const double amp = 1e-9 * arc_length(u);
  const double coord = amp / std::sqrt(2.0);
  std::mt19937_64 rng(seed);
  // Fixed 53-bit mapping to [0,1) so the jitter is reproducible everywhere.
  const auto uniform = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  Mat2X p = u.pts();
  for (Eigen::Index k = 0; k < p.cols(); ++k) {
    p(0, k) += coord * (2.0 * uniform() - 1.0);
    p(1, k) += coord * (2.0 * uniform() - 1.0);
  }
  return LoopCurve(std::move(p));
}

WeightedIndexIntegral index_weighted_integral(const IndexMap& map,
                                              const std::function<double(const Vec2&)>& w,
                                              double w_sup) {
  WeightedIndexIntegral out;
  double acc = 0.0;
  for (int i = 0; i < map.nx; ++i) {
    for (int j = 0; j < map.ny; ++j) {
      if (map.indices(i, j) != 0) acc += map.indices(i, j) * w(map.center(i, j));
    }
  }
  out.value = -acc * map.cell_area();
  out.ambiguous_count = map.ambiguous_count;
  out.ambiguous_bound = map.ambiguous_count * map.cell_area() * w_sup;
  return out;
}

}  // namespace kloop::winding
