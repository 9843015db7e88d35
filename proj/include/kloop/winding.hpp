#pragma once

// Winding numbers of closed polylines: per-point ray casting, full index maps
// over a padded bounding grid, the |Ind| area integral, and the deterministic
// genericity jitter that breaks doubly-traversed segments.

#include <cstdint>
#include <functional>

#include "kloop/loop.hpp"

namespace kloop::winding {

struct IndexMap {
  Vec2 origin = Vec2::Zero();  // center of cell (0, 0)
  double spacing = 0.0;        // square cells
  int nx = 0;
  int ny = 0;
  Eigen::MatrixXi indices;                                   // nx x ny, (ix, iy)
  Eigen::Matrix<uint8_t, Eigen::Dynamic, Eigen::Dynamic> ambiguous;  // same shape
  double exclusion_band = 0.0;  // distance to the polyline below which a cell is ambiguous
  int ambiguous_count = 0;

  Vec2 center(int ix, int iy) const { return origin + spacing * Vec2(ix, iy); }
  double cell_area() const { return spacing * spacing; }
};

// Signed winding number of the closed polyline about z via +x ray crossing
// counts with the half-open rule on y (robust vertex-on-ray treatment).
// Guards against query points closer to the polyline than a relative band.
int point_index(const LoopCurve& u, const Vec2& z);

// Index of every cell center on a square grid over the bounding box padded by
// one cell ring; centers within the exclusion band (two cell diagonals) are
// additionally marked ambiguous. Every center still carries its exact
// ray-cast index; ambiguity only measures how well the center represents its
// cell. Cells of the unbounded component come out 0 by construction.
IndexMap index_map(const LoopCurve& u, int resolution);

// Sum |Ind| * cell area at the default 512 grid; bounded by arc_length^2/(4 pi)
// up to grid error (the Rado inequality).
double abs_index_area(const LoopCurve& u);

// Deterministic node jitter of magnitude 1e-9 * arc_length: makes
// self-intersections generic without moving any measured quantity.
LoopCurve perturb_generic(const LoopCurve& u, uint64_t seed);

// Index-weighted integral helper for the winding form of G: returns
// -sum Ind(center) * w(center) * cell_area, plus the ambiguous-area bound
// |error| <= ambiguous_count * cell_area * sup |w|.
struct WeightedIndexIntegral {
  double value = 0.0;
  double ambiguous_bound = 0.0;
  int ambiguous_count = 0;
};
WeightedIndexIntegral index_weighted_integral(const IndexMap& map,
                                              const std::function<double(const Vec2&)>& w,
                                              double w_sup);

}  // namespace kloop::winding
