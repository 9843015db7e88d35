#pragma once

// Explicit mountain-pass geometry: rectangle and circle test loops, and
// certified initial paths from the zero loop to a negative-energy endpoint
// for each structural class of field (periodic with nonzero average, local
// bump, constant at infinity).

#include <vector>

#include "kloop/fields.hpp"
#include "kloop/functional.hpp"
#include "kloop/loop.hpp"

namespace kloop::paths {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct PathFamily {
  std::vector<LoopCurve> nodes;  // gamma(s_j), s_j = j/(M-1)
  double lambda_context = 0.0;   // representative lambda (midpoint of the certified range)
  double endpoint_energy = 0.0;  // E_lambda(gamma(1)) at lambda_context

  int m() const { return static_cast<int>(nodes.size()); }
  double s(int j) const { return static_cast<double>(j) / (m() - 1); }
};

// Piecewise-linear boundary loop of [0,na] x [0,nb], traversed once at
// constant speed; orientation -1 reverses the parameter. Corners land on grid
// nodes whenever num_samples is divisible by 2(a+b)/gcd scaling, making the
// chordal length exactly 2n(a+b).
LoopCurve rectangle_loop(int n, double a, double b, int orientation, Eigen::Index num_samples);

// center + r e^{2 pi i j t}.
LoopCurve circle_loop(double r, const Vec2& center, int j, Eigen::Index num_samples);

LoopCurve constant_loop(const Vec2& z, Eigen::Index num_samples);

// Scaled-rectangle path s -> s * u_nbar for doubly periodic fields with
// nonzero cell average; nbar is the smallest winding count whose closed-form
// endpoint energy 2n(a+b) - n^2 lambda int K is strictly negative across the
// whole lambda range (the exact formula settles boundary cases that
// quadrature round-off would blur). ZeroAverage when (K2) fails.
PathFamily initial_path_periodic(const fields::CurvatureField& field, Interval lambda_range,
                                 Eigen::Index num_samples = 256, int m = 33);

// Disc construction through a point z* with lambda K(z*) > 0: constants from
// 0 to z*, then circles growing to a radius with negative energy.
// NoBumpFound when the radius search fails.
PathFamily initial_path_bump(const fields::CurvatureField& field, double lambda,
                             Eigen::Index num_samples = 256, int m = 33);

// Three-segment path for (near-)constant fields: constants to a far center,
// growing circles there, then a translation leg. Routes the growing circles
// over the favorable lobe when the field provides one ((K5)), which pushes
// the path maximum strictly below pi/(lambda K0).
PathFamily initial_path_k4(const fields::CurvatureField& field, Interval lambda_range,
                           Eigen::Index num_samples = 256, int m = 33);

struct PathMax {
  double s = 0.0;
  double e = 0.0;
  int node = 0;
  LoopCurve loop;
};

// Node of maximal energy; ties broken toward smaller s.
PathMax path_max(const PathFamily& path, const fields::CurvatureField& field, double lambda);

}  // namespace kloop::paths
