#pragma once

// The variational core: the area-type functional G, the energy E_lambda =
// L + lambda G, its H1 Riesz gradient, and the weighted isoperimetric check.

#include "kloop/fields.hpp"
#include "kloop/loop.hpp"

namespace kloop::fun {

struct EnergyReport {
  double length_energy = 0.0;
  double g_value = 0.0;
  double energy = 0.0;
  double lambda = 0.0;
  double iso_bound = 0.0;  // sup|K| * L^2 / (4 pi)
  bool iso_satisfied = false;
};

struct GradientField {
  Mat2X values;  // Riesz representative of E'_lambda(u), one plane vector per node
  double dual_norm = 0.0;
};

struct IsoCheck {
  bool ok = false;
  double slack = 0.0;  // sup|K| (int |u'|)^2 / (4 pi) - |G|
};

// Line-integral form: trapezoid value of int Q(u) . i u' dt with the spectral
// tangent. Exact on sampled circles; second order on polygonal loops.
double g_line(const LoopCurve& u, const fields::CurvatureField& field);

// Independent winding-number form: -sum Ind_u * K over a bounding grid
// (Kirsch-Laurain identity). Cross-oracle for g_line; grid-limited accuracy.
// Raises IndexAmbiguity when the exclusion band swamps the map even at the
// finest refinement (degenerate loops).
double g_winding(const LoopCurve& u, const fields::CurvatureField& field);

EnergyReport energy(const LoopCurve& u, const fields::CurvatureField& field, double lambda);

// Nodal covector of E'_lambda(u) (the pairing h -> (1/N) sum f_k . h_k),
// exposed for the solvers.
Mat2X energy_covector(const LoopCurve& u, const fields::CurvatureField& field, double lambda);

// Riesz representative of E'_lambda(u) in the discrete H1 inner product and
// its dual norm. Requires length_energy(u) >= kLengthGuard.
GradientField gradient(const LoopCurve& u, const fields::CurvatureField& field, double lambda);

// Weighted isoperimetric inequality |G(u)| <= sup|K| (int |u'| dt)^2 / (4 pi).
// Uses the spectral tangent-speed integral, under which sampled circles
// saturate the bound to round-off.
IsoCheck iso_check(const LoopCurve& u, const fields::CurvatureField& field);

}  // namespace kloop::fun
