#pragma once

// Prescribed curvature functions K with structural metadata and the primitive
// vector field Q(x,y) = (1/2)(int_0^x K(s,y) ds, int_0^y K(x,s) ds), which
// satisfies div Q = K and feeds the line-integral form of G.
//
// Catalog fields carry closed-form primitives; the adaptive quadrature path
// remains the generic contract and is cross-checked against them in tests.

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "kloop/common.hpp"

namespace kloop::fields {

enum class FieldKind { Constant, DoublyPeriodic, ConstantAtInfinity };

std::string kind_name(FieldKind kind);

struct CurvatureField {
  FieldKind kind = FieldKind::Constant;
  std::string name;
  std::function<double(const Vec2&)> k;  // pointwise evaluator

  // Closed-form primitives when the catalog provides them; empty functions
  // route through adaptive quadrature.
  std::function<Vec2(const Vec2&)> q_closed;
  std::function<Vec2(const Vec2&)> q1_closed;

  double a = 0.0;  // periods, kind DoublyPeriodic
  double b = 0.0;
  double k0 = 0.0;  // constant / asymptotic value, kinds Constant and ConstantAtInfinity
  double sup_norm = 0.0;

  // Catalog hints for path construction: a point where K is locally large
  // (bump/lobe center) and the decay scale used to validate (K4).
  std::optional<Vec2> interest_point;
  double decay_scale = 1.0;
  bool favorable_lobe = false;  // (K5): K0 * K1 > 0 on the decaying part
};

// Catalog constructors. Each validates its structural assumptions on probe
// grids (periodicity for (K1), decay for (K4), sup-norm consistency) and
// throws BadConfig on violation.
CurvatureField make_constant(double c);
CurvatureField make_sinsin(double c0, double c1, double a, double b);
CurvatureField make_sinsin_cos(double c0, double c1, double c2, double a, double b);
CurvatureField make_gauss_lobe(double k0, double amp, double sigma, const Vec2& z1);

// Factory from a config-style (name, params) pair.
CurvatureField make_field(const std::string& name, const std::map<std::string, double>& params);

double eval_K(const CurvatureField& field, const Vec2& z);

// Primitive of K anchored at the origin; QuadratureFailure if the adaptive
// rule cannot reach tolerance within its evaluation budget.
Vec2 eval_Q(const CurvatureField& field, const Vec2& z);

// Same construction applied to the decaying part K1 = K - K0.
// Requires kind ConstantAtInfinity.
Vec2 eval_Q1(const CurvatureField& field, const Vec2& z);

// Mean of K over one period cell, to absolute tolerance 1e-8.
// Requires kind DoublyPeriodic.
double cell_average(const CurvatureField& field);

// Adaptive Simpson quadrature with an absolute tolerance and a hard budget of
// integrand evaluations; exposed so tests can pit it against closed forms.
double adaptive_simpson(const std::function<double(double)>& f, double lo, double hi, double tol,
                        int max_evals);

inline constexpr double kQuadTol = 1e-9;
inline constexpr int kQuadBudget = 10000;

}  // namespace kloop::fields
