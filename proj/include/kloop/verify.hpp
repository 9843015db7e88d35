#pragma once

// Independent validation: residual of the curvature ODE, pointwise curvature
// matching, the closed-form circle oracle for constant fields, and level
// bound checks.

#include <string>
#include <vector>

#include "kloop/mountainpass.hpp"

namespace kloop::verify {

struct CheckRecord {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool ok = false;
};

struct VerificationReport {
  double ode_residual_sup = 0.0;
  double curvature_mismatch_sup = 0.0;
  double iso_slack = 0.0;
  bool bounds_ok = true;  // stays true when no level estimate was supplied
  std::vector<CheckRecord> details;

  bool all_ok() const {
    for (const auto& c : details)
      if (!c.ok) return false;
    return bounds_ok;
  }
};

struct VerifyThresholds {
  double max_ode_residual = 1e-3;
  double max_curvature_mismatch = 5e-3;
};

// sup_k |D2u - lambda L(u) K(u) i D1u| / (1 + |D2u|) with spectral derivatives
// and the spectral form of L, so exact circle solutions score at round-off.
double ode_residual(const LoopCurve& u, const fields::CurvatureField& field, double lambda);

// sup_k |kappa(t_k) - lambda K(u(t_k))|.
double curvature_match(const LoopCurve& u, const fields::CurvatureField& field, double lambda);

struct CircleOracle {
  LoopCurve loop;
  double energy = 0.0;  // j pi / (lambda K0), closed form
  double radius = 0.0;
};

// Exact solution for K == K0: circle of radius 1/|lambda K0| with winding j,
// sign(j) = sign(lambda K0). WrongKind unless the field is constant;
// SignMismatch when the orientation fights the rotation sense of the ODE.
CircleOracle circle_oracle(const fields::CurvatureField& field, double lambda, int j,
                           Eigen::Index num_samples = 256);

// Level bounds: pi/(|lambda| sup|K|) - 2% <= c_estimate, and for fields with
// an asymptotic/constant value K0, c_estimate <= pi/(lambda K0) + 2%.
bool check_bounds(const mp::MountainPassEstimate& report, const fields::CurvatureField& field,
                  double lambda);

// Bundle of per-loop checks (ODE residual, curvature match, isoperimetric
// inequality, G cross-oracle) against the given thresholds.
VerificationReport verify_loop(const LoopCurve& u, const fields::CurvatureField& field,
                               double lambda, const VerifyThresholds& thr = {});

}  // namespace kloop::verify
