#include "kloop/verify.hpp"

#include <cmath>
#include <limits>

#include "kloop/fourier.hpp"

namespace kloop::verify {

double ode_residual(const LoopCurve& u, const fields::CurvatureField& field, double lambda) {
  const Mat2X d1 = fourier::spectral_derivative(u.pts(), 1);
  const Mat2X d2 = fourier::spectral_derivative(u.pts(), 2);
  const double speed_floor = kSpeedGuard * std::max(1.0, arc_length(u));
  // spectral form of L, so the exact circle solution scores at round-off
  const double len = fourier::length_energy(u.pts());

  double worst = 0.0;
  for (Eigen::Index k = 0; k < u.n(); ++k) {
    if (d1.col(k).norm() < speed_floor)
      throw Error(ErrKind::DegenerateSpeed, "ODE residual needs a regular loop");
    const Vec2 defect =
        d2.col(k) - lambda * len * fields::eval_K(field, u.at(k)) * rot90(Vec2(d1.col(k)));
    worst = std::max(worst, defect.norm() / (1.0 + d2.col(k).norm()));
  }
  return worst;
}

double curvature_match(const LoopCurve& u, const fields::CurvatureField& field, double lambda) {
  const Eigen::VectorXd kappa = curvature(u);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < u.n(); ++k) {
    worst = std::max(worst, std::abs(kappa(k) - lambda * fields::eval_K(field, u.at(k))));
  }
  return worst;
}

CircleOracle circle_oracle(const fields::CurvatureField& field, double lambda, int j,
                           Eigen::Index num_samples) {
  if (field.kind != fields::FieldKind::Constant)
    throw Error(ErrKind::WrongKind, "circle oracle requires a constant field");
  if (lambda == 0.0) throw Error(ErrKind::BadConfig, "lambda must be nonzero");
  const double product = lambda * field.k0;
  if (j == 0 || (j > 0) != (product > 0))
    throw Error(ErrKind::SignMismatch, "winding sign must match sign(lambda K0)");

  const double radius = 1.0 / std::abs(product);
  return CircleOracle{paths::circle_loop(radius, Vec2::Zero(), j, num_samples),
                      j * kPi / product, radius};
}

bool check_bounds(const mp::MountainPassEstimate& report, const fields::CurvatureField& field,
                  double lambda) {
  const double lower = kPi / (std::abs(lambda) * field.sup_norm);
  if (!(report.c_estimate >= 0.98 * lower)) return false;
  if (field.kind == fields::FieldKind::Constant ||
      field.kind == fields::FieldKind::ConstantAtInfinity) {
    const double upper = kPi / (std::abs(lambda) * std::abs(field.k0));
    if (!(report.c_estimate <= 1.02 * upper)) return false;
  }
  return true;
}

VerificationReport verify_loop(const LoopCurve& u, const fields::CurvatureField& field,
                               double lambda, const VerifyThresholds& thr) {
  VerificationReport rep;
  rep.ode_residual_sup = ode_residual(u, field, lambda);
  rep.curvature_mismatch_sup = curvature_match(u, field, lambda);
  const fun::IsoCheck iso = fun::iso_check(u, field);
  rep.iso_slack = iso.slack;

  rep.details.push_back({"ode_residual", rep.ode_residual_sup, thr.max_ode_residual,
                         rep.ode_residual_sup <= thr.max_ode_residual});
  rep.details.push_back({"curvature_match", rep.curvature_mismatch_sup,
                         thr.max_curvature_mismatch,
                         rep.curvature_mismatch_sup <= thr.max_curvature_mismatch});
  rep.details.push_back({"iso_inequality", iso.slack, 0.0, iso.ok});

  const double gl = fun::g_line(u, field);
  double cross = std::numeric_limits<double>::infinity();
  try {
    cross = std::abs(fun::g_winding(u, field) - gl);
  } catch (const Error&) {
    // ambiguity at the finest grid: leave the check failed
  }
  const double cross_tol = 5e-3 * (1.0 + std::abs(gl));
  rep.details.push_back({"g_cross_oracle", cross, cross_tol, cross <= cross_tol});
  return rep;
}

}  // namespace kloop::verify
