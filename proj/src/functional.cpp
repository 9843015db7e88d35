#include "kloop/functional.hpp"

#include "kloop/winding.hpp"

namespace kloop::fun {

double g_line(const LoopCurve& u, const fields::CurvatureField& field) {
  const Mat2X tangent = fourier::spectral_derivative(u.pts(), 1);
  double acc = 0.0;
  for (Eigen::Index k = 0; k < u.n(); ++k) {
    acc += fields::eval_Q(field, u.at(k)).dot(rot90(tangent.col(k)));
  }
  return acc / static_cast<double>(u.n());
}

double g_winding(const LoopCurve& u, const fields::CurvatureField& field) {
  const LoopCurve generic = winding::perturb_generic(u, 20177);
  const auto weight = [&field](const Vec2& z) { return fields::eval_K(field, z); };

  auto evaluate = [&](int resolution) {
    const winding::IndexMap map = winding::index_map(generic, resolution);
    const auto result = winding::index_weighted_integral(map, weight, field.sup_norm);
    const double grid_cells = static_cast<double>(map.nx) * map.ny;
    const double ambiguous_fraction = result.ambiguous_count / grid_cells;
    return std::make_pair(result, ambiguous_fraction);
  };

  auto [result, fraction] = evaluate(512);
  if (result.ambiguous_bound > 2.5e-3 * (1.0 + std::abs(result.value))) {
    std::tie(result, fraction) = evaluate(1024);
  }
  if (fraction > 0.5) {
    throw Error(ErrKind::IndexAmbiguity,
                "exclusion band covers most of the index map at finest refinement");
  }
  return result.value;
}

EnergyReport energy(const LoopCurve& u, const fields::CurvatureField& field, double lambda) {
  EnergyReport rep;
  rep.lambda = lambda;
  rep.length_energy = length_energy(u);
  rep.g_value = g_line(u, field);
  rep.energy = rep.length_energy + lambda * rep.g_value;
  rep.iso_bound = field.sup_norm * rep.length_energy * rep.length_energy / (4.0 * kPi);
  rep.iso_satisfied = iso_check(u, field).ok;
  return rep;
}

Mat2X energy_covector(const LoopCurve& u, const fields::CurvatureField& field, double lambda) {
  const Mat2X& p = u.pts();
  const Eigen::Index n = p.cols();
  const double len = length_energy(u);
  if (len < kLengthGuard) {
    throw Error(ErrKind::NearConstantLoop, "energy derivative undefined near constant loops");
  }
  const Mat2X tangent = fourier::spectral_derivative(p, 1);
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  Mat2X f(2, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Vec2 lap = 2.0 * p.col(k) - p.col((k + 1) % n) - p.col((k + n - 1) % n);
    f.col(k) = (n2 / len) * lap + lambda * fields::eval_K(field, p.col(k)) * rot90(tangent.col(k));
  }
  return f;
}

GradientField gradient(const LoopCurve& u, const fields::CurvatureField& field, double lambda) {
  const auto riesz = fourier::riesz_solve(energy_covector(u, field, lambda));
  return {riesz.rep, riesz.dual_norm};
}

IsoCheck iso_check(const LoopCurve& u, const fields::CurvatureField& field) {
  const double speed = fourier::speed_integral(u.pts());
  const double bound = field.sup_norm * speed * speed / (4.0 * kPi);
  const double g = g_line(u, field);
  IsoCheck out;
  out.slack = bound - std::abs(g);
  out.ok = out.slack >= -1e-6;
  return out;
}

}  // namespace kloop::fun
