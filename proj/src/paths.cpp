#include "kloop/paths.hpp"

#include <cmath>

namespace kloop::paths {

namespace {

// Energy at both ends of a lambda interval; E is affine in lambda for fixed
// loop, so negativity at both ends certifies the whole range.
bool negative_on_range(const LoopCurve& u, const fields::CurvatureField& field, Interval range) {
  return fun::energy(u, field, range.lo).energy < 0.0 &&
         fun::energy(u, field, range.hi).energy < 0.0;
}

void require_signed_range(Interval range) {
  if (range.lo > range.hi || range.lo == 0.0 || range.hi == 0.0 || range.lo * range.hi < 0.0) {
    throw Error(ErrKind::BadConfig, "lambda range must be ordered and exclude 0");
  }
}

LoopCurve scale_loop(const LoopCurve& u, double s) {
  return LoopCurve(Mat2X(s * u.pts()));
}

// K1 mass over the disc of radius r about z, via the primitive Q1 and the
// line-integral identity int_D K1 = -G1(boundary circle).
double disc_k1_integral(const fields::CurvatureField& field, const Vec2& z, double r) {
  const LoopCurve circle = circle_loop(r, z, 1, 128);
  const Mat2X tangent = fourier::spectral_derivative(circle.pts(), 1);
  double acc = 0.0;
  for (Eigen::Index k = 0; k < circle.n(); ++k) {
    acc += fields::eval_Q1(field, circle.at(k)).dot(rot90(tangent.col(k)));
  }
  return -acc / static_cast<double>(circle.n());
}

}  // namespace

LoopCurve rectangle_loop(int n, double a, double b, int orientation, Eigen::Index num_samples) {
  if (n < 1 || a <= 0.0 || b <= 0.0) throw Error(ErrKind::BadConfig, "rectangle needs n>=1, a,b>0");
  if (orientation != 1 && orientation != -1) {
    throw Error(ErrKind::BadConfig, "orientation must be +1 or -1");
  }
  const double perimeter = 2.0 * n * (a + b);
  const double fa = a / (2.0 * (a + b));  // parameter fraction of one horizontal sweep
  Mat2X p(2, num_samples);
  for (Eigen::Index k = 0; k < num_samples; ++k) {
    Eigen::Index idx = (orientation == 1) ? k : (num_samples - k) % num_samples;
    const double t = static_cast<double>(idx) / static_cast<double>(num_samples);
    if (t <= fa) {
      p.col(k) = Vec2(perimeter * t, 0.0);
    } else if (t <= 0.5) {
      p.col(k) = Vec2(n * a, perimeter * t - n * a);
    } else if (t <= 0.5 + fa) {
      p.col(k) = Vec2((2.0 * a + b) * n - perimeter * t, n * b);
    } else {
      p.col(k) = Vec2(0.0, perimeter * (1.0 - t));
    }
  }
  return LoopCurve(std::move(p));
}

LoopCurve circle_loop(double r, const Vec2& center, int j, Eigen::Index num_samples) {
  if (r <= 0.0) throw Error(ErrKind::BadConfig, "circle radius must be positive");
  if (j == 0) throw Error(ErrKind::BadConfig, "circle multiplicity must be nonzero");
  Mat2X p(2, num_samples);
  for (Eigen::Index k = 0; k < num_samples; ++k) {
    const double phi = kTwoPi * j * static_cast<double>(k) / static_cast<double>(num_samples);
    p.col(k) = center + r * Vec2(std::cos(phi), std::sin(phi));
  }
  return LoopCurve(std::move(p));
}

LoopCurve constant_loop(const Vec2& z, Eigen::Index num_samples) {
  Mat2X p(2, num_samples);
  p.colwise() = z;
  return LoopCurve(std::move(p));
}

PathFamily initial_path_periodic(const fields::CurvatureField& field, Interval lambda_range,
                                 Eigen::Index num_samples, int m) {
  if (field.kind != fields::FieldKind::DoublyPeriodic) {
    throw Error(ErrKind::WrongKind, "periodic path needs a doubly periodic field");
  }
  require_signed_range(lambda_range);
  if (m < 16) throw Error(ErrKind::BadConfig, "path needs at least 16 nodes");

  const double average = fields::cell_average(field);
  if (std::abs(average) <= 1e-12 * std::max(1.0, field.sup_norm)) {
    throw Error(ErrKind::ZeroAverage,
                "cell average vanishes; use the bump construction instead");
  }
  const double lambda_mid = 0.5 * (lambda_range.lo + lambda_range.hi);
  const int orientation = (lambda_mid * average > 0.0) ? 1 : -1;
  const double alpha = std::min(std::abs(lambda_range.lo), std::abs(lambda_range.hi));
  const double min_length = kTwoPi / (alpha * field.sup_norm);
  const double cell_mass = std::abs(average) * field.a * field.b;  // |int K| over one cell

  // Smallest winding count whose closed-form energy 2n(a+b) - n^2 alpha |int K|
  // is strictly negative at the worst lambda of the range. The exact formula
  // decides the boundary cases that quadrature round-off would blur.
  for (int n = 1; n <= 512; ++n) {
    const double perimeter = 2.0 * n * (field.a + field.b);
    if (perimeter <= min_length) continue;
    if (perimeter - n * n * alpha * cell_mass >= 0.0) continue;
    const LoopCurve candidate = rectangle_loop(n, field.a, field.b, orientation, num_samples);
    if (!negative_on_range(candidate, field, lambda_range)) continue;

    PathFamily path;
    path.nodes.reserve(m);
    for (int j = 0; j < m; ++j) {
      path.nodes.push_back(scale_loop(candidate, static_cast<double>(j) / (m - 1)));
    }
    path.lambda_context = lambda_mid;
    path.endpoint_energy = fun::energy(candidate, field, lambda_mid).energy;
    return path;
  }
  throw Error(ErrKind::NoNegativeEndpoint, "no rectangle winding count certifies the endpoint");
}

PathFamily initial_path_bump(const fields::CurvatureField& field, double lambda,
                             Eigen::Index num_samples, int m) {
  if (lambda == 0.0) throw Error(ErrKind::BadConfig, "lambda must be nonzero");
  if (m < 16) throw Error(ErrKind::BadConfig, "path needs at least 16 nodes");

  // The bump point: catalog hint when available, otherwise a probe grid over
  // the natural box of the field.
  Vec2 zstar = Vec2::Zero();
  double best = -std::numeric_limits<double>::infinity();
  if (field.interest_point) {
    zstar = *field.interest_point;
    best = lambda * field.k(zstar);
  }
  if (best <= 0.0) {
    const bool periodic = field.kind == fields::FieldKind::DoublyPeriodic;
    const double box_x = periodic ? field.a : 8.0 * field.decay_scale;
    const double box_y = periodic ? field.b : 8.0 * field.decay_scale;
    for (int i = 0; i < 64; ++i) {
      for (int j = 0; j < 64; ++j) {
        const Vec2 z(box_x * (i + 0.5) / 64.0, box_y * (j + 0.5) / 64.0);
        const double v = lambda * field.k(z);
        if (v > best) {
          best = v;
          zstar = z;
        }
      }
    }
  }
  if (best <= 0.0) throw Error(ErrKind::NoBumpFound, "no point with lambda*K > 0 found");

  // lambda K(z*) > 0 here, so the counterclockwise disc lowers the energy.
  const int j_orient = 1;
  const double r_quad = 4.0 / (lambda * field.k(zstar));
  double radius = -1.0;
  for (const double factor : {1.05, 1.5, 2.0, 3.0, 5.0}) {
    const double r = r_quad * factor;
    const LoopCurve endpoint = circle_loop(r, zstar, j_orient, num_samples);
    if (fun::energy(endpoint, field, lambda).energy < 0.0) {
      radius = r;
      break;
    }
  }
  if (radius <= 0.0) {
    throw Error(ErrKind::NoBumpFound, "no disc radius with negative endpoint energy");
  }

  PathFamily path;
  path.nodes.reserve(m);
  const int half = (m - 1) / 2;
  for (int j = 0; j <= half; ++j) {
    path.nodes.push_back(constant_loop((static_cast<double>(j) / half) * zstar, num_samples));
  }
  for (int j = half + 1; j < m; ++j) {
    const double sigma = static_cast<double>(j - half) / (m - 1 - half);
    path.nodes.push_back(circle_loop(sigma * radius, zstar, j_orient, num_samples));
  }
  path.lambda_context = lambda;
  path.endpoint_energy = fun::energy(path.nodes.back(), field, lambda).energy;
  return path;
}

PathFamily initial_path_k4(const fields::CurvatureField& field, Interval lambda_range,
                           Eigen::Index num_samples, int m) {
  if (field.kind != fields::FieldKind::ConstantAtInfinity &&
      field.kind != fields::FieldKind::Constant) {
    throw Error(ErrKind::WrongKind, "k4 path needs a (near-)constant field");
  }
  require_signed_range(lambda_range);
  if (m < 16) throw Error(ErrKind::BadConfig, "path needs at least 16 nodes");

  const double k0 = field.k0;
  const double lambda_mid = 0.5 * (lambda_range.lo + lambda_range.hi);
  if (lambda_mid * k0 == 0.0) throw Error(ErrKind::BadConfig, "k0 must be nonzero");
  const int j_orient = (lambda_mid * k0 > 0.0) ? 1 : -1;
  const double alpha = std::min(std::abs(lambda_range.lo), std::abs(lambda_range.hi));
  const double beta = std::max(std::abs(lambda_range.lo), std::abs(lambda_range.hi));

  // Radius with a factor-2 margin in the endpoint quadratic: the next-node
  // maximum of the growing-circle leg sits exactly at sigma = 1/4 of the leg.
  const double r0 = 4.0 / (alpha * std::abs(k0));

  // Doubling search for a radius R beyond which the decaying part cannot spoil
  // the negative endpoint: holds trivially for exactly constant fields.
  double big_r = r0;
  if (field.kind == fields::FieldKind::ConstantAtInfinity) {
    const double margin = 2.0 * kPi * r0;  // alpha pi r0^2 |k0| - 2 pi r0 at the chosen r0
    bool certified = false;
    while (big_r <= 1e6 * std::max(1.0, field.decay_scale)) {
      certified = true;
      for (int probe = 0; probe < 16 && certified; ++probe) {
        const double phi = kTwoPi * probe / 16.0;
        for (const double rad : {big_r, big_r + r0}) {
          const Vec2 z = rad * Vec2(std::cos(phi), std::sin(phi));
          if (beta * std::abs(disc_k1_integral(field, z, r0)) >= margin) {
            certified = false;
            break;
          }
        }
      }
      if (certified) break;
      big_r *= 2.0;
    }
    if (!certified) {
      throw Error(ErrKind::NoNegativeEndpoint, "decay radius search failed for the k4 path");
    }
  }

  // Route the growing circles over the favorable lobe when one exists; else
  // keep them outside the certified radius.
  Vec2 z_route = Vec2(big_r + 2.0 * r0, 0.0);
  if (field.favorable_lobe && field.interest_point) z_route = *field.interest_point;
  Vec2 dir = z_route.norm() > 1e-12 ? (z_route / z_route.norm()).eval() : Vec2(1.0, 0.0);
  const Vec2 z_end = dir * std::max(big_r + r0, z_route.norm());

  PathFamily path;
  path.nodes.reserve(m);
  const int q = (m - 1) / 4;             // nodes per outer leg
  const int mid_steps = (m - 1) - 2 * q;  // steps in the growing-circle leg
  for (int i = 0; i <= q; ++i) {
    path.nodes.push_back(constant_loop((static_cast<double>(i) / q) * z_route, num_samples));
  }
  for (int i = 1; i <= mid_steps; ++i) {
    const double sigma = static_cast<double>(i) / mid_steps;
    path.nodes.push_back(circle_loop(sigma * r0, z_route, j_orient, num_samples));
  }
  for (int i = 1; i <= q; ++i) {
    const double tau = static_cast<double>(i) / q;
    path.nodes.push_back(circle_loop(r0, z_route + tau * (z_end - z_route), j_orient, num_samples));
  }

  // The translation leg and the endpoint must stay strictly negative across
  // the certified range; E is affine in lambda, so the two ends suffice.
  for (int i = m - 1 - q; i < m; ++i) {
    if (!negative_on_range(path.nodes[i], field, lambda_range)) {
      throw Error(ErrKind::NoNegativeEndpoint, "translation leg left the negative-energy region");
    }
  }
  path.lambda_context = lambda_mid;
  path.endpoint_energy = fun::energy(path.nodes.back(), field, lambda_mid).energy;
  return path;
}

PathMax path_max(const PathFamily& path, const fields::CurvatureField& field, double lambda) {
  if (path.nodes.empty()) throw Error(ErrKind::BadConfig, "empty path");
  int best = 0;
  double best_e = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < path.m(); ++j) {
    const double e = fun::energy(path.nodes[j], field, lambda).energy;
    if (e > best_e) {
      best_e = e;
      best = j;
    }
  }
  return {path.s(best), best_e, best, path.nodes[best]};
}

}  // namespace kloop::paths
