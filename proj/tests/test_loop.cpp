#include <cmath>

#include "doctest.h"
#include "kloop/loop.hpp"
#include "kloop/paths.hpp"
#include "test_helpers.hpp"

using namespace kloop;

TEST_CASE("LoopCurve validates its samples") {
  Mat2X tiny = Mat2X::Zero(2, 8);
  CHECK_THROWS_AS(LoopCurve{tiny}, Error);

  Mat2X bad = Mat2X::Zero(2, 32);
  bad(0, 5) = std::nan("");
  CHECK_THROWS_AS(LoopCurve{bad}, Error);
}

TEST_CASE("length_energy on circles and rectangles") {
  const LoopCurve circle = paths::circle_loop(1.0, Vec2::Zero(), 1, 256);
  CHECK(std::abs(length_energy(circle) - kTwoPi) < 1e-3);

  // Corners of the unit square land on grid nodes (256 divisible by 4), so
  // the chordal sum is exact.
  const LoopCurve rect = paths::rectangle_loop(1, 1.0, 1.0, 1, 256);
  CHECK(length_energy(rect) == doctest::Approx(4.0).epsilon(1e-12));

  const double r = 1.5;
  const LoopCurve doubled = paths::circle_loop(r, Vec2::Zero(), 2, 256);
  CHECK(std::abs(length_energy(doubled) - 2.0 * kTwoPi * r) < 1e-2);
}

TEST_CASE("barycenter is the sample mean") {
  const LoopCurve circle = paths::circle_loop(1.0, Vec2(3.0, -1.0), 1, 256);
  CHECK((barycenter(circle) - Vec2(3.0, -1.0)).norm() < 1e-12);

  const LoopCurve constant = paths::constant_loop(Vec2::Zero(), 32);
  CHECK(barycenter(constant).norm() == 0.0);

  const LoopCurve rect = paths::rectangle_loop(1, 1.0, 1.0, 1, 256);
  CHECK((barycenter(rect) - Vec2(0.5, 0.5)).norm() < 1e-9);
}

TEST_CASE("arc_length never exceeds length_energy") {
  for (uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const LoopCurve u = testing::random_smooth_loop(128, seed);
    CHECK(arc_length(u) <= length_energy(u) + 1e-12);
  }
}

TEST_CASE("h1_norm satisfies the norm identity") {
  for (uint64_t seed : {11u, 12u, 13u}) {
    const LoopCurve u = testing::random_smooth_loop(128, seed);
    const double lhs = h1_norm(u) * h1_norm(u);
    const double rhs = std::pow(length_energy(u), 2) + barycenter(u).squaredNorm();
    CHECK(std::abs(lhs - rhs) <= 1e-12 * rhs);

    const LoopMetrics m = metrics(u);
    CHECK(m.length_energy == length_energy(u));
    CHECK(m.arc_length == arc_length(u));
    CHECK(m.h1_norm == doctest::Approx(h1_norm(u)).epsilon(1e-14));
  }
}

TEST_CASE("length_energy is translation invariant and 1-homogeneous") {
  const LoopCurve u = testing::random_smooth_loop(128, 21);
  const double base = length_energy(u);

  Mat2X shifted = u.pts();
  shifted.colwise() += Vec2(7.0, -3.0);
  CHECK(length_energy(LoopCurve(std::move(shifted))) == doctest::Approx(base).epsilon(1e-12));

  Mat2X scaled = -2.5 * u.pts();
  CHECK(length_energy(LoopCurve(std::move(scaled))) == doctest::Approx(2.5 * base).epsilon(1e-12));
}

TEST_CASE("curvature of circles has the right sign and magnitude") {
  const double r = 0.5;
  const LoopCurve ccw = paths::circle_loop(r, Vec2(1.0, 2.0), 1, 64);
  const LoopCurve cw = paths::circle_loop(r, Vec2::Zero(), -1, 64);
  // Sampled circles are band-limited, so the spectral derivative is exact.
  CHECK((curvature(ccw).array() - 1.0 / r).abs().maxCoeff() < 1e-10);
  CHECK((curvature(cw).array() + 1.0 / r).abs().maxCoeff() < 1e-10);

  const LoopCurve doubled = paths::circle_loop(2.0, Vec2::Zero(), 2, 64);
  CHECK((curvature(doubled).array() - 0.5).abs().maxCoeff() < 1e-10);
}

TEST_CASE("curvature of an ellipse matches the analytic formula") {
  const double a = 2.0, b = 1.0;
  auto make_ellipse = [&](Eigen::Index n) {
    Mat2X p(2, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double t = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
      p.col(k) = Vec2(a * std::cos(t), b * std::sin(t));
    }
    return LoopCurve(std::move(p));
  };
  auto sup_error = [&](Eigen::Index n) {
    const LoopCurve u = make_ellipse(n);
    const Eigen::VectorXd kappa = curvature(u);
    double worst = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double t = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
      const double denom = std::pow(a * a * std::sin(t) * std::sin(t) +
                                        b * b * std::cos(t) * std::cos(t),
                                    1.5);
      worst = std::max(worst, std::abs(kappa[k] - a * b / denom));
    }
    return worst;
  };
  // The parametrization carries a single Fourier mode, so the spectral
  // curvature is exact up to FFT roundoff at every resolution.
  CHECK(sup_error(64) < 1e-10);
  CHECK(sup_error(512) < 1e-9);

  // The chordal length energy, in contrast, is second order: halving the
  // resolution quadruples the inscribed-polygon deficit of a circle.
  auto length_deficit = [](Eigen::Index n) {
    return kTwoPi - length_energy(paths::circle_loop(1.0, Vec2::Zero(), 1, n));
  };
  const double ratio = length_deficit(32) / length_deficit(64);
  CHECK(ratio > 3.9);
  CHECK(ratio < 4.1);
}

TEST_CASE("curvature refuses non-regular loops") {
  const LoopCurve constant = paths::constant_loop(Vec2(1.0, 1.0), 32);
  CHECK_THROWS_AS(curvature(constant), Error);
}

TEST_CASE("normalize_to_cell translates the barycenter into the half-open cell") {
  const LoopCurve off = paths::circle_loop(0.25, Vec2(2.3, -0.7), 1, 64);
  const LoopCurve in = normalize_to_cell(off, 1.0, 1.0);
  CHECK((barycenter(in) - Vec2(0.3, 0.3)).norm() < 1e-12);
  CHECK(length_energy(in) == length_energy(off));

  // Already inside: the identity.
  const LoopCurve again = normalize_to_cell(in, 1.0, 1.0);
  CHECK((again.pts() - in.pts()).norm() == 0.0);

  // Exactly on the boundary maps to 0 (half-open convention). A constant
  // loop keeps the barycenter arithmetic exact.
  const LoopCurve edge = paths::constant_loop(Vec2(5.0, 0.25), 64);
  const LoopCurve mapped = normalize_to_cell(edge, 1.0, 1.0);
  CHECK(barycenter(mapped).x() == 0.0);
  CHECK(barycenter(mapped).y() == 0.25);

  CHECK_THROWS_AS(normalize_to_cell(in, -1.0, 1.0), Error);
}

TEST_CASE("reparametrize_uniform fixes non-uniform parametrizations") {
  // A uniform circle is a fixed point.
  const LoopCurve circle = paths::circle_loop(1.0, Vec2::Zero(), 1, 256);
  CHECK((reparametrize_uniform(circle).pts() - circle.pts()).norm() == 0.0);

  // Slanted parametrization of the unit circle: s(t) = t + (0.2/2pi) sin 2pi t
  // has int |u'|^2 = (2pi)^2 (1 + 0.02), so the input length energy exceeds
  // 2pi while the uniform resampling recovers it.
  const Eigen::Index n = 256;
  Mat2X p(2, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(n);
    const double s = t + (0.2 / kTwoPi) * std::sin(kTwoPi * t);
    p.col(k) = Vec2(std::cos(kTwoPi * s), std::sin(kTwoPi * s));
  }
  const LoopCurve slanted(std::move(p));
  CHECK(length_energy(slanted) > kTwoPi + 1e-2);
  CHECK(length_energy(slanted) == doctest::Approx(kTwoPi * std::sqrt(1.02)).epsilon(1e-4));
  const LoopCurve fixed = reparametrize_uniform(slanted);
  CHECK(std::abs(length_energy(fixed) - kTwoPi) < 1e-3);

  // Clustered nodes on a polygon: output arc gaps uniform within 1%.
  const LoopCurve fine_rect = paths::rectangle_loop(1, 1.0, 1.0, 1, 4096);
  const Eigen::Index m = 128;
  Mat2X q(2, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(m);
    const double warped = t * t * (3.0 - 2.0 * t);
    q.col(k) = fine_rect.pts().col(static_cast<Eigen::Index>(warped * 4096) % 4096);
  }
  const LoopCurve even = reparametrize_uniform(LoopCurve(std::move(q)));
  const double mean_gap = arc_length(even) / static_cast<double>(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double gap = (even.pts().col((k + 1) % m) - even.pts().col(k)).norm();
    CHECK(std::abs(gap - mean_gap) <= 0.01 * mean_gap);
  }

  CHECK_THROWS_AS(reparametrize_uniform(paths::constant_loop(Vec2::Zero(), 32)), Error);
}
