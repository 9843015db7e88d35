#pragma once

// Shared test utilities: deterministic random loops and the field catalog
// with the parameter choices the suite standardizes on.

#include <cmath>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "kloop/fields.hpp"
#include "kloop/loop.hpp"

namespace kloop::testing {

// Runs f and reports which kloop::Error it raised, if any. Other exception
// types propagate so the test framework can flag them.
template <typename F>
std::optional<ErrKind> thrown_kind(F&& f) {
  try {
    std::forward<F>(f)();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

// Smooth closed curve: a circle of the given radius plus four random Fourier
// harmonics with 1/m-decaying amplitudes. Deterministic per seed.
inline LoopCurve random_smooth_loop(Eigen::Index n, uint64_t seed, double radius = 2.0,
                                    double wiggle = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  double ax[4], bx[4], ay[4], by[4];
  for (int m = 0; m < 4; ++m) {
    ax[m] = g(rng);
    bx[m] = g(rng);
    ay[m] = g(rng);
    by[m] = g(rng);
  }
  Mat2X p(2, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double t = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
    double x = radius * std::cos(t);
    double y = radius * std::sin(t);
    for (int m = 1; m <= 4; ++m) {
      x += wiggle / m * (ax[m - 1] * std::cos(m * t) + bx[m - 1] * std::sin(m * t));
      y += wiggle / m * (ay[m - 1] * std::cos(m * t) + by[m - 1] * std::sin(m * t));
    }
    p.col(k) = Vec2(x, y);
  }
  return LoopCurve(std::move(p));
}

// One field of every catalog kind, standard test parameters.
inline std::vector<fields::CurvatureField> catalog_fields() {
  std::vector<fields::CurvatureField> out;
  out.push_back(fields::make_constant(1.0));
  out.push_back(fields::make_sinsin(1.0, 0.5, 1.0, 1.0));
  out.push_back(fields::make_sinsin_cos(1.0, 0.5, 0.25, 1.0, 1.0));
  out.push_back(fields::make_gauss_lobe(1.0, 0.75, 0.35, Vec2(0.0, 0.0)));
  return out;
}

}  // namespace kloop::testing
