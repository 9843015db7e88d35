#include <cmath>

#include "doctest.h"
#include "kloop/verify.hpp"
#include "test_helpers.hpp"

using namespace kloop;

TEST_CASE("ode_residual vanishes exactly on critical circles") {
  const auto f = fields::make_constant(0.5);
  const double lambda = 2.0;  // critical radius 1/(lambda K0) = 1
  const LoopCurve crit = paths::circle_loop(1.0, Vec2(0.3, -0.1), 1, 256);
  CHECK(verify::ode_residual(crit, f, lambda) < 1e-6);

  // Twice the critical radius is far from solving the ODE.
  const LoopCurve off = paths::circle_loop(2.0, Vec2::Zero(), 1, 256);
  CHECK(verify::ode_residual(off, f, lambda) > 0.3);

  CHECK(testing::thrown_kind([&] {
          verify::ode_residual(paths::constant_loop(Vec2::Zero(), 64), f, lambda);
        }) == ErrKind::DegenerateSpeed);
}

TEST_CASE("curvature_match compares kappa against lambda K pointwise") {
  const auto f = fields::make_constant(1.0);
  const LoopCurve unit = paths::circle_loop(1.0, Vec2::Zero(), 1, 256);
  CHECK(verify::curvature_match(unit, f, 1.0) < 1e-6);
  // kappa == 1 against lambda K == 2: the mismatch is exactly 1.
  CHECK(verify::curvature_match(unit, f, 2.0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("the two residuals agree on what is critical") {
  const auto f = fields::make_constant(1.0);
  const verify::VerifyThresholds thr;
  for (double r : {1.0, 1.3, 2.0}) {
    const LoopCurve u = paths::circle_loop(r, Vec2::Zero(), 1, 256);
    const bool ode_ok = verify::ode_residual(u, f, 1.0) <= thr.max_ode_residual;
    const bool kappa_ok = verify::curvature_match(u, f, 1.0) <= thr.max_curvature_mismatch;
    CHECK(ode_ok == kappa_ok);
  }
}

TEST_CASE("circle_oracle produces exact solutions") {
  const auto f = fields::make_constant(1.0);
  const verify::CircleOracle one = verify::circle_oracle(f, 1.0, 1);
  CHECK(one.radius == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(one.energy == doctest::Approx(kPi).epsilon(1e-12));
  CHECK(verify::ode_residual(one.loop, f, 1.0) < 1e-6);
  CHECK(fun::gradient(one.loop, f, 1.0).dual_norm < 1e-4);

  const verify::CircleOracle half = verify::circle_oracle(f, 2.0, 1);
  CHECK(half.radius == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(half.energy == doctest::Approx(kPi / 2.0).epsilon(1e-12));
  CHECK(verify::ode_residual(half.loop, f, 2.0) < 1e-6);

  const verify::CircleOracle doubled = verify::circle_oracle(f, 1.0, 2);
  CHECK(doubled.energy == doctest::Approx(2.0 * kPi).epsilon(1e-12));

  CHECK(testing::thrown_kind([&] { verify::circle_oracle(f, 1.0, -1); }) ==
        ErrKind::SignMismatch);
  CHECK(testing::thrown_kind([] {
          verify::circle_oracle(fields::make_sinsin(1.0, 0.5, 1.0, 1.0), 1.0, 1);
        }) == ErrKind::WrongKind);
}

TEST_CASE("check_bounds accepts exactly the certified window") {
  const auto f = fields::make_constant(1.0);
  mp::MountainPassEstimate est{0.0, paths::circle_loop(1.0, Vec2::Zero(), 1, 64),
                               0.5, 0.0, 0, true, {}, {}};

  est.c_estimate = kPi;
  CHECK(verify::check_bounds(est, f, 1.0));
  est.c_estimate = 0.0;
  CHECK(!verify::check_bounds(est, f, 1.0));
  est.c_estimate = 3.30;  // above pi * 1.02
  CHECK(!verify::check_bounds(est, f, 1.0));

  const auto lobe = fields::make_gauss_lobe(1.0, 0.75, 0.35, Vec2::Zero());
  est.c_estimate = 2.853;
  CHECK(verify::check_bounds(est, lobe, 1.0));
  est.c_estimate = kPi / lobe.sup_norm * 0.9;  // below the floor
  CHECK(!verify::check_bounds(est, lobe, 1.0));
}

TEST_CASE("verify_loop bundles the checks into one report") {
  const auto f = fields::make_constant(1.0);

  const mp::CriticalPointResult crit =
      mp::refine_critical(paths::circle_loop(1.3, Vec2::Zero(), 1, 256), f, 1.0);
  REQUIRE(crit.converged);
  const verify::VerificationReport good = verify::verify_loop(crit.loop, f, 1.0);
  CHECK(good.all_ok());
  CHECK(good.ode_residual_sup >= 0.0);
  CHECK(good.curvature_mismatch_sup >= 0.0);
  CHECK(std::isfinite(good.iso_slack));
  CHECK(!good.details.empty());

  const verify::VerificationReport bad =
      verify::verify_loop(paths::circle_loop(2.0, Vec2::Zero(), 1, 256), f, 1.0);
  CHECK(!bad.all_ok());
  CHECK(bad.bounds_ok);  // no level estimate supplied

  // Custom thresholds flip the verdict for the same loop.
  verify::VerifyThresholds loose;
  loose.max_ode_residual = 10.0;
  loose.max_curvature_mismatch = 10.0;
  CHECK(verify::verify_loop(paths::circle_loop(2.0, Vec2::Zero(), 1, 256), f, 1.0, loose)
            .all_ok());
}
