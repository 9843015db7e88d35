#include <cmath>

#include "doctest.h"
#include "kloop/functional.hpp"
#include "kloop/paths.hpp"
#include "test_helpers.hpp"

using namespace kloop;

TEST_CASE("rectangle_loop traverses the scaled cell boundary exactly") {
  // Corners on nodes: the chordal length is the exact perimeter.
  const LoopCurve r1 = paths::rectangle_loop(1, 1.0, 1.0, 1, 256);
  CHECK(std::abs(length_energy(r1) - 4.0) < 1e-9);

  const LoopCurve r2 = paths::rectangle_loop(2, 1.0, 2.0, 1, 384);
  CHECK(std::abs(length_energy(r2) - 12.0) < 1e-9);

  // Orientation -1 is the exact parameter reversal.
  const LoopCurve fwd = paths::rectangle_loop(1, 1.0, 1.0, 1, 256);
  const LoopCurve bwd = paths::rectangle_loop(1, 1.0, 1.0, -1, 256);
  for (Eigen::Index k = 0; k < fwd.n(); ++k) {
    CHECK((bwd.pts().col(k) - fwd.pts().col((fwd.n() - k) % fwd.n())).norm() == 0.0);
  }

  const auto k1 = fields::make_constant(1.0);
  CHECK(fun::g_line(bwd, k1) == doctest::Approx(-fun::g_line(fwd, k1)).epsilon(1e-9));

  CHECK(testing::thrown_kind([] { paths::rectangle_loop(0, 1.0, 1.0, 1, 256); }) ==
        ErrKind::BadConfig);
  CHECK(testing::thrown_kind([] { paths::rectangle_loop(1, -1.0, 1.0, 1, 256); }) ==
        ErrKind::BadConfig);
  CHECK(testing::thrown_kind([] { paths::rectangle_loop(1, 1.0, 1.0, 2, 256); }) ==
        ErrKind::BadConfig);
}

TEST_CASE("circle_loop radius, multiplicity, and criticality") {
  CHECK(std::abs(length_energy(paths::circle_loop(1.0, Vec2(1.0, 2.0), 1, 4096)) - kTwoPi) <
        1e-6);

  const Eigen::VectorXd kappa = curvature(paths::circle_loop(1.0, Vec2::Zero(), -1, 256));
  CHECK((kappa.array() + 1.0).abs().maxCoeff() < 1e-10);

  // r = 1/(lambda K0) is the critical radius of the energy.
  const double lambda = 1.25, k0 = 0.8;
  const LoopCurve crit = paths::circle_loop(1.0 / (lambda * k0), Vec2::Zero(), 1, 256);
  CHECK(fun::gradient(crit, fields::make_constant(k0), lambda).dual_norm < 1e-4);

  CHECK(testing::thrown_kind([] { paths::circle_loop(-1.0, Vec2::Zero(), 1, 256); }) ==
        ErrKind::BadConfig);
  CHECK(testing::thrown_kind([] { paths::circle_loop(1.0, Vec2::Zero(), 0, 256); }) ==
        ErrKind::BadConfig);
}

TEST_CASE("initial_path_periodic certifies the scaled-rectangle path") {
  // Constant K == 1 presented as a doubly periodic field. Over the whole
  // range [0.8, 1.2] the first strictly certified winding count is 6.
  const auto f = fields::make_sinsin(1.0, 0.0, 1.0, 1.0);
  const paths::Interval range{0.8, 1.2};
  const paths::PathFamily path = paths::initial_path_periodic(f, range);
  REQUIRE(path.m() == 33);
  CHECK(length_energy(path.nodes.front()) == 0.0);
  CHECK(std::abs(length_energy(path.nodes.back()) - 24.0) < 1e-9);
  CHECK(path.endpoint_energy < 0.0);
  for (double lambda : {range.lo, range.hi}) {
    CHECK(fun::energy(path.nodes.back(), f, lambda).energy < 0.0);
  }

  // Every admissible path must cross the mountain ridge: at the length where
  // the lower bound is sharp the scaled endpoint sits above pi/(lambda supK).
  for (double lambda : {range.lo, range.hi}) {
    const double target_len = kTwoPi / (lambda * f.sup_norm);
    const double scale = target_len / length_energy(path.nodes.back());
    const LoopCurve ridge(Mat2X(scale * path.nodes.back().pts()));
    CHECK(fun::energy(ridge, f, lambda).energy >= kPi / (lambda * f.sup_norm) - 1e-6);
  }
}

TEST_CASE("initial_path_periodic flips orientation on negative averages") {
  const auto f = fields::make_sinsin(-1.0, 0.5, 1.0, 1.0);
  const paths::PathFamily path = paths::initial_path_periodic(f, paths::Interval{0.8, 1.2});
  CHECK(path.endpoint_energy < 0.0);
  // Clockwise rectangles have positive G against K == +1.
  CHECK(fun::g_line(path.nodes.back(), fields::make_constant(1.0)) > 0.0);
}

TEST_CASE("initial_path_periodic validates its hypotheses") {
  CHECK(testing::thrown_kind([] {
          paths::initial_path_periodic(fields::make_sinsin(0.0, 0.5, 1.0, 1.0),
                                       paths::Interval{0.8, 1.2});
        }) == ErrKind::ZeroAverage);
  CHECK(testing::thrown_kind([] {
          paths::initial_path_periodic(fields::make_sinsin(1.0, 0.0, 1.0, 1.0),
                                       paths::Interval{1.2, 0.8});
        }) == ErrKind::BadConfig);
  CHECK(testing::thrown_kind([] {
          paths::initial_path_periodic(fields::make_sinsin(1.0, 0.0, 1.0, 1.0),
                                       paths::Interval{-1.0, 1.0});
        }) == ErrKind::BadConfig);
  CHECK(testing::thrown_kind([] {
          paths::initial_path_periodic(fields::make_sinsin(1.0, 0.0, 1.0, 1.0),
                                       paths::Interval{0.8, 1.2}, 256, 8);
        }) == ErrKind::BadConfig);
}

TEST_CASE("initial_path_bump grows a disc through the peak") {
  const auto f = fields::make_constant(1.0);
  const paths::PathFamily path = paths::initial_path_bump(f, 1.0);
  REQUIRE(path.m() == 33);

  int leading_constant = 0;
  for (const LoopCurve& node : path.nodes) {
    if (length_energy(node) != 0.0) break;
    CHECK(fun::energy(node, f, 1.0).energy == 0.0);
    ++leading_constant;
  }
  CHECK(leading_constant == 17);

  // Quadratic-model radius 4/(lambda K), first growth factor 1.05.
  CHECK(length_energy(path.nodes.back()) == doctest::Approx(kTwoPi * 4.2).epsilon(1e-4));
  CHECK(path.endpoint_energy < 0.0);
  CHECK(fun::energy(path.nodes.back(), f, 1.0).energy < 0.0);

  CHECK(testing::thrown_kind([&] { paths::initial_path_bump(f, -1.0); }) ==
        ErrKind::NoBumpFound);
}

TEST_CASE("initial_path_k4 reaches the ceiling for constant fields") {
  const auto f = fields::make_constant(1.0);
  const paths::PathFamily path = paths::initial_path_k4(f, paths::Interval{1.0, 1.0});
  REQUIRE(path.m() == 33);

  int leading_zero = 0;
  for (const LoopCurve& node : path.nodes) {
    if (fun::energy(node, f, 1.0).energy != 0.0) break;
    ++leading_zero;
  }
  CHECK(leading_zero == 9);

  const paths::PathMax pm = paths::path_max(path, f, 1.0);
  CHECK(pm.e == doctest::Approx(3.141434949).epsilon(1e-8));
  CHECK(std::abs(pm.e - kPi) < 1e-3);
  CHECK(path.endpoint_energy < 0.0);

  // A certified nondegenerate range keeps both endpoint energies negative.
  const paths::PathFamily wide = paths::initial_path_k4(f, paths::Interval{0.9, 1.1});
  CHECK(fun::energy(wide.nodes.back(), f, 0.9).energy < 0.0);
  CHECK(fun::energy(wide.nodes.back(), f, 1.1).energy < 0.0);

  // Same construction through the constant-at-infinity presentation.
  const auto flat = fields::make_gauss_lobe(1.0, 0.0, 0.35, Vec2::Zero());
  const paths::PathMax pf =
      paths::path_max(paths::initial_path_k4(flat, paths::Interval{1.0, 1.0}), flat, 1.0);
  CHECK(pf.e == doctest::Approx(3.141434949).epsilon(1e-8));

  CHECK(testing::thrown_kind([] {
          paths::initial_path_k4(fields::make_sinsin(1.0, 0.5, 1.0, 1.0),
                                 paths::Interval{1.0, 1.0});
        }) == ErrKind::WrongKind);
}

TEST_CASE("initial_path_k4 routes over a favorable lobe") {
  const auto f = fields::make_gauss_lobe(1.0, 0.75, 0.35, Vec2(0.0, 0.0));
  const paths::PathFamily path = paths::initial_path_k4(f, paths::Interval{1.0, 1.0});
  const paths::PathMax pm = paths::path_max(path, f, 1.0);
  CHECK(pm.e == doctest::Approx(2.852883364).epsilon(1e-8));
  CHECK(pm.e < kPi - 0.01);  // strictly below the constant-field ceiling
  CHECK(path.endpoint_energy < 0.0);
}

TEST_CASE("path_max picks the first maximal node") {
  const auto f = fields::make_constant(1.0);

  paths::PathFamily growing;
  growing.lambda_context = 1.0;
  for (int j = 0; j < 17; ++j) {
    growing.nodes.push_back(paths::circle_loop(0.1 + 0.025 * j, Vec2::Zero(), 1, 64));
  }
  const paths::PathMax top = paths::path_max(growing, f, 1.0);
  CHECK(top.node == 16);
  CHECK(top.s == 1.0);

  paths::PathFamily flat;
  flat.lambda_context = 1.0;
  for (int j = 0; j < 17; ++j) {
    flat.nodes.push_back(paths::constant_loop(Vec2(0.1 * j, 0.0), 64));
  }
  const paths::PathMax first = paths::path_max(flat, f, 1.0);
  CHECK(first.node == 0);
  CHECK(first.s == 0.0);
  CHECK(first.e == 0.0);

  CHECK(testing::thrown_kind([&] { paths::path_max(paths::PathFamily{}, f, 1.0); }) ==
        ErrKind::BadConfig);
}
