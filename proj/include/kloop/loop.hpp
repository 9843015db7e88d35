#pragma once

// Discrete closed plane curves on a uniform periodic parameter grid and the
// basic geometric functionals: length energy, barycenter, H1 norm, signed
// curvature, lattice normalization, and constant-speed reparametrization.
//
// Two discrete derivatives coexist deliberately. Forward (chordal)
// differences back the length energy and the H1 metric: they are exact on
// piecewise-linear loops whose corners sit on grid nodes, which the rectangle
// identities require at round-off level. Spectral differentiation backs
// curvature and every integrand that needs the trigonometric interpolant.

#include <algorithm>
#include <cmath>
#include <vector>

#include "kloop/common.hpp"
#include "kloop/fourier.hpp"

namespace kloop {

template <typename Scalar>
class LoopCurveT {
 public:
  using PointMatrix = Eigen::Matrix<Scalar, 2, Eigen::Dynamic>;

  explicit LoopCurveT(PointMatrix samples) : pts_(std::move(samples)) {
    if (pts_.cols() < 16) throw Error(ErrKind::TooFewNodes, "loop needs at least 16 samples");
    if (!pts_.allFinite()) throw Error(ErrKind::TooFewNodes, "loop samples must be finite");
  }

  Eigen::Index n() const { return pts_.cols(); }
  const PointMatrix& pts() const { return pts_; }
  Eigen::Vector2<Scalar> at(Eigen::Index k) const { return pts_.col(k); }

 private:
  PointMatrix pts_;
};

using LoopCurve = LoopCurveT<double>;

// (Sum_k |N (u_{k+1} - u_k)|^2 / N)^{1/2}: the chordal form of (int |u'|^2)^{1/2}.
template <typename Scalar>
Scalar length_energy(const LoopCurveT<Scalar>& u) {
  const auto& p = u.pts();
  const Eigen::Index n = p.cols();
  Scalar acc = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    acc += (p.col((k + 1) % n) - p.col(k)).squaredNorm();
  }
  return std::sqrt(acc * static_cast<Scalar>(n));
}

// Polyline length: the exact value of int |u'| dt for the chordal interpolant.
template <typename Scalar>
Scalar arc_length(const LoopCurveT<Scalar>& u) {
  const auto& p = u.pts();
  const Eigen::Index n = p.cols();
  Scalar acc = 0;
  for (Eigen::Index k = 0; k < n; ++k) acc += (p.col((k + 1) % n) - p.col(k)).norm();
  return acc;
}

template <typename Scalar>
Eigen::Vector2<Scalar> barycenter(const LoopCurveT<Scalar>& u) {
  return u.pts().rowwise().mean();
}

template <typename Scalar>
Scalar h1_norm(const LoopCurveT<Scalar>& u) {
  const Scalar len = length_energy(u);
  return std::sqrt(len * len + barycenter(u).squaredNorm());
}

struct LoopMetrics {
  double length_energy = 0;
  Vec2 barycenter = Vec2::Zero();
  double h1_norm = 0;
  double arc_length = 0;
};

template <typename Scalar>
LoopMetrics metrics(const LoopCurveT<Scalar>& u) {
  LoopMetrics m;
  m.length_energy = length_energy(u);
  m.barycenter = barycenter(u).template cast<double>();
  m.arc_length = arc_length(u);
  m.h1_norm = std::sqrt(m.length_energy * m.length_energy + m.barycenter.squaredNorm());
  return m;
}

// Translate by an integer combination of the periods so the barycenter lands
// in the half-open cell [0,a) x [0,b). Pure translation: all derivative-based
// quantities are preserved bitwise.
template <typename Scalar>
LoopCurveT<Scalar> normalize_to_cell(const LoopCurveT<Scalar>& u, Scalar a, Scalar b) {
  if (a <= 0 || b <= 0) throw Error(ErrKind::BadConfig, "cell periods must be positive");
  const Eigen::Vector2<Scalar> c = barycenter(u);
  const Scalar mx = std::floor(c.x() / a);
  const Scalar my = std::floor(c.y() / b);
  typename LoopCurveT<Scalar>::PointMatrix p = u.pts();
  p.row(0).array() -= mx * a;
  p.row(1).array() -= my * b;
  return LoopCurveT<Scalar>(std::move(p));
}

namespace detail {

// Point on the closed polyline of u at chordal arc length s (0 <= s < total),
// given the cumulative lengths cum[k] = length of the first k edges.
template <typename Scalar>
Eigen::Vector2<Scalar> polyline_at(const typename LoopCurveT<Scalar>::PointMatrix& p,
                                   const std::vector<Scalar>& cum, Scalar s) {
  const Eigen::Index n = p.cols();
  const auto it = std::upper_bound(cum.begin(), cum.end(), s);
  const Eigen::Index k = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(it - cum.begin()) - 1, 0, n - 1);
  const Scalar seg = cum[k + 1] - cum[k];
  const Scalar w = seg > 0 ? (s - cum[k]) / seg : 0;
  return p.col(k % n) + w * (p.col((k + 1) % n) - p.col(k % n));
}

}  // namespace detail

// Resample so node spacing is uniform in arc length (within 1% relative
// deviation). Evaluation is piecewise linear on the input polyline: output
// nodes stay on the polyline, so polygons are preserved and the length energy
// cannot increase beyond the interpolation order.
template <typename Scalar>
LoopCurveT<Scalar> reparametrize_uniform(const LoopCurveT<Scalar>& u) {
  const Eigen::Index n = u.n();
  typename LoopCurveT<Scalar>::PointMatrix p = u.pts();
  for (int pass = 0; pass < 4; ++pass) {
    std::vector<Scalar> cum(static_cast<size_t>(n) + 1, 0);
    for (Eigen::Index k = 0; k < n; ++k) {
      cum[k + 1] = cum[k] + (p.col((k + 1) % n) - p.col(k)).norm();
    }
    const Scalar total = cum[n];
    if (total < kSpeedGuard) throw Error(ErrKind::DegenerateSpeed, "cannot reparametrize a constant loop");

    Scalar worst = 0;
    const Scalar mean_gap = total / static_cast<Scalar>(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      worst = std::max(worst, std::abs(cum[k + 1] - cum[k] - mean_gap));
    }
    if (worst <= Scalar(0.005) * mean_gap) break;

    typename LoopCurveT<Scalar>::PointMatrix q(2, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      q.col(j) = detail::polyline_at<Scalar>(p, cum, total * static_cast<Scalar>(j) / static_cast<Scalar>(n));
    }
    p = std::move(q);
  }
  return LoopCurveT<Scalar>(std::move(p));
}

// Signed curvature u'' . (i u') / |u'|^3 of the trigonometric interpolant at
// every node; +1/r on a counterclockwise circle of radius r.
inline Eigen::VectorXd curvature(const LoopCurve& u) {
  const Mat2X d1 = fourier::spectral_derivative(u.pts(), 1);
  const Mat2X d2 = fourier::spectral_derivative(u.pts(), 2);
  const double guard = kSpeedGuard * std::max(1.0, arc_length(u));
  Eigen::VectorXd kappa(u.n());
  for (Eigen::Index k = 0; k < u.n(); ++k) {
    const double speed = d1.col(k).norm();
    if (speed < guard) throw Error(ErrKind::DegenerateSpeed, "node speed below guard in curvature");
    kappa[k] = d2.col(k).dot(rot90(d1.col(k))) / (speed * speed * speed);
  }
  return kappa;
}

}  // namespace kloop
