#pragma once

// Spectral kernels on uniformly sampled 1-periodic plane curves.
//
// A loop sample matrix (2 x N, columns u(k/N)) is treated as one complex
// signal z_k = x_k + i y_k, so rotation by +pi/2 is multiplication by i and
// the full two-sided spectrum is meaningful (no conjugate symmetry assumed).
//
// Derivatives are those of the trigonometric interpolant. The first-derivative
// multiplier at the Nyquist mode (even N) is zeroed, which keeps the operator
// skew-adjoint and makes discrete summation by parts exact; the second
// derivative keeps the real symbol -(pi N)^2 there.

#include <complex>
#include <unsupported/Eigen/FFT>

#include "kloop/common.hpp"

namespace kloop::fourier {

using CVec = Eigen::VectorXcd;

inline CVec to_complex(const Mat2X& pts) {
  const Eigen::Index n = pts.cols();
  CVec z(n);
  for (Eigen::Index k = 0; k < n; ++k) z[k] = {pts(0, k), pts(1, k)};
  return z;
}

inline Mat2X from_complex(const CVec& z) {
  Mat2X pts(2, z.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    pts(0, k) = z[k].real();
    pts(1, k) = z[k].imag();
  }
  return pts;
}

// One FFT engine per thread; Eigen::FFT caches plans per transform size.
inline Eigen::FFT<double>& engine() {
  thread_local Eigen::FFT<double> fft;
  return fft;
}

// Normalized DFT coefficients c_m with x_k = sum_m c_m e^{2 pi i m k / N}.
inline CVec coefficients(const CVec& z) {
  CVec out(z.size());
  engine().fwd(out, z);
  return out / static_cast<double>(z.size());
}

inline CVec synthesize(const CVec& coeffs) {
  CVec out(coeffs.size());
  CVec scaled = coeffs * static_cast<double>(coeffs.size());
  engine().inv(out, scaled);
  return out;
}

// Signed mode index for position m in the DFT layout: 0,1,..,N/2,-(N/2-1),..,-1.
inline double signed_mode(Eigen::Index m, Eigen::Index n) {
  return (2 * m <= n) ? static_cast<double>(m) : static_cast<double>(m) - static_cast<double>(n);
}

// order = 1 or 2 supported.
inline Mat2X spectral_derivative(const Mat2X& pts, int order) {
  const Eigen::Index n = pts.cols();
  CVec c = coefficients(to_complex(pts));
  for (Eigen::Index m = 0; m < n; ++m) {
    const double mt = signed_mode(m, n);
    if (order == 1) {
      const bool nyquist = (n % 2 == 0) && (2 * m == n);
      c[m] *= nyquist ? 0.0 : std::complex<double>(0.0, kTwoPi * mt);
    } else {
      c[m] *= -(kTwoPi * mt) * (kTwoPi * mt);
    }
  }
  return from_complex(synthesize(c));
}

// Trapezoid value of the tangent-speed integral, int_0^1 |u'| dt.
inline double speed_integral(const Mat2X& pts) {
  return spectral_derivative(pts, 1).colwise().norm().mean();
}

// Spectral form of the length energy (int |u'|^2)^{1/2}; exact on band-limited
// loops. The production length energy uses chordal differences instead (see
// loop.hpp); this variant backs the verification residual where the exact
// circle must be an exact zero.
inline double length_energy(const Mat2X& pts) {
  const Mat2X du = spectral_derivative(pts, 1);
  return std::sqrt(du.squaredNorm() / static_cast<double>(pts.cols()));
}

// H1 inner product of two nodal plane fields: forward-difference derivative
// part plus the barycenter term (the discrete form of the loop-space norm).
inline double h1_inner(const Mat2X& f, const Mat2X& g) {
  const Eigen::Index n = f.cols();
  double deriv = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index k1 = (k + 1) % n;
    deriv += (f.col(k1) - f.col(k)).dot(g.col(k1) - g.col(k));
  }
  const Vec2 fbar = f.rowwise().mean();
  const Vec2 gbar = g.rowwise().mean();
  return deriv * static_cast<double>(n) + fbar.dot(gbar);
}

struct RieszResult {
  Mat2X rep;         // representative R with <R,h>_H1 = f[h] for all nodal h
  double dual_norm;  // H1 norm of R, i.e. the dual norm of the covector
};

// Solve the H1 Riesz problem for a nodal covector f (pairing f[h] =
// (1/N) sum f_k . h_k). The metric diagonalizes in Fourier space with the
// forward-difference Laplacian symbol mu_m = 4 N^2 sin^2(pi m / N); the mean
// mode carries the barycenter block with unit weight.
inline RieszResult riesz_solve(const Mat2X& covector) {
  const Eigen::Index n = covector.cols();
  CVec c = coefficients(to_complex(covector));
  double dual2 = 0.0;
  for (Eigen::Index m = 0; m < n; ++m) {
    const double s = std::sin(kPi * static_cast<double>(m) / static_cast<double>(n));
    const double mu = (m == 0) ? 1.0 : 4.0 * static_cast<double>(n) * static_cast<double>(n) * s * s;
    dual2 += std::norm(c[m]) / mu;
    c[m] /= mu;
  }
  return {from_complex(synthesize(c)), std::sqrt(dual2)};
}

}  // namespace kloop::fourier
