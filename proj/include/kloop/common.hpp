#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace kloop {

using Vec2 = Eigen::Vector2d;
using Mat2X = Eigen::Matrix2Xd;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kPi = 3.141592653589793238462643383279;

// Solver tolerances and guards, fixed project-wide.
inline constexpr double kSpeedGuard = 1e-8;   // relative floor for node speeds
inline constexpr double kLengthGuard = 1e-6;  // below this a loop counts as constant

// Failure kinds raised by preconditions and unreachable numerical targets.
// Solver outcomes that are expected in normal operation (budget exhausted,
// collapse to a constant loop) are reported through result statuses instead.
enum class ErrKind {
  TooFewNodes,
  DegenerateSpeed,
  NearConstantLoop,
  WrongKind,
  QuadratureFailure,
  TooCloseToCurve,
  IndexAmbiguity,
  ZeroAverage,
  NoBumpFound,
  NoNegativeEndpoint,
  SignMismatch,
  EndpointViolation,
  BadConfig,
};

class Error : public std::runtime_error {
 public:
  Error(ErrKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrKind kind() const { return kind_; }

 private:
  ErrKind kind_;
};

// Rotation by +pi/2: i(x,y) = (-y,x). Multiplication by i in the complex picture.
inline Vec2 rot90(const Vec2& v) { return Vec2(-v.y(), v.x()); }

}  // namespace kloop
