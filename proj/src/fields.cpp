#include "kloop/fields.hpp"

#include <cmath>

namespace kloop::fields {

std::string kind_name(FieldKind kind) {
  switch (kind) {
    case FieldKind::Constant: return "Constant";
    case FieldKind::DoublyPeriodic: return "DoublyPeriodic";
    case FieldKind::ConstantAtInfinity: return "ConstantAtInfinity";
  }
  return "?";
}

namespace {

struct SimpsonWorker {
  const std::function<double(double)>& f;
  int evals_left;

  double eval(double x) {
    if (--evals_left < 0) throw Error(ErrKind::QuadratureFailure, "quadrature budget exhausted");
    return f(x);
  }

  // Classic adaptive Simpson with the 1/15 Richardson error estimate.
  double recurse(double lo, double hi, double flo, double fmid, double fhi, double whole,
                 double tol, int depth) {
    const double mid = 0.5 * (lo + hi);
    const double lmid = 0.5 * (lo + mid);
    const double rmid = 0.5 * (mid + hi);
    const double flm = eval(lmid);
    const double frm = eval(rmid);
    const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    const double err = left + right - whole;
    if (depth > 0 && std::abs(err) <= 15.0 * tol) return left + right + err / 15.0;
    if (depth > 48) throw Error(ErrKind::QuadratureFailure, "quadrature recursion too deep");
    return recurse(lo, mid, flo, flm, fmid, left, 0.5 * tol, depth + 1) +
           recurse(mid, hi, fmid, frm, fhi, right, 0.5 * tol, depth + 1);
  }
};

// Probe grid bound for sup |K| over a box.
double probe_sup(const std::function<double(const Vec2&)>& k, const Vec2& lo, const Vec2& hi, int n) {
  double sup = 0.0;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const Vec2 z(lo.x() + (hi.x() - lo.x()) * i / n, lo.y() + (hi.y() - lo.y()) * j / n);
      sup = std::max(sup, std::abs(k(z)));
    }
  }
  return sup;
}

void validate_periodicity(const CurvatureField& f) {
  const double tol = 1e-9 * std::max(1.0, f.sup_norm);
  for (int i = 0; i < 32; ++i) {
    for (int j = 0; j < 32; ++j) {
      const Vec2 z(f.a * (i + 0.37) / 32.0, f.b * (j + 0.61) / 32.0);
      if (std::abs(f.k(z + Vec2(f.a, 0)) - f.k(z)) > tol ||
          std::abs(f.k(z + Vec2(0, f.b)) - f.k(z)) > tol) {
        throw Error(ErrKind::BadConfig, "field is not (a,b)-periodic on the probe grid");
      }
    }
  }
}

void validate_decay(const CurvatureField& f) {
  const double radius = 1e3 * f.decay_scale;
  for (int ray = 0; ray < 16; ++ray) {
    const double phi = kTwoPi * ray / 16.0;
    const Vec2 z(radius * std::cos(phi), radius * std::sin(phi));
    if (std::abs(f.k(z) - f.k0) > 1e-3 * std::abs(f.k0)) {
      throw Error(ErrKind::BadConfig, "field does not settle to k0 along probe rays");
    }
  }
}

void validate_sup(const CurvatureField& f, const Vec2& lo, const Vec2& hi) {
  if (probe_sup(f.k, lo, hi, 48) > f.sup_norm * (1.0 + 1e-12)) {
    throw Error(ErrKind::BadConfig, "declared sup_norm violated on the probe grid");
  }
}

double require(const std::map<std::string, double>& params, const std::string& key) {
  const auto it = params.find(key);
  if (it == params.end()) throw Error(ErrKind::BadConfig, "missing field parameter: " + key);
  return it->second;
}

double get_or(const std::map<std::string, double>& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double lo, double hi, double tol,
                        int max_evals) {
  if (lo == hi) return 0.0;
  SimpsonWorker w{f, max_evals};
  const double flo = w.eval(lo);
  const double fmid = w.eval(0.5 * (lo + hi));
  const double fhi = w.eval(hi);
  const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
  return w.recurse(lo, hi, flo, fmid, fhi, whole, tol, 0);
}

CurvatureField make_constant(double c) {
  if (c == 0.0) throw Error(ErrKind::BadConfig, "constant field requires a nonzero value");
  CurvatureField f;
  f.kind = FieldKind::Constant;
  f.name = "constant";
  f.k = [c](const Vec2&) { return c; };
  f.q_closed = [c](const Vec2& z) { return Vec2(0.5 * c * z.x(), 0.5 * c * z.y()); };
  f.q1_closed = [](const Vec2&) { return Vec2::Zero().eval(); };
  f.k0 = c;
  f.sup_norm = std::abs(c);
  return f;
}

CurvatureField make_sinsin(double c0, double c1, double a, double b) {
  if (a <= 0 || b <= 0) throw Error(ErrKind::BadConfig, "periods must be positive");
  CurvatureField f;
  f.kind = FieldKind::DoublyPeriodic;
  f.name = "sinsin";
  f.a = a;
  f.b = b;
  f.k = [=](const Vec2& z) {
    return c0 + c1 * std::sin(kTwoPi * z.x() / a) * std::sin(kTwoPi * z.y() / b);
  };
  f.q_closed = [=](const Vec2& z) {
    const double sx = std::sin(kTwoPi * z.x() / a), cx = std::cos(kTwoPi * z.x() / a);
    const double sy = std::sin(kTwoPi * z.y() / b), cy = std::cos(kTwoPi * z.y() / b);
    return Vec2(0.5 * (c0 * z.x() + c1 * sy * (a / kTwoPi) * (1.0 - cx)),
                0.5 * (c0 * z.y() + c1 * sx * (b / kTwoPi) * (1.0 - cy)));
  };
  f.sup_norm = std::abs(c0) + std::abs(c1);
  // Largest lambda*K for lambda > 0 sits where both sines peak.
  f.interest_point = (c1 >= 0) ? Vec2(0.25 * a, 0.25 * b) : Vec2(0.75 * a, 0.25 * b);
  validate_periodicity(f);
  validate_sup(f, Vec2(0, 0), Vec2(a, b));
  return f;
}

CurvatureField make_sinsin_cos(double c0, double c1, double c2, double a, double b) {
  if (a <= 0 || b <= 0) throw Error(ErrKind::BadConfig, "periods must be positive");
  CurvatureField f;
  f.kind = FieldKind::DoublyPeriodic;
  f.name = "sinsin_cos";
  f.a = a;
  f.b = b;
  f.k = [=](const Vec2& z) {
    return c0 + c1 * std::sin(kTwoPi * z.x() / a) * std::sin(kTwoPi * z.y() / b) +
           c2 * std::cos(kTwoPi * z.x() / a);
  };
  f.q_closed = [=](const Vec2& z) {
    const double sx = std::sin(kTwoPi * z.x() / a), cx = std::cos(kTwoPi * z.x() / a);
    const double sy = std::sin(kTwoPi * z.y() / b), cy = std::cos(kTwoPi * z.y() / b);
    return Vec2(0.5 * (c0 * z.x() + c1 * sy * (a / kTwoPi) * (1.0 - cx) + c2 * (a / kTwoPi) * sx),
                0.5 * (c0 * z.y() + c1 * sx * (b / kTwoPi) * (1.0 - cy) + c2 * cx * z.y()));
  };
  f.sup_norm = std::abs(c0) + std::abs(c1) + std::abs(c2);
  f.interest_point = Vec2(0.25 * a, 0.25 * b);
  validate_periodicity(f);
  validate_sup(f, Vec2(0, 0), Vec2(a, b));
  return f;
}

CurvatureField make_gauss_lobe(double k0, double amp, double sigma, const Vec2& z1) {
  if (k0 == 0.0) throw Error(ErrKind::BadConfig, "gauss_lobe requires nonzero k0");
  if (sigma <= 0.0) throw Error(ErrKind::BadConfig, "gauss_lobe requires positive sigma");
  CurvatureField f;
  f.kind = FieldKind::ConstantAtInfinity;
  f.name = "gauss_lobe";
  f.k0 = k0;
  f.decay_scale = sigma;
  f.k = [=](const Vec2& z) { return k0 + amp * std::exp(-(z - z1).squaredNorm() / (sigma * sigma)); };
  // int_0^x exp(-((s-x1)/sigma)^2) ds = (sigma sqrt(pi)/2) [erf((x-x1)/sigma) + erf(x1/sigma)]
  const double root_pi = std::sqrt(kPi);
  auto q1 = [=](const Vec2& z) {
    const double gx = std::exp(-(z.y() - z1.y()) * (z.y() - z1.y()) / (sigma * sigma)) *
                      (sigma * root_pi / 2.0) *
                      (std::erf((z.x() - z1.x()) / sigma) + std::erf(z1.x() / sigma));
    const double gy = std::exp(-(z.x() - z1.x()) * (z.x() - z1.x()) / (sigma * sigma)) *
                      (sigma * root_pi / 2.0) *
                      (std::erf((z.y() - z1.y()) / sigma) + std::erf(z1.y() / sigma));
    return Vec2(0.5 * amp * gx, 0.5 * amp * gy);
  };
  f.q1_closed = q1;
  f.q_closed = [=](const Vec2& z) { return (0.5 * k0 * z + q1(z)).eval(); };
  f.sup_norm = std::abs(k0) + std::abs(amp);
  f.interest_point = z1;
  f.favorable_lobe = k0 * amp > 0;
  validate_decay(f);
  validate_sup(f, z1 - Vec2(6 * sigma, 6 * sigma), z1 + Vec2(6 * sigma, 6 * sigma));
  return f;
}

CurvatureField make_field(const std::string& name, const std::map<std::string, double>& params) {
  if (name == "constant") return make_constant(require(params, "c"));
  if (name == "sinsin") {
    return make_sinsin(require(params, "c0"), require(params, "c1"), get_or(params, "a", 1.0),
                       get_or(params, "b", 1.0));
  }
  if (name == "sinsin_cos") {
    return make_sinsin_cos(require(params, "c0"), require(params, "c1"), require(params, "c2"),
                           get_or(params, "a", 1.0), get_or(params, "b", 1.0));
  }
  if (name == "gauss_lobe") {
    return make_gauss_lobe(require(params, "k0"), require(params, "amp"),
                           get_or(params, "sigma", 1.0),
                           Vec2(get_or(params, "x1", 0.0), get_or(params, "y1", 0.0)));
  }
  throw Error(ErrKind::BadConfig, "unknown field name: " + name);
}

double eval_K(const CurvatureField& field, const Vec2& z) { return field.k(z); }

Vec2 eval_Q(const CurvatureField& field, const Vec2& z) {
  if (field.q_closed) return field.q_closed(z);
  const double qx = adaptive_simpson([&](double s) { return field.k(Vec2(s, z.y())); }, 0.0, z.x(),
                                     kQuadTol, kQuadBudget);
  const double qy = adaptive_simpson([&](double s) { return field.k(Vec2(z.x(), s)); }, 0.0, z.y(),
                                     kQuadTol, kQuadBudget);
  return 0.5 * Vec2(qx, qy);
}

Vec2 eval_Q1(const CurvatureField& field, const Vec2& z) {
  if (field.kind != FieldKind::ConstantAtInfinity) {
    throw Error(ErrKind::WrongKind, "eval_Q1 requires a constant-at-infinity field");
  }
  if (field.q1_closed) return field.q1_closed(z);
  const double qx = adaptive_simpson([&](double s) { return field.k(Vec2(s, z.y())) - field.k0; },
                                     0.0, z.x(), kQuadTol, kQuadBudget);
  const double qy = adaptive_simpson([&](double s) { return field.k(Vec2(z.x(), s)) - field.k0; },
                                     0.0, z.y(), kQuadTol, kQuadBudget);
  return 0.5 * Vec2(qx, qy);
}

double cell_average(const CurvatureField& field) {
  if (field.kind != FieldKind::DoublyPeriodic) {
    throw Error(ErrKind::WrongKind, "cell_average requires a doubly periodic field");
  }
  // Tensor rectangle rule on the period cell: spectrally accurate for smooth
  // periodic integrands. Refine until two consecutive levels agree to 1e-8.
  double prev = 0.0;
  for (int n = 16; n <= 4096; n *= 2) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        acc += field.k(Vec2(field.a * (i + 0.5) / n, field.b * (j + 0.5) / n));
      }
    }
    const double avg = acc / (static_cast<double>(n) * n);
    if (n > 16 && std::abs(avg - prev) < 1e-8) return avg;
    prev = avg;
  }
  throw Error(ErrKind::QuadratureFailure, "cell average did not settle to 1e-8");
}

}  // namespace kloop::fields
