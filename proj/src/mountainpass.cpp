#include "kloop/mountainpass.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "kloop/fourier.hpp"
#include "kloop/verify.hpp"
#include "kloop/winding.hpp"

namespace kloop::mp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double energy_of(const LoopCurve& u, const fields::CurvatureField& field, double lambda) {
  return fun::energy(u, field, lambda).energy;
}

double h1_dot(const Mat2X& f, const Mat2X& g) { return fourier::h1_inner(f, g); }

double h1_len(const Mat2X& f) { return std::sqrt(std::max(0.0, h1_dot(f, f))); }

// Reparametrize when the loop still has meaningful extent; collapsed loops
// pass through untouched (they are frozen as markers, never moved again).
LoopCurve safe_reparam(const LoopCurve& u) {
  if (arc_length(u) < 1e3 * kSpeedGuard) return u;
  return reparametrize_uniform(u);
}

int argmax_index(const std::vector<double>& e) {
  int best = 0;
  for (int j = 1; j < static_cast<int>(e.size()); ++j)
    if (e[j] > e[best]) best = j;
  return best;
}

// Resample the path at equal increments of the energy-arc coordinate
// sum |dE| (plus a floor that keeps a minimum of resolution everywhere),
// separately on each side of the argmax node, which is kept verbatim: the
// flat ridge top has small energy gaps, so a single global equalization
// would deplete exactly the stretch that decides the level. The swap is
// accepted only if it does not raise the max.
bool redistribute_nodes(std::vector<LoopCurve>& nodes, std::vector<double>& s,
                        std::vector<double>& e, const fields::CurvatureField& field,
                        double lambda) {
  const int m = static_cast<int>(nodes.size());
  const int jmax = argmax_index(e);
  const double lo = *std::min_element(e.begin(), e.end());
  const double hi = e[jmax];
  const double span = hi - lo;
  if (!(span > 0) || jmax == 0 || jmax == m - 1) return false;

  std::vector<double> w(m, 0.0);
  const double floor_gap = 0.05 * span / (m - 1);
  for (int i = 0; i + 1 < m; ++i) w[i + 1] = w[i] + std::abs(e[i + 1] - e[i]) + floor_gap;
  const double total = w[m - 1];

  // split the node budget across the two sides in proportion to energy arc
  const int k_pin = std::clamp(static_cast<int>(std::lround((m - 1) * w[jmax] / total)), 1, m - 2);

  const auto node_at = [&](double target) {
    int i = static_cast<int>(std::upper_bound(w.begin(), w.end(), target) - w.begin()) - 1;
    i = std::clamp(i, 0, m - 2);
    const double theta = (target - w[i]) / (w[i + 1] - w[i]);
    Mat2X blend = (1.0 - theta) * nodes[i].pts() + theta * nodes[i + 1].pts();
    LoopCurve cand = safe_reparam(LoopCurve(std::move(blend)));
    const double e_cand = energy_of(cand, field, lambda);
    const double s_cand = (1.0 - theta) * s[i] + theta * s[i + 1];
    return std::tuple<LoopCurve, double, double>(std::move(cand), e_cand, s_cand);
  };

  std::vector<LoopCurve> fresh;
  std::vector<double> s_new(m), e_new(m);
  fresh.reserve(m);
  fresh.push_back(nodes.front());
  s_new[0] = s.front();
  e_new[0] = e.front();
  for (int k = 1; k + 1 < m; ++k) {
    if (k == k_pin) {
      fresh.push_back(nodes[jmax]);
      e_new[k] = e[jmax];
      s_new[k] = s[jmax];
      continue;
    }
    const double target = k < k_pin ? w[jmax] * k / k_pin
                                    : w[jmax] + (total - w[jmax]) * (k - k_pin) / (m - 1 - k_pin);
    auto [cand, e_cand, s_cand] = node_at(target);
    fresh.push_back(std::move(cand));
    e_new[k] = e_cand;
    s_new[k] = s_cand;
  }
  fresh.push_back(nodes.back());
  s_new[m - 1] = s.back();
  e_new[m - 1] = e.back();

  if (*std::max_element(e_new.begin(), e_new.end()) > hi + 1e-12) return false;
  nodes = std::move(fresh);
  s = std::move(s_new);
  e = std::move(e_new);
  return true;
}

// GMRES in the H1 inner product for the matrix-free Newton solve. Returns an
// approximate solution of A x = b with relative residual rel_tol (or the best
// iterate when the Krylov budget runs out).
Mat2X gmres_h1(const std::function<Mat2X(const Mat2X&)>& apply, const Mat2X& b, double rel_tol,
               int max_it) {
  const double beta = h1_len(b);
  Mat2X x = Mat2X::Zero(2, b.cols());
  if (beta == 0.0) return x;

  std::vector<Mat2X> basis;
  basis.push_back(b / beta);
  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(max_it + 1, max_it);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(max_it + 1);
  rhs(0) = beta;
  std::vector<double> cs(max_it, 1.0), sn(max_it, 0.0);

  int k = 0;
  for (; k < max_it; ++k) {
    Mat2X w = apply(basis[k]);
    for (int i = 0; i <= k; ++i) {
      hess(i, k) = h1_dot(w, basis[i]);
      w -= hess(i, k) * basis[i];
    }
    hess(k + 1, k) = h1_len(w);
    const bool breakdown = hess(k + 1, k) <= 1e-14 * beta;
    if (!breakdown) basis.push_back(w / hess(k + 1, k));

    for (int i = 0; i < k; ++i) {
      const double t = cs[i] * hess(i, k) + sn[i] * hess(i + 1, k);
      hess(i + 1, k) = -sn[i] * hess(i, k) + cs[i] * hess(i + 1, k);
      hess(i, k) = t;
    }
    const double denom = std::hypot(hess(k, k), hess(k + 1, k));
    if (denom == 0.0) {
      ++k;
      break;
    }
    cs[k] = hess(k, k) / denom;
    sn[k] = hess(k + 1, k) / denom;
    hess(k, k) = denom;
    hess(k + 1, k) = 0.0;
    rhs(k + 1) = -sn[k] * rhs(k);
    rhs(k) = cs[k] * rhs(k);
    if (std::abs(rhs(k + 1)) <= rel_tol * beta || breakdown) {
      ++k;
      break;
    }
  }
  if (k == 0) return x;
  const Eigen::VectorXd y =
      hess.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(rhs.head(k));
  for (int i = 0; i < k; ++i) x += y(i) * basis[i];
  return x;
}

}  // namespace

MountainPassEstimate estimate_c(const paths::PathFamily& path, const fields::CurvatureField& field,
                                double lambda, const SaddleOptions& opts) {
  const int m = path.m();
  if (m < 3) throw Error(ErrKind::BadConfig, "path needs at least 3 nodes");

  std::vector<LoopCurve> nodes = path.nodes;
  std::vector<double> s(m), e(m);
  for (int j = 0; j < m; ++j) {
    s[j] = path.s(j);
    e[j] = energy_of(nodes[j], field, lambda);
  }
  if (std::abs(e.front()) > 1e-9 || e.back() >= 0.0)
    throw Error(ErrKind::EndpointViolation, "path endpoints not admissible at this lambda");

  const auto movable = [&](int j) {
    return j > 0 && j + 1 < m && length_energy(nodes[j]) >= kLengthGuard;
  };
  const double step0 = 0.1 / (1.0 + std::abs(lambda) * field.sup_norm);
  std::vector<double> step(m, step0);  // per-node adaptive step memory

  std::vector<double> history;
  bool converged = false;
  double dual_at_max = std::numeric_limits<double>::infinity();
  int it = 0;
  int stagnant = 0;

  // Once the string stops lowering the max, the argmax sits near the pass but
  // its full gradient stalls at the node-spacing scale. Polishing that single
  // node onto the nearby critical point finishes the job; the result is
  // accepted only if its energy does not exceed the current max, so the
  // max-along-path stays non-increasing.
  const auto polish_argmax = [&](int jmax) {
    DescentOptions popts;
    popts.tol_crit = opts.tol_saddle;
    popts.max_evaluations = 20000;
    // Restarts hop to roots at other levels; the polish must stay on this one.
    popts.dilation_restarts = false;
    try {
      CriticalPointResult fine = refine_critical(nodes[jmax], field, lambda, popts);
      if (!fine.converged || fine.energy > e[jmax] + 1e-12) return false;
      LoopCurve polished = std::move(fine.loop);
      if (field.kind == fields::FieldKind::DoublyPeriodic) {
        // undo the cell normalization so the node stays next to its neighbors
        const Vec2 drift = barycenter(polished) - barycenter(nodes[jmax]);
        Mat2X p = polished.pts();
        p.row(0).array() -= field.a * std::round(drift.x() / field.a);
        p.row(1).array() -= field.b * std::round(drift.y() / field.b);
        polished = LoopCurve(std::move(p));
      }
      nodes[jmax] = std::move(polished);
      e[jmax] = energy_of(nodes[jmax], field, lambda);
      dual_at_max = fun::gradient(nodes[jmax], field, lambda).dual_norm;
      return dual_at_max < opts.tol_saddle;
    } catch (const Error&) {
      return false;
    }
  };

  for (; it < opts.max_iterations; ++it) {
    const int jmax = argmax_index(e);
    history.push_back(e[jmax]);

    if (movable(jmax)) {
      dual_at_max = fun::gradient(nodes[jmax], field, lambda).dual_norm;
      if (dual_at_max < opts.tol_saddle) {
        converged = true;
        break;
      }
      // stall detection: the max has stopped moving at the scale that string
      // relaxation can deliver
      const int lag = 30;
      if (it >= lag &&
          history[it - lag] - history[it] < 1e-9 * (1.0 + std::abs(history[it]))) {
        break;
      }
    }

    // directions from a snapshot so every tangent sees the same string state
    const std::vector<LoopCurve> prev = nodes;

    bool any_accept = false;
    for (int j = 1; j + 1 < m; ++j) {
      if (!movable(j)) continue;
      // nodes far below the pass matter only for the string shape; relaxing
      // them every third sweep keeps the cost where the level is decided
      if (e[j] < 0.0 && std::abs(j - jmax) > 1 && it % 3 != 0) continue;

      const fun::GradientField g = fun::gradient(nodes[j], field, lambda);
      if (g.dual_norm < 1e-14) continue;

      // descend only transversally to the string: removing the tangential
      // component stops nodes from sliding off the ridge (which would sink
      // the discrete max below the pass level). Upwind tangent: follow the
      // uphill neighbor, energy-weighted across local extrema, which keeps
      // the projection honest right at the ridge.
      Mat2X dir = g.values;
      const Mat2X fwd = prev[j + 1].pts() - prev[j].pts();
      const Mat2X bwd = prev[j].pts() - prev[j - 1].pts();
      const double de_f = e[j + 1] - e[j];
      const double de_b = e[j - 1] - e[j];
      Mat2X tau;
      if (de_f > 0 && de_b < 0) {
        tau = fwd;
      } else if (de_f < 0 && de_b > 0) {
        tau = bwd;
      } else {
        const double w_hi = std::max(std::abs(de_f), std::abs(de_b));
        const double w_lo = std::min(std::abs(de_f), std::abs(de_b));
        tau = e[j + 1] > e[j - 1] ? (w_hi * fwd + w_lo * bwd).eval()
                                  : (w_lo * fwd + w_hi * bwd).eval();
      }
      const double tau_len = h1_len(tau);
      if (tau_len > 0) {
        tau /= tau_len;
        dir -= h1_dot(dir, tau) * tau;
      }
      const double slope = h1_dot(dir, dir);  // = <grad, dir>, the Armijo slope
      if (slope < 1e-28) continue;

      // displacement cap: moving a node further than a fraction of the local
      // node spacing in one step tears the string
      const double gap_minus = h1_len(prev[j].pts() - prev[j - 1].pts());
      const double gap_plus = h1_len(prev[j + 1].pts() - prev[j].pts());
      double gap = std::min(gap_minus > 0 ? gap_minus : gap_plus,
                            gap_plus > 0 ? gap_plus : gap_minus);
      if (!(gap > 0)) continue;
      const double alpha_cap = 0.25 * gap / std::sqrt(slope);

      double alpha = std::min(step[j] / opts.armijo, alpha_cap);
      for (int bt = 0; bt < 30; ++bt, alpha *= opts.armijo) {
        LoopCurve trial = safe_reparam(LoopCurve(nodes[j].pts() - alpha * dir));
        const double et = energy_of(trial, field, lambda);
        if (et <= e[j] - 1e-4 * alpha * slope) {
          nodes[j] = std::move(trial);
          e[j] = et;
          step[j] = alpha;
          any_accept = true;
          break;
        }
      }
    }

    if ((it + 1) % opts.redistribute_every == 0 && m >= 5) {
      if (redistribute_nodes(nodes, s, e, field, lambda)) {
        std::fill(step.begin(), step.end(), step0);
        any_accept = true;
      }
    }

    if (e.back() >= 0.0)
      throw Error(ErrKind::EndpointViolation, "endpoint energy drifted nonnegative");

    if (any_accept) {
      stagnant = 0;
    } else if (++stagnant >= 3) {
      break;
    }
  }

  const int jmax = argmax_index(e);
  if (movable(jmax)) {
    dual_at_max = fun::gradient(nodes[jmax], field, lambda).dual_norm;
    converged = dual_at_max < opts.tol_saddle;
    if (!converged) converged = polish_argmax(jmax);
  } else {
    converged = false;
  }

  paths::PathFamily final_path{nodes, lambda, e.back()};
  return MountainPassEstimate{e[jmax],   nodes[jmax], s[jmax],
                              dual_at_max, it,        converged,
                              std::move(final_path),  std::move(history)};
}

namespace {

struct RefineAttempt {
  LoopCurve loop;
  double phi;
  DescentStatus status;
};

// One damped-Newton run from u0 until convergence, collapse, stall, or
// budget. The evaluation counter and length history are shared across
// attempts so restarts honor the caller's total budget.
RefineAttempt refine_attempt(LoopCurve u0, const fields::CurvatureField& field, double lambda,
                             const DescentOptions& opts, int& evals, std::vector<double>& lengths) {
  LoopCurve u = std::move(u0);
  const Eigen::Index n = u.n();
  const auto residual = [&](const LoopCurve& v) -> Mat2X {
    ++evals;
    return fun::gradient(v, field, lambda).values;
  };

  Mat2X r = residual(u);
  double phi = h1_len(r);
  lengths.push_back(length_energy(u));
  DescentStatus status = phi < opts.tol_crit ? DescentStatus::Converged : DescentStatus::BudgetExhausted;
  int newton_holdoff = 0;
  std::vector<double> phi_trace{phi};

  while (phi >= opts.tol_crit && evals < opts.max_evaluations) {
    const auto apply_jac = [&](const Mat2X& v) -> Mat2X {
      const double nv = h1_len(v);
      if (nv == 0.0) return Mat2X::Zero(2, n);
      const double eps = 1.5e-8 * (1.0 + h1_norm(u)) / nv;
      const Mat2X rp = residual(LoopCurve(u.pts() + eps * v));
      const Mat2X rm = residual(LoopCurve(u.pts() - eps * v));
      return (rp - rm) / (2.0 * eps);
    };

    bool accepted = false;
    bool collapsed = false;
    int accepted_pass = -1;
    // Newton direction first; fall back to the merit gradient J r (the
    // Jacobian is nearly self-adjoint in H1), then to the residual itself,
    // which is a descent direction wherever the Jacobian is positive along
    // it (shallow valley floors, where the Newton model is useless).  After
    // the Jacobian-based passes fail, skip them for a few sweeps: each
    // failed attempt costs dozens of evaluations for nothing.
    const int first_pass = newton_holdoff > 0 ? 2 : 0;
    for (int pass = first_pass; pass < 3 && !accepted && !collapsed; ++pass) {
      Mat2X dir;
      try {
        if (pass == 0)
          dir = gmres_h1(apply_jac, -r, 0.1, 40);
        else if (pass == 1)
          dir = (-apply_jac(r)).eval();
        else
          dir = -r;
      } catch (const Error&) {
        collapsed = true;  // FD probe left the admissible region
        break;
      }
      const double dn = h1_len(dir);
      if (dn == 0.0) continue;
      if (pass == 0 && dn > 2.0) dir *= 2.0 / dn;  // cap steps from a near-singular solve
      if (pass >= 1) dir *= phi / dn;  // first-order passes: step on the scale of the residual

      for (double alpha = 1.0; alpha >= 1e-8; alpha *= 0.5) {
        LoopCurve cand(u.pts() + alpha * dir);
        if (length_energy(cand) < kLengthGuard) {
          collapsed = true;
          break;
        }
        double phic;
        try {
          phic = h1_len(residual(cand));
        } catch (const Error&) {
          collapsed = true;
          break;
        }
        if (phic <= (1.0 - 1e-4 * alpha) * phi) {
          LoopCurve post = safe_reparam(cand);
          if (field.kind == fields::FieldKind::DoublyPeriodic)
            post = normalize_to_cell(post, field.a, field.b);
          u = std::move(post);
          r = residual(u);
          phi = h1_len(r);
          accepted = true;
          accepted_pass = pass;
          break;
        }
        if (evals >= opts.max_evaluations) break;
      }
    }
    if (accepted && accepted_pass == 2 && first_pass == 0)
      newton_holdoff = 8;
    else if (newton_holdoff > 0)
      --newton_holdoff;

    lengths.push_back(length_energy(u));
    if (collapsed || length_energy(u) < kLengthGuard) {
      status = DescentStatus::CollapseToConstant;
      break;
    }
    if (!accepted) {
      if (first_pass > 0) {
        // The cheap direction alone stopped making progress; force the
        // full pass sequence once more before giving up.
        newton_holdoff = 0;
        continue;
      }
      status = DescentStatus::Stalled;
      break;
    }
    // Micro-step creep along a flat merit valley can outlast any budget;
    // cut the run once a whole window of iterations gains less than 0.1%.
    phi_trace.push_back(phi);
    const std::size_t window = 30;
    if (phi_trace.size() > window &&
        phi > 0.999 * phi_trace[phi_trace.size() - 1 - window]) {
      status = DescentStatus::Stalled;
      break;
    }
  }
  if (phi < opts.tol_crit) status = DescentStatus::Converged;
  return RefineAttempt{std::move(u), phi, status};
}

}  // namespace

CriticalPointResult refine_critical(const LoopCurve& start, const fields::CurvatureField& field,
                                    double lambda, const DescentOptions& opts) {
  if (length_energy(start) < kLengthGuard)
    throw Error(ErrKind::NearConstantLoop, "refinement needs a nonconstant start");

  int evals = 0;
  std::vector<double> lengths;
  RefineAttempt best = refine_attempt(start, field, lambda, opts, evals, lengths);

  // A stalled attempt sits at a positive local minimum of the merit |E'|:
  // no root in this basin. The missing root usually lives a few percent
  // outward along the dilation family through the stalled loop (the
  // unstable direction of these saddles is close to pure scaling), so
  // rerun the iteration from rescaled copies until the budget runs out.
  if (opts.dilation_restarts && best.status == DescentStatus::Stalled) {
    const Vec2 center = barycenter(best.loop);
    for (const double sigma : {1.05, 1.1, 1.15, 1.2, 1.3, 0.95, 0.9}) {
      if (evals >= opts.max_evaluations) break;
      Mat2X pts = best.loop.pts();
      pts.colwise() -= center;
      pts *= sigma;
      pts.colwise() += center;
      if (length_energy(LoopCurve(pts)) < kLengthGuard) continue;
      RefineAttempt retry = refine_attempt(LoopCurve(pts), field, lambda, opts, evals, lengths);
      if (retry.status == DescentStatus::Converged) {
        best = std::move(retry);
        break;
      }
    }
  }

  LoopCurve u = std::move(best.loop);
  const double phi = best.phi;
  const DescentStatus status = best.status;

  double ode_res = kNaN;
  try {
    ode_res = verify::ode_residual(u, field, lambda);
  } catch (const Error&) {
  }
  int wind = 0;
  const Vec2 center = barycenter(u);
  const double off = 1e-3 * std::max(1.0, arc_length(u));
  for (const Vec2& probe : {center, Vec2(center + Vec2(off, off)), Vec2(center - Vec2(off, off))}) {
    try {
      wind = winding::point_index(u, probe);
      break;
    } catch (const Error&) {
    }
  }

  const double final_energy = fun::energy(u, field, lambda).energy;
  return CriticalPointResult{std::move(u),
                             final_energy,
                             phi,
                             ode_res,
                             wind,
                             status == DescentStatus::Converged,
                             status,
                             std::move(lengths)};
}

namespace {

paths::PathFamily build_sweep_path(const fields::CurvatureField& field, double lambda,
                                   const SweepOptions& opts) {
  const paths::Interval range{lambda, lambda};
  if (field.kind == fields::FieldKind::DoublyPeriodic) {
    try {
      return paths::initial_path_periodic(field, range, opts.num_samples, opts.path_nodes);
    } catch (const Error& err) {
      if (err.kind() != ErrKind::ZeroAverage) throw;
      return paths::initial_path_bump(field, lambda, opts.num_samples, opts.path_nodes);
    }
  }
  return paths::initial_path_k4(field, range, opts.num_samples, opts.path_nodes);
}

}  // namespace

LambdaSweep lambda_sweep(const fields::CurvatureField& field, std::vector<double> lambda_grid,
                         const SweepOptions& opts) {
  std::sort(lambda_grid.begin(), lambda_grid.end());
  lambda_grid.erase(std::unique(lambda_grid.begin(), lambda_grid.end(),
                                [](double x, double y) {
                                  return std::abs(x - y) <= 1e-12 * std::max(1.0, std::abs(x));
                                }),
                    lambda_grid.end());

  LambdaSweep sweep;
  for (const double lambda : lambda_grid) {
    double c = kNaN, grad = kNaN, ode = kNaN;
    uint8_t ok = 0;
    std::optional<CriticalPointResult> run;
    try {
      if (lambda == 0.0) throw Error(ErrKind::BadConfig, "lambda must be nonzero");
      const paths::PathFamily p = build_sweep_path(field, lambda, opts);
      const MountainPassEstimate est = estimate_c(p, field, lambda, opts.saddle);
      c = est.c_estimate;
      run = refine_critical(est.argmax_loop, field, lambda, opts.descent);
      grad = run->grad_dual_norm;
      ode = run->ode_residual;
      ok = est.converged && run->converged ? 1 : 0;
    } catch (const Error&) {
      // recorded inline; the sweep continues
    }
    sweep.lambdas.push_back(lambda);
    sweep.c_values.push_back(c);
    sweep.converged.push_back(ok);
    sweep.grad_norms.push_back(grad);
    sweep.ode_residuals.push_back(ode);
    sweep.runs.push_back(std::move(run));
    sweep.flagged.push_back(0);  // provisional; settled after the grid completes
    const size_t i = sweep.size() - 1;
    sweep.left_quotients.push_back(
        i == 0 ? kNaN
               : (sweep.c_values[i - 1] - sweep.c_values[i]) /
                     (sweep.lambdas[i] - sweep.lambdas[i - 1]));
    if (opts.on_entry) opts.on_entry(sweep);
  }

  const size_t n = sweep.size();
  sweep.flagged.assign(n, 0);
  std::vector<double> finite;
  for (size_t i = 1; i < n; ++i)
    if (std::isfinite(sweep.left_quotients[i])) finite.push_back(std::abs(sweep.left_quotients[i]));
  if (finite.size() >= 2) {
    std::sort(finite.begin(), finite.end());
    const double median = finite[finite.size() / 2];
    if (median > 0) {
      for (size_t i = 1; i < n; ++i)
        if (std::isfinite(sweep.left_quotients[i]) &&
            std::abs(sweep.left_quotients[i]) > 1e3 * median)
          sweep.flagged[i] = 1;
    }
  }

  double lc_min = std::numeric_limits<double>::infinity();
  double lc_max = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < n; ++i) {
    if (!sweep.converged[i]) continue;
    const double lc = sweep.lambdas[i] * sweep.c_values[i];
    lc_min = std::min(lc_min, lc);
    lc_max = std::max(lc_max, lc);
  }
  sweep.lambda_c_spread = lc_max >= lc_min ? lc_max - lc_min : 0.0;
  return sweep;
}

}  // namespace kloop::mp
