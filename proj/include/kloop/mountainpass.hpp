#pragma once

// Numerical mountain-pass machinery: string relaxation of an admissible path
// to estimate the level c_lambda, refinement of near-critical loops to
// critical points, and lambda sweeps with Denjoy difference-quotient
// diagnostics.

#include <functional>
#include <optional>
#include <vector>

#include "kloop/paths.hpp"

namespace kloop::mp {

struct SaddleOptions {
  int max_iterations = 5000;
  double tol_saddle = 1e-4;   // dual norm at the max node
  double armijo = 0.5;        // backtracking factor
  int redistribute_every = 50;
};

struct MountainPassEstimate {
  double c_estimate = 0.0;
  LoopCurve argmax_loop;
  double argmax_s = 0.0;
  double grad_dual_norm_at_max = 0.0;
  int iterations = 0;
  bool converged = false;
  paths::PathFamily path_final;
  std::vector<double> max_history;  // accepted max-along-path values, non-increasing
};

struct DescentOptions {
  int max_evaluations = 100000;  // budget of gradient/residual evaluations
  double tol_crit = 1e-6;
  // When the damped Newton iteration bottoms out at a positive residual (a
  // local minimum of |E'| with no root in its basin), retry from dilation
  // rescalings of the stalled loop about its barycenter. The root's basin
  // typically sits a few percent outward along the dilation family.
  bool dilation_restarts = true;
};

enum class DescentStatus { Converged, BudgetExhausted, CollapseToConstant, Stalled };

struct CriticalPointResult {
  LoopCurve loop;
  double energy = 0.0;
  double grad_dual_norm = 0.0;
  double ode_residual = 0.0;
  int winding_at_barycenter = 0;
  bool converged = false;
  DescentStatus status = DescentStatus::BudgetExhausted;
  std::vector<double> length_history;
};

struct LambdaSweep {
  std::vector<double> lambdas;
  std::vector<double> c_values;        // NaN where the run failed
  std::vector<double> left_quotients;  // quotient over (lambda_{i-1}, lambda_i); NaN at i = 0
  std::vector<uint8_t> flagged;        // Denjoy blow-up candidates
  std::vector<uint8_t> converged;
  std::vector<double> grad_norms;
  std::vector<double> ode_residuals;
  std::vector<std::optional<CriticalPointResult>> runs;  // per-lambda refinement, when it ran

  // Spread of lambda * c over converged entries; for constant fields this is
  // the numerical drift of an exact invariant (c = pi / (lambda K0)).
  double lambda_c_spread = 0.0;

  size_t size() const { return lambdas.size(); }
};

struct SweepOptions {
  Eigen::Index num_samples = 256;
  int path_nodes = 33;
  SaddleOptions saddle;
  DescentOptions descent;
  // Called after each grid entry is appended (flag fields still pending);
  // lets the CLI flush partial results as the sweep advances.
  std::function<void(const LambdaSweep&)> on_entry;
};

// Relax the interior path nodes along their negative H1 gradients with
// per-node backtracking (each node's energy is non-increasing, hence so is
// the max), reparametrize accepted moves, and periodically redistribute nodes
// with extra resolution near the max. Endpoints never move. Stops when the
// max node is near-critical or the iteration budget runs out.
MountainPassEstimate estimate_c(const paths::PathFamily& path, const fields::CurvatureField& field,
                                double lambda, const SaddleOptions& opts = {});

// Drive E'_lambda(u) to zero from a near-critical start: damped Newton on the
// Riesz residual with a matrix-free Krylov solve in the H1 inner product and
// a line search on the residual norm. Mountain-pass targets are saddles, so
// the merit that decreases monotonically is the residual norm, not the
// energy. Accepted steps are reparametrized and, for periodic fields,
// normalized into the cell. If the merit bottoms out above tolerance and
// dilation restarts are enabled, the iteration reruns from rescaled copies
// of the stalled loop (see DescentOptions::dilation_restarts).
CriticalPointResult refine_critical(const LoopCurve& start, const fields::CurvatureField& field,
                                    double lambda, const DescentOptions& opts = {});

// estimate_c + refine_critical over an ascending grid (deduplicated); per-run
// failures are recorded inline and the sweep continues. Left difference
// quotients flag candidate non-Denjoy points.
LambdaSweep lambda_sweep(const fields::CurvatureField& field, std::vector<double> lambda_grid,
                         const SweepOptions& opts = {});

}  // namespace kloop::mp
