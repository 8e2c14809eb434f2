#pragma once

#include <cstdint>
#include <vector>

#include "lagrangekit/problem.hpp"

namespace lagrangekit {

enum class PrimalKind { gd, adam };

struct PrimalOptConfig {
  PrimalKind kind = PrimalKind::gd;
  double step_size = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
};

enum class DualKind { ga, nupi };

struct DualOptConfig {
  DualKind kind = DualKind::ga;
  double step_size = 0.01;
  double kappa_p = 0.0;  // damping gain of the PI update
  double nu = 0.0;       // EMA factor; only nu = 0 is implemented
};

enum class SchemeKind { penalized, lagrangian, augmented, proxy };

struct SchemeConfig {
  SchemeKind kind = SchemeKind::lagrangian;
  Vector penalty_c_g;  // penalized only
  Vector penalty_c_h;  // penalized only
  double alm_c = 0.0;  // augmented only
  std::string surrogate_id;  // proxy only
};

// First/second moment state for Adam, one instance per parameter vector.
struct AdamState {
  Vector m;
  Vector v;
  long t = 0;

  static AdamState zeros(int d);
};

struct RunState {
  Vector x;
  DualState dual;
  AdamState adam;
  long iter = 0;
};

struct TraceRecord {
  long t = 0;
  Vector x;
  double f = 0.0;
  Vector g;
  Vector h;
  Vector lambda;
  Vector mu;
  double stationarity = 0.0;
  bool is_feasible = false;
};

struct Trace {
  std::vector<TraceRecord> records;
  std::uint64_t seed = 0;
  long iterations = 0;
  double wall_seconds = 0.0;
  SchemeConfig scheme;
  PrimalOptConfig primal;
  DualOptConfig dual;
};

// x - eta * grad; the caller applies domain projection.
Vector gd_step(const Vector& x, const Vector& grad, double eta);

// Bias-corrected Adam update; returns the new point and mutates moments.
Vector adam_step(AdamState& state, const Vector& x, const Vector& grad,
                 const PrimalOptConfig& cfg);

// mu += eta * viol_h;  lambda = max(0, lambda + eta * viol_g)
void dual_ga_step(DualState& dual, const ViolationVector& viol, double eta);

// PI-controlled dual ascent on the violation signal:
//   lambda = [lambda + eta * (e_t + kappa_p * (e_t - e_{t-1}))]_+
// The first call is a pure integral step (e_{t-1} := e_t). Same law for mu
// without the projection.
void dual_nupi_step(DualState& dual, const ViolationVector& viol,
                    const DualOptConfig& cfg);

// One alternating step, dual first: multipliers are updated from the
// violations at x_t, then the primal descends the Lagrangian built with
// the fresh multipliers, then the domain projection is applied. Exactly
// one evaluator call.
void gda_iteration(const ConstrainedProblem& problem, RunState& state,
                   const PrimalOptConfig& primal_cfg,
                   const DualOptConfig& dual_cfg);

// One descent step on f + c_g'g + c_h'h, then projection.
void penalized_iteration(const ConstrainedProblem& problem, RunState& state,
                         const PrimalOptConfig& primal_cfg, const Vector& c_g,
                         const Vector& c_h);

// GDA on the augmented Lagrangian: the primal gradient gains
// c * relu(g - eps_g)'jac_g + c * (h - eps_h)'jac_h; dual updates are
// unchanged (ascent on the raw violations).
void alm_iteration(const ConstrainedProblem& problem, RunState& state,
                   const PrimalOptConfig& primal_cfg,
                   const DualOptConfig& dual_cfg, double alm_c);

// L(x) + (c/2)||relu(g - eps_g)||^2 + (c/2)||h - eps_h||^2
double augmented_value(const Evaluation& eval, const DualState& dual,
                       const Vector& eps_g, const Vector& eps_h, double alm_c);

// Dual step from the true constraint values, primal step from the
// surrogate's gradients with the shared multipliers.
void proxy_gda_iteration(const ConstrainedProblem& problem,
                         const ConstrainedProblem& surrogate, RunState& state,
                         const PrimalOptConfig& primal_cfg,
                         const DualOptConfig& dual_cfg);

RunState make_run_state(const ConstrainedProblem& problem);
RunState make_run_state(const ConstrainedProblem& problem, const Vector& x0);

struct RunOptions {
  long iters = 1;
  std::uint64_t seed = 0;
  long stride = 1;  // record every stride-th iteration (plus first and last)
};

// Drives one scheme for a fixed budget and records the trajectory. The
// record at index k holds the state entering that iteration, so a full
// trace has iters + 1 records. Deterministic for a fixed seed.
Trace run(const ConstrainedProblem& problem, const SchemeConfig& scheme,
          const PrimalOptConfig& primal_cfg, const DualOptConfig& dual_cfg,
          const RunOptions& opts,
          const ConstrainedProblem* surrogate = nullptr);

// Infinity norm of the Lagrangian gradient with components pushing outside
// an active box bound zeroed out.
double stationarity_residual(const ConstrainedProblem& problem,
                             const Evaluation& eval, const DualState& dual,
                             const Vector& x);

}  // namespace lagrangekit
