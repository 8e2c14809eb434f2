#include "lagrangekit/optimizers.hpp"

#include <chrono>
#include <cmath>

namespace lagrangekit {

AdamState AdamState::zeros(int d) {
  AdamState s;
  s.m = Vector::Zero(d);
  s.v = Vector::Zero(d);
  s.t = 0;
  return s;
}

Vector gd_step(const Vector& x, const Vector& grad, double eta) {
  require(x.size() == grad.size(), "gd_step: shape mismatch");
  return x - eta * grad;
}

Vector adam_step(AdamState& state, const Vector& x, const Vector& grad,
                 const PrimalOptConfig& cfg) {
  require(x.size() == grad.size() && state.m.size() == x.size(),
          "adam_step: shape mismatch");
  state.t += 1;
  state.m = cfg.adam_beta1 * state.m + (1.0 - cfg.adam_beta1) * grad;
  state.v = cfg.adam_beta2 * state.v +
            (1.0 - cfg.adam_beta2) * grad.cwiseProduct(grad);
  double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.t));
  Vector mhat = state.m / bc1;
  Vector vhat = state.v / bc2;
  return x - cfg.step_size *
                 (mhat.array() / (vhat.array().sqrt() + cfg.adam_epsilon))
                     .matrix();
}

void dual_ga_step(DualState& dual, const ViolationVector& viol, double eta) {
  require(eta > 0.0, "dual_ga_step: step size must be positive");
  require(dual.lambda.size() == viol.viol_g.size() &&
              dual.mu.size() == viol.viol_h.size(),
          "dual_ga_step: shape mismatch");
  dual.mu += eta * viol.viol_h;
  dual.lambda = (dual.lambda + eta * viol.viol_g).cwiseMax(0.0);
}

void dual_nupi_step(DualState& dual, const ViolationVector& viol,
                    const DualOptConfig& cfg) {
  require(cfg.kind == DualKind::nupi, "dual_nupi_step: wrong optimizer kind");
  require(cfg.step_size > 0.0 && cfg.kappa_p >= 0.0,
          "dual_nupi_step: bad config");
  require(cfg.nu == 0.0, "dual_nupi_step: only nu = 0 is implemented");
  require(dual.lambda.size() == viol.viol_g.size() &&
              dual.mu.size() == viol.viol_h.size(),
          "dual_nupi_step: shape mismatch");
  if (!dual.initialized) {
    dual.prev_err_g = viol.viol_g;
    dual.prev_err_h = viol.viol_h;
    dual.initialized = true;
  }
  Vector sig_g =
      viol.viol_g + cfg.kappa_p * (viol.viol_g - dual.prev_err_g);
  Vector sig_h =
      viol.viol_h + cfg.kappa_p * (viol.viol_h - dual.prev_err_h);
  dual.mu += cfg.step_size * sig_h;
  dual.lambda = (dual.lambda + cfg.step_size * sig_g).cwiseMax(0.0);
  dual.prev_err_g = viol.viol_g;
  dual.prev_err_h = viol.viol_h;
}

namespace {

void dual_update(DualState& dual, const ViolationVector& viol,
                 const DualOptConfig& cfg) {
  if (cfg.kind == DualKind::ga) {
    dual_ga_step(dual, viol, cfg.step_size);
  } else {
    dual_nupi_step(dual, viol, cfg);
  }
}

void primal_update(const ConstrainedProblem& problem, RunState& state,
                   const PrimalOptConfig& cfg, const Vector& grad) {
  Vector next = cfg.kind == PrimalKind::gd
                    ? gd_step(state.x, grad, cfg.step_size)
                    : adam_step(state.adam, state.x, grad, cfg);
  state.x = problem.project(next);
}

void gda_step_with_eval(const ConstrainedProblem& problem,
                        const Evaluation& eval, RunState& state,
                        const PrimalOptConfig& primal_cfg,
                        const DualOptConfig& dual_cfg) {
  ViolationVector viol = violations(eval, problem.eps_g, problem.eps_h);
  dual_update(state.dual, viol, dual_cfg);
  Vector grad = lagrangian_grad_x(eval, state.dual);
  primal_update(problem, state, primal_cfg, grad);
  state.iter += 1;
}

void alm_step_with_eval(const ConstrainedProblem& problem,
                        const Evaluation& eval, RunState& state,
                        const PrimalOptConfig& primal_cfg,
                        const DualOptConfig& dual_cfg, double alm_c) {
  ViolationVector viol = violations(eval, problem.eps_g, problem.eps_h);
  dual_update(state.dual, viol, dual_cfg);
  Vector grad = lagrangian_grad_x(eval, state.dual);
  if (alm_c != 0.0) {
    if (viol.viol_g.size() > 0) {
      Vector relu_g = viol.viol_g.cwiseMax(0.0);
      grad += alm_c * (eval.jac_g.transpose() * relu_g);
    }
    if (viol.viol_h.size() > 0) {
      grad += alm_c * (eval.jac_h.transpose() * viol.viol_h);
    }
  }
  primal_update(problem, state, primal_cfg, grad);
  state.iter += 1;
}

}  // namespace

void gda_iteration(const ConstrainedProblem& problem, RunState& state,
                   const PrimalOptConfig& primal_cfg,
                   const DualOptConfig& dual_cfg) {
  Evaluation eval = evaluate(problem, state.x);
  gda_step_with_eval(problem, eval, state, primal_cfg, dual_cfg);
}

void penalized_iteration(const ConstrainedProblem& problem, RunState& state,
                         const PrimalOptConfig& primal_cfg, const Vector& c_g,
                         const Vector& c_h) {
  require((c_g.array() >= 0.0).all(),
          "penalized_iteration: inequality coefficients must be nonnegative");
  Evaluation eval = evaluate(problem, state.x);
  Vector grad = weighted_grad(eval, c_g, c_h);
  primal_update(problem, state, primal_cfg, grad);
  state.iter += 1;
}

void alm_iteration(const ConstrainedProblem& problem, RunState& state,
                   const PrimalOptConfig& primal_cfg,
                   const DualOptConfig& dual_cfg, double alm_c) {
  require(alm_c >= 0.0, "alm_iteration: quadratic coefficient must be nonnegative");
  Evaluation eval = evaluate(problem, state.x);
  alm_step_with_eval(problem, eval, state, primal_cfg, dual_cfg, alm_c);
}

double augmented_value(const Evaluation& eval, const DualState& dual,
                       const Vector& eps_g, const Vector& eps_h, double alm_c) {
  double value = lagrangian_value(eval, dual, eps_g, eps_h);
  if (eval.g.size() > 0) {
    value += 0.5 * alm_c * (eval.g - eps_g).cwiseMax(0.0).squaredNorm();
  }
  if (eval.h.size() > 0) {
    value += 0.5 * alm_c * (eval.h - eps_h).squaredNorm();
  }
  return value;
}

void proxy_gda_iteration(const ConstrainedProblem& problem,
                         const ConstrainedProblem& surrogate, RunState& state,
                         const PrimalOptConfig& primal_cfg,
                         const DualOptConfig& dual_cfg) {
  require(surrogate.num_ineq == problem.num_ineq &&
              surrogate.num_eq == problem.num_eq &&
              surrogate.dim_primal == problem.dim_primal,
          "proxy_gda_iteration: surrogate shape mismatch");
  require(surrogate.eps_g == problem.eps_g && surrogate.eps_h == problem.eps_h,
          "proxy_gda_iteration: surrogate levels mismatch");
  Evaluation true_eval = evaluate(problem, state.x);
  ViolationVector viol = violations(true_eval, problem.eps_g, problem.eps_h);
  dual_update(state.dual, viol, dual_cfg);
  Evaluation sur_eval = evaluate(surrogate, state.x);
  Vector grad = lagrangian_grad_x(sur_eval, state.dual);
  primal_update(problem, state, primal_cfg, grad);
  state.iter += 1;
}

RunState make_run_state(const ConstrainedProblem& problem) {
  return make_run_state(problem, problem.x0);
}

RunState make_run_state(const ConstrainedProblem& problem, const Vector& x0) {
  RunState s;
  s.x = problem.project(x0);
  s.dual = DualState::zeros(problem.num_ineq, problem.num_eq);
  s.adam = AdamState::zeros(problem.dim_primal);
  s.iter = 0;
  return s;
}

double stationarity_residual(const ConstrainedProblem& problem,
                             const Evaluation& eval, const DualState& dual,
                             const Vector& x) {
  Vector grad = lagrangian_grad_x(eval, dual);
  if (problem.lower.size() > 0) {
    const double tol = 1e-12;
    for (int i = 0; i < grad.size(); ++i) {
      if (x[i] <= problem.lower[i] + tol && grad[i] > 0.0) grad[i] = 0.0;
      if (x[i] >= problem.upper[i] - tol && grad[i] < 0.0) grad[i] = 0.0;
    }
  }
  return grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
}

namespace {

TraceRecord make_record(const ConstrainedProblem& problem,
                        const Evaluation& eval, const RunState& state) {
  TraceRecord r;
  r.t = state.iter;
  r.x = state.x;
  r.f = eval.f;
  r.g = eval.g;
  r.h = eval.h;
  r.lambda = state.dual.lambda;
  r.mu = state.dual.mu;
  r.stationarity = stationarity_residual(problem, eval, state.dual, state.x);
  r.is_feasible = feasible(eval, problem.eps_g, problem.eps_h, kDefaultFeasTol);
  return r;
}

}  // namespace

Trace run(const ConstrainedProblem& problem, const SchemeConfig& scheme,
          const PrimalOptConfig& primal_cfg, const DualOptConfig& dual_cfg,
          const RunOptions& opts, const ConstrainedProblem* surrogate) {
  require(opts.iters >= 1, "run: iteration budget must be at least 1");
  require(opts.stride >= 1, "run: stride must be at least 1");
  if (scheme.kind == SchemeKind::proxy) {
    require(surrogate != nullptr, "run: proxy scheme needs a surrogate");
  }
  if (scheme.kind == SchemeKind::penalized) {
    require(scheme.penalty_c_g.size() == problem.num_ineq &&
                scheme.penalty_c_h.size() == problem.num_eq,
            "run: penalty coefficient shape mismatch");
    require((scheme.penalty_c_g.array() >= 0.0).all(),
            "run: inequality penalty coefficients must be nonnegative");
  }
  if (scheme.kind == SchemeKind::augmented) {
    require(scheme.alm_c >= 0.0, "run: alm_c must be nonnegative");
  }

  auto t_start = std::chrono::steady_clock::now();
  RunState state = make_run_state(problem);
  Trace trace;
  trace.seed = opts.seed;
  trace.iterations = opts.iters;
  trace.scheme = scheme;
  trace.primal = primal_cfg;
  trace.dual = dual_cfg;

  for (long t = 0; t < opts.iters; ++t) {
    Evaluation eval = evaluate(problem, state.x);
    if (t % opts.stride == 0) {
      trace.records.push_back(make_record(problem, eval, state));
    }
    switch (scheme.kind) {
      case SchemeKind::penalized: {
        Vector grad =
            weighted_grad(eval, scheme.penalty_c_g, scheme.penalty_c_h);
        primal_update(problem, state, primal_cfg, grad);
        state.iter += 1;
        break;
      }
      case SchemeKind::lagrangian:
        gda_step_with_eval(problem, eval, state, primal_cfg, dual_cfg);
        break;
      case SchemeKind::augmented:
        alm_step_with_eval(problem, eval, state, primal_cfg, dual_cfg,
                           scheme.alm_c);
        break;
      case SchemeKind::proxy: {
        ViolationVector viol = violations(eval, problem.eps_g, problem.eps_h);
        dual_update(state.dual, viol, dual_cfg);
        Evaluation sur_eval = evaluate(*surrogate, state.x);
        Vector grad = lagrangian_grad_x(sur_eval, state.dual);
        primal_update(problem, state, primal_cfg, grad);
        state.iter += 1;
        break;
      }
    }
  }
  Evaluation final_eval = evaluate(problem, state.x);
  trace.records.push_back(make_record(problem, final_eval, state));

  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return trace;
}

}  // namespace lagrangekit
