#include "lagrangekit/problem.hpp"

#include <cmath>
#include <cstdio>

namespace lagrangekit {

std::string format_sig(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

DualState DualState::zeros(int m, int n) {
  DualState s;
  s.lambda = Vector::Zero(m);
  s.mu = Vector::Zero(n);
  s.prev_err_g = Vector::Zero(m);
  s.prev_err_h = Vector::Zero(n);
  s.initialized = false;
  return s;
}

Vector ConstrainedProblem::project(const Vector& x) const {
  require(x.size() == dim_primal, name + ": point dimension mismatch");
  if (lower.size() == 0) return x;
  return x.cwiseMax(lower).cwiseMin(upper);
}

bool ConstrainedProblem::has_bounds() const {
  if (lower.size() == 0) return false;
  for (int i = 0; i < dim_primal; ++i) {
    if (std::isfinite(lower[i]) || std::isfinite(upper[i])) return true;
  }
  return false;
}

ConstrainedProblem make_problem(std::string name, int d, int m, int n) {
  require(d >= 1 && m >= 0 && n >= 0, "bad problem dimensions");
  ConstrainedProblem p;
  p.name = std::move(name);
  p.dim_primal = d;
  p.num_ineq = m;
  p.num_eq = n;
  p.eps_g = Vector::Zero(m);
  p.eps_h = Vector::Zero(n);
  const double inf = std::numeric_limits<double>::infinity();
  p.lower = Vector::Constant(d, -inf);
  p.upper = Vector::Constant(d, inf);
  p.x0 = Vector::Zero(d);
  return p;
}

namespace {

void check_finite(const ConstrainedProblem& problem, const Evaluation& e) {
  auto fail = [&](const std::string& what) {
    throw EvaluationError(problem.name + ": non-finite " + what);
  };
  if (!std::isfinite(e.f)) fail("objective value");
  if (!e.g.allFinite()) fail("inequality constraint value");
  if (!e.h.allFinite()) fail("equality constraint value");
  if (!e.grad_f.allFinite()) fail("objective gradient");
  if (!e.jac_g.allFinite()) fail("inequality Jacobian");
  if (!e.jac_h.allFinite()) fail("equality Jacobian");
}

void check_shapes(const ConstrainedProblem& problem, const Evaluation& e) {
  bool ok = e.g.size() == problem.num_ineq && e.h.size() == problem.num_eq &&
            e.grad_f.size() == problem.dim_primal &&
            e.jac_g.rows() == problem.num_ineq &&
            e.jac_g.cols() == problem.dim_primal &&
            e.jac_h.rows() == problem.num_eq &&
            e.jac_h.cols() == problem.dim_primal;
  require(ok, problem.name + ": evaluator output shape mismatch");
}

}  // namespace

Evaluation evaluate(const ConstrainedProblem& problem, const Vector& x) {
  require(x.size() == problem.dim_primal,
          problem.name + ": point dimension mismatch");
  Evaluation e = problem.evaluator(x);
  check_shapes(problem, e);
  check_finite(problem, e);
  return e;
}

double lagrangian_value(const Evaluation& eval, const DualState& dual,
                        const Vector& eps_g, const Vector& eps_h) {
  require(dual.lambda.size() == eval.g.size() && eps_g.size() == eval.g.size(),
          "lagrangian_value: inequality shape mismatch");
  require(dual.mu.size() == eval.h.size() && eps_h.size() == eval.h.size(),
          "lagrangian_value: equality shape mismatch");
  return eval.f + dual.lambda.dot(eval.g - eps_g) + dual.mu.dot(eval.h - eps_h);
}

double penalized_value(const Evaluation& eval, const Vector& c_g,
                       const Vector& c_h) {
  require(c_g.size() == eval.g.size() && c_h.size() == eval.h.size(),
          "penalized_value: shape mismatch");
  require((c_g.array() >= 0.0).all(),
          "penalized_value: inequality coefficients must be nonnegative");
  return eval.f + c_g.dot(eval.g) + c_h.dot(eval.h);
}

Vector weighted_grad(const Evaluation& eval, const Vector& c_g,
                     const Vector& c_h) {
  require(c_g.size() == eval.jac_g.rows() && c_h.size() == eval.jac_h.rows(),
          "weighted_grad: shape mismatch");
  Vector grad = eval.grad_f;
  if (c_g.size() > 0) grad += eval.jac_g.transpose() * c_g;
  if (c_h.size() > 0) grad += eval.jac_h.transpose() * c_h;
  return grad;
}

Vector lagrangian_grad_x(const Evaluation& eval, const DualState& dual) {
  return weighted_grad(eval, dual.lambda, dual.mu);
}

ViolationVector violations(const Evaluation& eval, const Vector& eps_g,
                           const Vector& eps_h) {
  ViolationVector v;
  v.viol_g = eval.g - eps_g;
  v.viol_h = eval.h - eps_h;
  return v;
}

bool feasible(const Evaluation& eval, const Vector& eps_g, const Vector& eps_h,
              double tol) {
  require(tol >= 0.0, "feasible: tolerance must be nonnegative");
  ViolationVector v = violations(eval, eps_g, eps_h);
  bool ok = true;
  if (v.viol_g.size() > 0) ok = ok && v.viol_g.maxCoeff() <= tol;
  if (v.viol_h.size() > 0) ok = ok && v.viol_h.cwiseAbs().maxCoeff() <= tol;
  return ok;
}

}  // namespace lagrangekit
