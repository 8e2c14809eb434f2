#pragma once

#include <functional>
#include <limits>
#include <string>

#include "lagrangekit/common.hpp"

namespace lagrangekit {

// Objective/constraint values and first derivatives at one point.
struct Evaluation {
  double f = 0.0;
  Vector g;       // m inequality constraint values (raw, no level offset)
  Vector h;       // n equality constraint values
  Vector grad_f;  // d
  Matrix jac_g;   // m x d
  Matrix jac_h;   // n x d
};

struct ViolationVector {
  Vector viol_g;  // g(x) - eps_g
  Vector viol_h;  // h(x) - eps_h
};

// Inequality multipliers (projected to be nonnegative), equality
// multipliers, and the previous-error memory used by the PI dual update.
struct DualState {
  Vector lambda;
  Vector mu;
  Vector prev_err_g;
  Vector prev_err_h;
  bool initialized = false;

  static DualState zeros(int m, int n);
};

// A constrained minimization problem: minimize f(x) over a box domain
// subject to g(x) <= eps_g and h(x) = eps_h. The evaluator returns the
// value and all first derivatives in one call; constraints share forward
// computations with the objective.
struct ConstrainedProblem {
  std::string name;
  int dim_primal = 0;
  int num_ineq = 0;
  int num_eq = 0;
  Vector eps_g;
  Vector eps_h;
  Vector lower;  // box domain; -inf entries mean unbounded below
  Vector upper;  // +inf entries mean unbounded above
  Vector x0;     // default starting point
  std::function<Evaluation(const Vector&)> evaluator;

  // Clamp to the box. Idempotent by construction.
  Vector project(const Vector& x) const;

  bool has_bounds() const;
};

ConstrainedProblem make_problem(std::string name, int d, int m, int n);

// Evaluates and checks that every output entry is finite; a non-finite
// entry raises EvaluationError naming the offending component.
Evaluation evaluate(const ConstrainedProblem& problem, const Vector& x);

// f + lambda'(g - eps_g) + mu'(h - eps_h)
double lagrangian_value(const Evaluation& eval, const DualState& dual,
                        const Vector& eps_g, const Vector& eps_h);

// f + c_g'g + c_h'h with fixed coefficients (no level offsets).
double penalized_value(const Evaluation& eval, const Vector& c_g,
                       const Vector& c_h);

// grad_f + c_g'jac_g + c_h'jac_h. Shared by the penalized primal step and
// lagrangian_grad_x so the two schemes produce bitwise-equal directions
// when c matches the multipliers.
Vector weighted_grad(const Evaluation& eval, const Vector& c_g,
                     const Vector& c_h);

// grad_f + lambda'jac_g + mu'jac_h
Vector lagrangian_grad_x(const Evaluation& eval, const DualState& dual);

ViolationVector violations(const Evaluation& eval, const Vector& eps_g,
                           const Vector& eps_h);

// max(viol_g) <= tol and max|viol_h| <= tol; empty blocks pass vacuously.
bool feasible(const Evaluation& eval, const Vector& eps_g, const Vector& eps_h,
              double tol);

inline constexpr double kDefaultFeasTol = 1e-6;

}  // namespace lagrangekit
