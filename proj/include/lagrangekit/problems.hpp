#pragma once

#include <cstdint>
#include <string>

#include "lagrangekit/problem.hpp"

namespace lagrangekit {

// minimize (1 + y^2) cos(x)  s.t.  (1 + y^2) sin(x) <= eps,
// x in [0, pi/2], y free. Concave in x, so the penalized reformulation
// only ever reaches the domain endpoints.
struct Concave2D {
  double eps;

  explicit Concave2D(double eps_level);
  ConstrainedProblem problem() const;
};

Evaluation concave2d_eval(double eps, double x, double y);

struct Concave2DSolution {
  double x;
  double y;
  double lambda;
  double f;
};

// (arcsin eps, 0, eps/sqrt(1-eps^2), sqrt(1-eps^2))
Concave2DSolution concave2d_solution(double eps);

// minimize x^2  s.t.  1 - x <= 0. Smallest convex instance with a nonzero
// optimal multiplier: KKT point (x, lambda) = (1, 2).
struct ConvexQuad {
  ConstrainedProblem problem() const;
};

Evaluation convexquad_eval(double x);

struct Dataset {
  Matrix points;           // N x 2
  Eigen::VectorXi labels;  // 0 or 1
};

struct GaussianMixtureSpec {
  double mean_separation = 2.0;  // distance between class means along x1
  double std_dev = 0.25;
  int n_per_class = 100;
  std::uint64_t seed = 0;
};

// Two isotropic Gaussian blobs at (+-separation/2, 0). Resamples with a
// derived seed until a hard-margin separability check passes; 100
// consecutive failures raise GenerationError.
Dataset make_gaussian_mixture(const GaussianMixtureSpec& spec);

bool linearly_separable(const Dataset& data);

void save_dataset_csv(const Dataset& data, const std::string& path);
Dataset load_dataset_csv(const std::string& path);

// Binary linear classifier (w1, w2, b) minimizing mean cross-entropy of
// sigmoid(w'x + b), constrained to predict class 0 (w'x + b <= 0) for at
// least target_rate of the training points. The indicator constraint is
// non-differentiable; the surrogate replaces it with the expected
// soft rate mean[1 - sigmoid(z)].
struct RateProblem {
  Dataset data;
  double target_rate = 0.7;

  // g = target_rate - mean[1(z <= 0)], zero Jacobian (flat a.e.).
  ConstrainedProblem true_problem() const;
  // g = target_rate - mean[1 - sigmoid(z)], analytic Jacobian.
  ConstrainedProblem surrogate_problem() const;

  double class0_rate(const Vector& params) const;
  double accuracy(const Vector& params) const;
};

}  // namespace lagrangekit
