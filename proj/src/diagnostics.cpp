#include "lagrangekit/diagnostics.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

namespace lagrangekit {

const char* to_string(SecondOrder v) {
  switch (v) {
    case SecondOrder::pass: return "pass";
    case SecondOrder::fail: return "fail";
    case SecondOrder::skipped: return "skipped";
  }
  return "?";
}

const char* to_string(OscillationVerdict v) {
  switch (v) {
    case OscillationVerdict::oscillating: return "oscillating";
    case OscillationVerdict::converged: return "converged";
    case OscillationVerdict::undetermined: return "undetermined";
  }
  return "?";
}

std::string KktReport::to_text() const {
  std::ostringstream os;
  os << "feasible: " << (feasible ? "yes" : "no") << "\n"
     << "max_violation: " << format_sig(max_violation) << "\n"
     << "stationarity_residual: " << format_sig(stationarity_residual) << "\n"
     << "comp_slack: " << format_sig(comp_slack) << "\n"
     << "dual_sign_ok: " << (dual_sign_ok ? "yes" : "no") << "\n"
     << "first_order: " << (first_order_pass ? "pass" : "fail") << "\n"
     << "second_order: " << to_string(second_order) << "\n";
  if (second_order != SecondOrder::skipped) {
    os << "min_projected_eigenvalue: " << format_sig(min_projected_eigenvalue)
       << "\n"
       << "null_space_dim: " << null_space_dim << "\n";
  }
  return os.str();
}

std::string KktReport::csv_header() const {
  return "feasible,max_violation,stationarity_residual,comp_slack,"
         "dual_sign_ok,first_order,second_order,min_projected_eigenvalue,"
         "null_space_dim";
}

std::string KktReport::csv_row() const {
  std::ostringstream os;
  os << (feasible ? 1 : 0) << ',' << format_sig(max_violation) << ','
     << format_sig(stationarity_residual) << ',' << format_sig(comp_slack)
     << ',' << (dual_sign_ok ? 1 : 0) << ',' << (first_order_pass ? 1 : 0)
     << ',' << to_string(second_order) << ','
     << format_sig(min_projected_eigenvalue) << ',' << null_space_dim;
  return os.str();
}

KktReport kkt_first_order(const ConstrainedProblem& problem, const Vector& x,
                          const Vector& lambda, const Vector& mu,
                          const KktTolerances& tol) {
  require(tol.feas > 0.0 && tol.stat > 0.0 && tol.comp_slack > 0.0,
          "kkt: tolerances must be positive");
  require(x.size() == problem.dim_primal, "kkt: point dimension mismatch");
  require(lambda.size() == problem.num_ineq && mu.size() == problem.num_eq,
          "kkt: multiplier shape mismatch");

  Evaluation eval = evaluate(problem, x);
  KktReport report;

  double max_v = 0.0;
  if (problem.num_ineq > 0) {
    max_v = std::max(max_v, (eval.g - problem.eps_g).maxCoeff());
  }
  if (problem.num_eq > 0) {
    max_v = std::max(max_v, (eval.h - problem.eps_h).cwiseAbs().maxCoeff());
  }
  report.max_violation = std::max(max_v, 0.0);
  report.feasible = max_v <= tol.feas;

  DualState dual = DualState::zeros(problem.num_ineq, problem.num_eq);
  dual.lambda = lambda;
  dual.mu = mu;
  report.stationarity_residual =
      stationarity_residual(problem, eval, dual, x);

  double cs = 0.0;
  for (int i = 0; i < problem.num_ineq; ++i) {
    cs = std::max(cs, std::abs(lambda[i] * (eval.g[i] - problem.eps_g[i])));
  }
  report.comp_slack = cs;
  report.dual_sign_ok =
      problem.num_ineq == 0 || (lambda.array() >= 0.0).all();

  report.first_order_pass =
      report.feasible && report.stationarity_residual <= tol.stat &&
      report.comp_slack <= tol.comp_slack && report.dual_sign_ok;
  return report;
}

namespace {

// Central-difference gradient of the Lagrangian, falling back to one-sided
// stencils at active box bounds so the evaluator never leaves the domain.
Matrix fd_lagrangian_hessian(const ConstrainedProblem& problem,
                             const Vector& x, const DualState& dual,
                             double step) {
  const int d = problem.dim_primal;
  Matrix H(d, d);
  auto grad_at = [&](const Vector& p) {
    return lagrangian_grad_x(evaluate(problem, p), dual);
  };
  for (int j = 0; j < d; ++j) {
    double lo = problem.lower.size() > 0 ? problem.lower[j]
                                         : -std::numeric_limits<double>::infinity();
    double hi = problem.upper.size() > 0 ? problem.upper[j]
                                         : std::numeric_limits<double>::infinity();
    Vector xp = x, xm = x;
    if (x[j] + step <= hi && x[j] - step >= lo) {
      xp[j] += step;
      xm[j] -= step;
      H.col(j) = (grad_at(xp) - grad_at(xm)) / (2.0 * step);
    } else if (x[j] + step <= hi) {
      xp[j] += step;
      H.col(j) = (grad_at(xp) - grad_at(x)) / step;
    } else {
      xm[j] -= step;
      H.col(j) = (grad_at(x) - grad_at(xm)) / step;
    }
  }
  return 0.5 * (H + H.transpose());
}

}  // namespace

KktReport kkt_certify(const ConstrainedProblem& problem, const Vector& x,
                      const Vector& lambda, const Vector& mu,
                      const KktTolerances& tol) {
  KktReport report = kkt_first_order(problem, x, lambda, mu, tol);
  const int d = problem.dim_primal;
  if (d > 50) {
    report.second_order = SecondOrder::skipped;
    return report;
  }

  Evaluation eval = evaluate(problem, x);
  DualState dual = DualState::zeros(problem.num_ineq, problem.num_eq);
  dual.lambda = lambda;
  dual.mu = mu;

  // Gradients of strongly active constraints span the excluded directions:
  // tight inequalities with positive multipliers, every equality row, and
  // active box bounds whose inferred multiplier is positive.
  std::vector<Vector> rows;
  for (int i = 0; i < problem.num_ineq; ++i) {
    bool tight = std::abs(eval.g[i] - problem.eps_g[i]) <= tol.active;
    if (tight && lambda[i] > tol.active) {
      rows.push_back(eval.jac_g.row(i).transpose());
    }
  }
  for (int i = 0; i < problem.num_eq; ++i) {
    rows.push_back(eval.jac_h.row(i).transpose());
  }
  if (problem.lower.size() > 0) {
    Vector grad = lagrangian_grad_x(eval, dual);
    for (int j = 0; j < d; ++j) {
      bool at_lower = x[j] <= problem.lower[j] + tol.active;
      bool at_upper = x[j] >= problem.upper[j] - tol.active;
      double bound_mult = at_lower ? grad[j] : (at_upper ? -grad[j] : 0.0);
      if ((at_lower || at_upper) && bound_mult > tol.active) {
        Vector e = Vector::Zero(d);
        e[j] = 1.0;
        rows.push_back(e);
      }
    }
  }

  Matrix null_basis;
  if (rows.empty()) {
    null_basis = Matrix::Identity(d, d);
  } else {
    Matrix A(static_cast<int>(rows.size()), d);
    for (size_t i = 0; i < rows.size(); ++i) A.row(static_cast<int>(i)) = rows[i];
    Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullV);
    double rank_tol = 1e-10 * std::max(1.0, svd.singularValues()[0]);
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i) {
      if (svd.singularValues()[i] > rank_tol) ++rank;
    }
    null_basis = svd.matrixV().rightCols(d - rank);
  }

  report.null_space_dim = static_cast<int>(null_basis.cols());
  if (null_basis.cols() == 0) {
    // Active constraint gradients span the whole space.
    report.second_order = SecondOrder::pass;
    report.min_projected_eigenvalue =
        std::numeric_limits<double>::infinity();
    return report;
  }

  Matrix H = fd_lagrangian_hessian(problem, x, dual, tol.fd_step);
  Matrix projected = null_basis.transpose() * H * null_basis;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(projected);
  double min_eig = eig.eigenvalues().minCoeff();
  report.min_projected_eigenvalue = min_eig;
  report.second_order = min_eig > 0.0 ? SecondOrder::pass : SecondOrder::fail;
  return report;
}

OscillationReport detect_oscillation(const Trace& trace, int coord_index,
                                     int window, double amp_threshold) {
  require(window >= 1, "detect_oscillation: window must be positive");
  require(amp_threshold >= 0.0, "detect_oscillation: threshold must be >= 0");
  OscillationReport report;
  report.window = window;
  long n = static_cast<long>(trace.records.size());
  if (n < 2L * window) {
    report.verdict = OscillationVerdict::undetermined;
    return report;
  }
  require(coord_index >= 0 &&
              coord_index < trace.records.front().x.size(),
          "detect_oscillation: coordinate index out of range");

  auto window_amp = [&](long begin) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (long i = begin; i < begin + window; ++i) {
      double v = trace.records[static_cast<size_t>(i)].x[coord_index];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return hi - lo;
  };

  report.amplitude = window_amp(n - window);
  report.prev_amplitude = window_amp(n - 2L * window);
  if (report.amplitude < amp_threshold) {
    report.verdict = OscillationVerdict::converged;
  } else {
    double larger = std::max(report.amplitude, report.prev_amplitude);
    bool sustained =
        std::abs(report.amplitude - report.prev_amplitude) <= 0.5 * larger;
    report.verdict = sustained ? OscillationVerdict::oscillating
                               : OscillationVerdict::undetermined;
  }
  return report;
}

}  // namespace lagrangekit
