#pragma once

#include <string>

#include "lagrangekit/optimizers.hpp"
#include "lagrangekit/problem.hpp"

namespace lagrangekit {

struct KktTolerances {
  double feas = 1e-6;
  double stat = 1e-5;
  double comp_slack = 1e-6;
  double active = 1e-6;  // activity detection for constraints and bounds
  double fd_step = 1e-5;
};

enum class SecondOrder { pass, fail, skipped };

struct KktReport {
  bool feasible = false;
  double max_violation = 0.0;
  double stationarity_residual = 0.0;
  double comp_slack = 0.0;  // max_i |lambda_i (g_i - eps_i)|
  bool dual_sign_ok = false;
  bool first_order_pass = false;
  SecondOrder second_order = SecondOrder::skipped;
  double min_projected_eigenvalue = 0.0;  // meaningful unless skipped
  int null_space_dim = -1;

  std::string to_text() const;       // flat key: value block
  std::string csv_header() const;
  std::string csv_row() const;
};

// Feasibility, projected stationarity, complementary slackness and dual
// sign. Active box bounds act as extra linear constraints: components of
// the Lagrangian gradient pushing outside an active bound are zeroed.
KktReport kkt_first_order(const ConstrainedProblem& problem, const Vector& x,
                          const Vector& lambda, const Vector& mu,
                          const KktTolerances& tol = {});

// Builds the Hessian of the Lagrangian by central differences of its
// gradient (one-sided at active bounds), projects it onto the null space
// of strongly active constraint gradients, and checks the minimum
// eigenvalue. Strong activity means the constraint is tight and its
// multiplier is positive; weakly active constraints and bounds leave
// their directions in the tested space. Guarded to dim <= 50.
KktReport kkt_certify(const ConstrainedProblem& problem, const Vector& x,
                      const Vector& lambda, const Vector& mu,
                      const KktTolerances& tol = {});

enum class OscillationVerdict { oscillating, converged, undetermined };

struct OscillationReport {
  int window = 0;
  double amplitude = 0.0;       // max - min over the final window
  double prev_amplitude = 0.0;  // same over the penultimate window
  OscillationVerdict verdict = OscillationVerdict::undetermined;
};

// Amplitude of one primal coordinate over the trailing window. Oscillating
// means the amplitude clears the threshold and the penultimate window
// shows the same amplitude within 50% (not decaying). Traces shorter than
// two windows come back undetermined.
OscillationReport detect_oscillation(const Trace& trace, int coord_index,
                                     int window, double amp_threshold);

const char* to_string(SecondOrder v);
const char* to_string(OscillationVerdict v);

}  // namespace lagrangekit
