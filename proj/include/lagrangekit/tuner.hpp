#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lagrangekit/common.hpp"

namespace lagrangekit {

// sqrt(lo * hi); requires 0 < lo < hi.
double log_midpoint(double lo, double hi);

struct ProbeRecord {
  int iteration = 0;  // 0 for the two endpoint evaluations
  double coefficient = 0.0;
  double metric = 0.0;
  double accuracy = 0.0;
  double wall_seconds = 0.0;
};

// Log-scale bisection over a scalar coefficient against a target metric.
// The default direction assumes the metric decreases as the coefficient
// grows (density versus penalty strength); `inverted` flips it.
struct BisectionState {
  double lo = 0.0;
  double hi = 0.0;
  double target = 0.0;
  double tol = 0.0;
  int max_iters = 0;
  bool inverted = false;

  int steps_taken = 0;  // post-endpoint probes consumed
  bool terminated = false;
  std::vector<ProbeRecord> history;
};

BisectionState make_bisection(double lo, double hi, double target, double tol,
                              int max_iters, bool inverted = false);

// The coefficient the next probe should run at.
double next_probe(const BisectionState& state);

// Record the observation at the current probe and shrink the bracket:
// observed above target keeps the probe as the new lo (a larger
// coefficient is needed), otherwise it becomes the new hi. Terminates when
// |observed - target| <= tol or the probe budget is exhausted.
void bisect_step(BisectionState& state, double observed_metric,
                 double accuracy = 0.0, double wall_seconds = 0.0);

struct ProbeOutcome {
  double metric = 0.0;
  double accuracy = 0.0;
};

// Evaluates both endpoints first (recorded as iteration 0, matching how
// tuning tables label their bracket rows), then probes until termination.
// Returns the completed state; the history carries one row per solve.
BisectionState run_bisection(
    const std::function<ProbeOutcome(double coefficient)>& builder,
    BisectionState state);

void save_history_csv(const BisectionState& state, const std::string& path);

}  // namespace lagrangekit
