#include "lagrangekit/tuner.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

namespace lagrangekit {

double log_midpoint(double lo, double hi) {
  require(lo > 0.0 && hi > 0.0, "log_midpoint: bracket must be positive");
  require(lo < hi, "log_midpoint: bracket must satisfy lo < hi");
  return std::sqrt(lo * hi);
}

BisectionState make_bisection(double lo, double hi, double target, double tol,
                              int max_iters, bool inverted) {
  require(lo > 0.0 && lo < hi, "bisection: bracket must satisfy 0 < lo < hi");
  require(tol > 0.0, "bisection: tolerance must be positive");
  require(max_iters >= 0, "bisection: max_iters must be nonnegative");
  BisectionState s;
  s.lo = lo;
  s.hi = hi;
  s.target = target;
  s.tol = tol;
  s.max_iters = max_iters;
  s.inverted = inverted;
  return s;
}

double next_probe(const BisectionState& state) {
  return log_midpoint(state.lo, state.hi);
}

void bisect_step(BisectionState& state, double observed_metric,
                 double accuracy, double wall_seconds) {
  require(!state.terminated, "bisect_step: search already terminated");
  double c = next_probe(state);
  state.steps_taken += 1;
  state.history.push_back(
      {state.steps_taken, c, observed_metric, accuracy, wall_seconds});

  bool needs_larger = state.inverted ? observed_metric < state.target
                                     : observed_metric > state.target;
  if (needs_larger) {
    state.lo = c;
  } else {
    state.hi = c;
  }
  if (std::abs(observed_metric - state.target) <= state.tol ||
      state.steps_taken >= state.max_iters) {
    state.terminated = true;
  }
}

BisectionState run_bisection(
    const std::function<ProbeOutcome(double coefficient)>& builder,
    BisectionState state) {
  auto timed = [&](double c) {
    auto t0 = std::chrono::steady_clock::now();
    ProbeOutcome out = builder(c);
    double secs = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    return std::pair<ProbeOutcome, double>(out, secs);
  };

  auto [lo_out, lo_secs] = timed(state.lo);
  state.history.push_back({0, state.lo, lo_out.metric, lo_out.accuracy, lo_secs});
  auto [hi_out, hi_secs] = timed(state.hi);
  state.history.push_back({0, state.hi, hi_out.metric, hi_out.accuracy, hi_secs});

  if (state.max_iters == 0) {
    state.terminated = true;
    return state;
  }
  while (!state.terminated) {
    double c = next_probe(state);
    auto [out, secs] = timed(c);
    bisect_step(state, out.metric, out.accuracy, secs);
  }
  return state;
}

void save_history_csv(const BisectionState& state, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "save_history_csv: cannot open " + path);
  out << "iteration,coefficient,metric,accuracy,wall_time\n";
  for (const ProbeRecord& r : state.history) {
    out << r.iteration << ',' << format_sig(r.coefficient) << ','
        << format_sig(r.metric) << ',' << format_sig(r.accuracy) << ','
        << format_sig(r.wall_seconds) << '\n';
  }
}

}  // namespace lagrangekit
