#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace lagrangekit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Caller violated a documented precondition (bad shapes, out-of-range
// arguments, malformed input).
struct ContractError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// An evaluator produced a non-finite value or a forward pass blew up.
struct EvaluationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Data generation could not satisfy its own postcondition (e.g. a
// separability check failing repeatedly).
struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Seeded RNG with the handful of draws the toolkit needs. Wrapping the
// engine keeps every sampling decision in one place so runs stay
// reproducible for a fixed seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    // double in (0,1); never returns the endpoints.
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // integer in [0, n)
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// All user-facing numeric output uses 6 significant digits.
std::string format_sig(double x);

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractError(msg);
}

}  // namespace lagrangekit
