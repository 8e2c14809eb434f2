#include "lagrangekit/problems.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace lagrangekit {

Concave2D::Concave2D(double eps_level) : eps(eps_level) {
  require(eps > 0.0 && eps < 1.0, "concave2d: eps must lie in (0, 1)");
}

Evaluation concave2d_eval(double eps, double x, double y) {
  require(eps > 0.0 && eps < 1.0, "concave2d: eps must lie in (0, 1)");
  require(x >= 0.0 && x <= M_PI / 2.0,
          "concave2d: x outside [0, pi/2]; project before evaluating");
  double s = std::sin(x);
  double c = std::cos(x);
  double q = 1.0 + y * y;
  Evaluation e;
  e.f = q * c;
  e.g = Vector::Constant(1, q * s);
  e.h = Vector(0);
  e.grad_f = Vector(2);
  e.grad_f << -q * s, 2.0 * y * c;
  e.jac_g = Matrix(1, 2);
  e.jac_g << q * c, 2.0 * y * s;
  e.jac_h = Matrix(0, 2);
  return e;
}

ConstrainedProblem Concave2D::problem() const {
  ConstrainedProblem p = make_problem("concave2d", 2, 1, 0);
  p.eps_g[0] = eps;
  p.lower[0] = 0.0;
  p.upper[0] = M_PI / 2.0;
  p.x0 = Vector(2);
  p.x0 << M_PI / 4.0, 0.1;
  double eps_level = eps;
  p.evaluator = [eps_level](const Vector& v) {
    return concave2d_eval(eps_level, v[0], v[1]);
  };
  return p;
}

Concave2DSolution concave2d_solution(double eps) {
  require(eps > 0.0 && eps < 1.0, "concave2d_solution: eps must lie in (0, 1)");
  Concave2DSolution sol;
  sol.x = std::asin(eps);
  sol.y = 0.0;
  sol.lambda = eps / std::sqrt(1.0 - eps * eps);
  sol.f = std::sqrt(1.0 - eps * eps);
  return sol;
}

Evaluation convexquad_eval(double x) {
  Evaluation e;
  e.f = x * x;
  e.g = Vector::Constant(1, 1.0 - x);
  e.h = Vector(0);
  e.grad_f = Vector::Constant(1, 2.0 * x);
  e.jac_g = Matrix::Constant(1, 1, -1.0);
  e.jac_h = Matrix(0, 1);
  return e;
}

ConstrainedProblem ConvexQuad::problem() const {
  ConstrainedProblem p = make_problem("convexquad", 1, 1, 0);
  p.x0 = Vector::Constant(1, 3.0);
  p.evaluator = [](const Vector& v) { return convexquad_eval(v[0]); };
  return p;
}

bool linearly_separable(const Dataset& data) {
  // Perceptron with an augmented bias coordinate: converges iff a
  // separating hyperplane exists; a pass with zero mistakes certifies a
  // hard margin on the sample.
  const int n = static_cast<int>(data.labels.size());
  Eigen::Vector3d w = Eigen::Vector3d::Zero();
  const int max_epochs = 2000;
  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    int mistakes = 0;
    for (int i = 0; i < n; ++i) {
      Eigen::Vector3d xi(data.points(i, 0), data.points(i, 1), 1.0);
      double target = data.labels[i] == 0 ? -1.0 : 1.0;
      if (target * w.dot(xi) <= 0.0) {
        w += target * xi;
        ++mistakes;
      }
    }
    if (mistakes == 0) return true;
  }
  return false;
}

Dataset make_gaussian_mixture(const GaussianMixtureSpec& spec) {
  require(spec.n_per_class >= 1, "gaussian mixture: n_per_class must be >= 1");
  require(spec.std_dev > 0.0, "gaussian mixture: std must be positive");
  const double half = spec.mean_separation / 2.0;
  for (int attempt = 0; attempt < 100; ++attempt) {
    Rng rng(spec.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(attempt));
    Dataset data;
    data.points = Matrix(2 * spec.n_per_class, 2);
    data.labels = Eigen::VectorXi(2 * spec.n_per_class);
    for (int i = 0; i < spec.n_per_class; ++i) {
      data.points(i, 0) = -half + spec.std_dev * rng.normal();
      data.points(i, 1) = spec.std_dev * rng.normal();
      data.labels[i] = 0;
    }
    for (int i = 0; i < spec.n_per_class; ++i) {
      int row = spec.n_per_class + i;
      data.points(row, 0) = half + spec.std_dev * rng.normal();
      data.points(row, 1) = spec.std_dev * rng.normal();
      data.labels[row] = 1;
    }
    if (linearly_separable(data)) return data;
  }
  throw GenerationError(
      "gaussian mixture: no separable sample after 100 attempts; "
      "spec is too overlapped");
}

void save_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "save_dataset_csv: cannot open " + path);
  out << "x1,x2,label\n";
  char buf[96];
  for (int i = 0; i < data.labels.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%d\n", data.points(i, 0),
                  data.points(i, 1), data.labels[i]);
    out << buf;
  }
}

Dataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "load_dataset_csv: cannot open " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)),
          "load_dataset_csv: empty file");
  require(line == "x1,x2,label", "load_dataset_csv: bad header in " + path);
  std::vector<double> x1, x2;
  std::vector<int> lab;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    require(std::getline(ss, a, ',') && std::getline(ss, b, ',') &&
                std::getline(ss, c, ','),
            "load_dataset_csv: malformed row");
    x1.push_back(std::stod(a));
    x2.push_back(std::stod(b));
    lab.push_back(std::stoi(c));
  }
  Dataset data;
  data.points = Matrix(static_cast<int>(x1.size()), 2);
  data.labels = Eigen::VectorXi(static_cast<int>(x1.size()));
  for (size_t i = 0; i < x1.size(); ++i) {
    data.points(static_cast<int>(i), 0) = x1[i];
    data.points(static_cast<int>(i), 1) = x2[i];
    data.labels[static_cast<int>(i)] = lab[i];
  }
  return data;
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Shared forward pass for the rate problem. params = (w1, w2, b).
struct RateForward {
  double loss;
  Vector grad_loss;   // 3
  double true_rate;   // mean[1(z <= 0)]
  double soft_rate;   // mean[1 - sigmoid(z)]
  Vector grad_soft;   // d soft_rate / d params
};

RateForward rate_forward(const Dataset& data, const Vector& params) {
  const int n = static_cast<int>(data.labels.size());
  RateForward out;
  out.loss = 0.0;
  out.grad_loss = Vector::Zero(3);
  out.true_rate = 0.0;
  out.soft_rate = 0.0;
  out.grad_soft = Vector::Zero(3);
  for (int i = 0; i < n; ++i) {
    double x1 = data.points(i, 0);
    double x2 = data.points(i, 1);
    double z = params[0] * x1 + params[1] * x2 + params[2];
    double s = sigmoid(z);
    double y = static_cast<double>(data.labels[i]);
    // numerically stable binary cross-entropy
    double ce = z >= 0.0 ? std::log1p(std::exp(-z)) + (1.0 - y) * z
                         : std::log1p(std::exp(z)) - y * z;
    out.loss += ce;
    double dz = s - y;
    out.grad_loss[0] += dz * x1;
    out.grad_loss[1] += dz * x2;
    out.grad_loss[2] += dz;
    if (z <= 0.0) out.true_rate += 1.0;
    out.soft_rate += 1.0 - s;
    double sp = s * (1.0 - s);
    out.grad_soft[0] += sp * x1;
    out.grad_soft[1] += sp * x2;
    out.grad_soft[2] += sp;
  }
  out.loss /= n;
  out.grad_loss /= n;
  out.true_rate /= n;
  out.soft_rate /= n;
  // soft_rate = mean[1 - sigma]; the surrogate constraint is
  // rho - soft_rate, whose gradient is +mean[sigma'(z) (x, 1)].
  out.grad_soft /= n;
  return out;
}

}  // namespace

ConstrainedProblem RateProblem::true_problem() const {
  require(data.labels.size() > 0, "rate problem: dataset is empty");
  ConstrainedProblem p = make_problem("rate_true", 3, 1, 0);
  p.eps_g[0] = 0.0;
  Dataset d = data;
  double rho = target_rate;
  p.evaluator = [d, rho](const Vector& params) {
    RateForward fw = rate_forward(d, params);
    Evaluation e;
    e.f = fw.loss;
    e.g = Vector::Constant(1, rho - fw.true_rate);
    e.h = Vector(0);
    e.grad_f = fw.grad_loss;
    // The indicator is flat almost everywhere; its only honest gradient
    // is zero. Primal updates must come through the surrogate.
    e.jac_g = Matrix::Zero(1, 3);
    e.jac_h = Matrix(0, 3);
    return e;
  };
  return p;
}

ConstrainedProblem RateProblem::surrogate_problem() const {
  require(data.labels.size() > 0, "rate problem: dataset is empty");
  ConstrainedProblem p = make_problem("rate_surrogate", 3, 1, 0);
  p.eps_g[0] = 0.0;
  Dataset d = data;
  double rho = target_rate;
  p.evaluator = [d, rho](const Vector& params) {
    RateForward fw = rate_forward(d, params);
    Evaluation e;
    e.f = fw.loss;
    e.g = Vector::Constant(1, rho - fw.soft_rate);
    e.h = Vector(0);
    e.grad_f = fw.grad_loss;
    e.jac_g = Matrix(1, 3);
    e.jac_g.row(0) = fw.grad_soft.transpose();
    e.jac_h = Matrix(0, 3);
    return e;
  };
  return p;
}

double RateProblem::class0_rate(const Vector& params) const {
  return rate_forward(data, params).true_rate;
}

double RateProblem::accuracy(const Vector& params) const {
  const int n = static_cast<int>(data.labels.size());
  int correct = 0;
  for (int i = 0; i < n; ++i) {
    double z = params[0] * data.points(i, 0) + params[1] * data.points(i, 1) +
               params[2];
    int pred = z <= 0.0 ? 0 : 1;
    if (pred == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / n;
}

}  // namespace lagrangekit
