#include "lagrangekit/smallnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace lagrangekit {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// beta * ln(-gamma/zeta), the shift inside the active-probability sigmoid
double active_shift(const GateParams& g) {
  return g.beta * std::log(-g.gamma / g.zeta);
}

}  // namespace

double droprate_log_alpha(double droprate) {
  require(droprate > 0.0 && droprate < 1.0, "droprate must lie in (0, 1)");
  return std::log((1.0 - droprate) / droprate);
}

double hard_concrete_sample(double log_alpha, double beta, double gamma,
                            double zeta, double u) {
  require(u > 0.0 && u < 1.0, "hard_concrete_sample: u must lie in (0, 1)");
  require(beta > 0.0 && gamma < 0.0 && zeta > 1.0,
          "hard_concrete_sample: bad distribution parameters");
  double s = sigmoid((std::log(u) - std::log1p(-u) + log_alpha) / beta);
  double sbar = s * (zeta - gamma) + gamma;
  return std::min(1.0, std::max(0.0, sbar));
}

double expected_l0(const GateParams& gates) {
  double shift = active_shift(gates);
  double total = 0.0;
  for (int i = 0; i < gates.log_alpha.size(); ++i) {
    total += sigmoid(gates.log_alpha[i] - shift);
  }
  return total;
}

Vector expected_l0_grad(const GateParams& gates) {
  double shift = active_shift(gates);
  Vector grad(gates.log_alpha.size());
  for (int i = 0; i < gates.log_alpha.size(); ++i) {
    double p = sigmoid(gates.log_alpha[i] - shift);
    grad[i] = p * (1.0 - p);
  }
  return grad;
}

DenseNet make_dense_net(const DenseNetSpec& spec, Rng& rng) {
  require(spec.widths.size() >= 2, "dense net needs at least two widths");
  for (int w : spec.widths) require(w >= 1, "dense net widths must be >= 1");
  DenseNet net;
  net.spec = spec;
  for (size_t l = 0; l + 1 < spec.widths.size(); ++l) {
    int in = spec.widths[l];
    int out = spec.widths[l + 1];
    double lim = std::sqrt(6.0 / (in + out));
    Matrix W(out, in);
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) W(r, c) = rng.uniform(-lim, lim);
    }
    net.W.push_back(std::move(W));
    net.b.push_back(Vector::Zero(out));
  }
  return net;
}

double SparsityProblem::density() const {
  return expected_l0(gates) / num_gates();
}

SparsityProblem make_sparsity_problem(const DenseNetSpec& spec,
                                      ClassDataset data, double density_target,
                                      std::uint64_t seed) {
  require(density_target > 0.0 && density_target <= 1.0,
          "density target must lie in (0, 1]");
  SparsityProblem p;
  Rng rng(seed);
  p.net = make_dense_net(spec, rng);
  int gate_count = spec.widths.front();
  for (size_t l = 1; l + 1 < spec.widths.size(); ++l) gate_count += spec.widths[l];
  p.gates.log_alpha = Vector::Constant(gate_count, droprate_log_alpha(0.01));
  p.data = std::move(data);
  p.density_target = density_target;
  return p;
}

GateSample sample_gates(const SparsityProblem& problem, Rng& rng) {
  GateSample s;
  s.u_logit = Vector(problem.num_gates());
  for (int i = 0; i < s.u_logit.size(); ++i) {
    double u = rng.uniform();
    s.u_logit[i] = std::log(u) - std::log1p(-u);
  }
  return s;
}

namespace {

struct GateValues {
  Vector z;         // gate values in [0, 1]
  Vector dz_dla;    // zero where the stretch is clamped
};

GateValues realize_gates(const GateParams& gates, const GateSample& sample) {
  GateValues out;
  int n = static_cast<int>(gates.log_alpha.size());
  out.z = Vector(n);
  out.dz_dla = Vector(n);
  double span = gates.zeta - gates.gamma;
  for (int i = 0; i < n; ++i) {
    double s = sigmoid((sample.u_logit[i] + gates.log_alpha[i]) / gates.beta);
    double sbar = s * span + gates.gamma;
    if (sbar <= 0.0) {
      out.z[i] = 0.0;
      out.dz_dla[i] = 0.0;
    } else if (sbar >= 1.0) {
      out.z[i] = 1.0;
      out.dz_dla[i] = 0.0;
    } else {
      out.z[i] = sbar;
      out.dz_dla[i] = span * s * (1.0 - s) / gates.beta;
    }
  }
  return out;
}

Vector test_time_gates(const GateParams& gates) {
  int n = static_cast<int>(gates.log_alpha.size());
  Vector z(n);
  double span = gates.zeta - gates.gamma;
  for (int i = 0; i < n; ++i) {
    double sbar = sigmoid(gates.log_alpha[i]) * span + gates.gamma;
    z[i] = std::min(1.0, std::max(0.0, sbar));
  }
  return z;
}

// Offsets of each gate group inside the flat log_alpha vector: input gates
// first, then hidden layers in order.
std::vector<int> gate_offsets(const DenseNetSpec& spec) {
  std::vector<int> offs;
  int off = 0;
  offs.push_back(off);
  off += spec.widths.front();
  for (size_t l = 1; l + 1 < spec.widths.size(); ++l) {
    offs.push_back(off);
    off += spec.widths[l];
  }
  offs.push_back(off);  // sentinel = total
  return offs;
}

struct ForwardPass {
  double loss;
  std::vector<Matrix> pre;    // pre-activations per layer (B x out)
  std::vector<Matrix> acts;   // gated activations fed to each layer (B x in)
  Matrix probs;               // B x k
};

ForwardPass forward_gated(const DenseNet& net, const Matrix& Xb,
                          const Eigen::VectorXi& yb,
                          const Vector* z /* nullable = ungated */,
                          const std::vector<int>& offs) {
  const int B = static_cast<int>(Xb.rows());
  const size_t L = net.W.size();
  ForwardPass fp;
  fp.acts.resize(L);
  fp.pre.resize(L);

  Matrix a = Xb;
  if (z) a = a.array().rowwise() * z->segment(offs[0], Xb.cols()).transpose().array();
  for (size_t l = 0; l < L; ++l) {
    fp.acts[l] = a;
    Matrix h = a * net.W[l].transpose();
    h.rowwise() += net.b[l].transpose();
    fp.pre[l] = h;
    if (l + 1 < L) {
      a = h.cwiseMax(0.0);
      if (z) {
        a = a.array().rowwise() *
            z->segment(offs[l + 1], a.cols()).transpose().array();
      }
    } else {
      a = h;
    }
  }

  // softmax cross-entropy, mean over the batch
  Matrix logits = a;
  Vector rowmax = logits.rowwise().maxCoeff();
  logits.colwise() -= rowmax;
  Matrix expv = logits.array().exp();
  Vector denom = expv.rowwise().sum();
  fp.probs = expv.array().colwise() / denom.array();
  double loss = 0.0;
  for (int i = 0; i < B; ++i) {
    loss -= logits(i, yb[i]) - std::log(denom[i]);
  }
  fp.loss = loss / B;
  if (!std::isfinite(fp.loss)) {
    throw EvaluationError("smallnet: non-finite loss in forward pass");
  }
  return fp;
}

}  // namespace

ForwardBackwardResult forward_backward_with_sample(
    const SparsityProblem& problem, const std::vector<int>& batch,
    const GateSample& sample) {
  require(!batch.empty(), "forward_backward: batch must be nonempty");
  const DenseNet& net = problem.net;
  const size_t L = net.W.size();
  const int B = static_cast<int>(batch.size());
  const int d = net.spec.widths.front();

  Matrix Xb(B, d);
  Eigen::VectorXi yb(B);
  for (int i = 0; i < B; ++i) {
    Xb.row(i) = problem.data.X.row(batch[i]);
    yb[i] = problem.data.labels[batch[i]];
  }

  std::vector<int> offs = gate_offsets(net.spec);
  GateValues gv = realize_gates(problem.gates, sample);
  ForwardPass fp = forward_gated(net, Xb, yb, &gv.z, offs);

  ForwardBackwardResult out;
  out.loss = fp.loss;
  out.density = problem.density();
  out.grads.dW.resize(L);
  out.grads.db.resize(L);
  out.grads.dlog_alpha = Vector::Zero(problem.num_gates());

  // dL/dlogits
  Matrix delta = fp.probs;
  for (int i = 0; i < B; ++i) delta(i, yb[i]) -= 1.0;
  delta /= static_cast<double>(B);

  for (size_t l = L; l-- > 0;) {
    out.grads.dW[l] = delta.transpose() * fp.acts[l];
    out.grads.db[l] = delta.colwise().sum().transpose();
    if (l == 0) break;
    Matrix da = delta * net.W[l];  // gradient w.r.t. gated activation l
    // gate gradient for hidden layer l: sum_b da * relu(pre)
    Matrix r = fp.pre[l - 1].cwiseMax(0.0);
    int off = offs[l];
    int width = net.spec.widths[l];
    for (int j = 0; j < width; ++j) {
      double dz = da.col(j).dot(r.col(j));
      out.grads.dlog_alpha[off + j] = dz * gv.dz_dla[off + j];
    }
    Matrix dr =
        da.array().rowwise() * gv.z.segment(off, width).transpose().array();
    delta = dr.cwiseProduct((fp.pre[l - 1].array() > 0.0).cast<double>().matrix());
  }

  // input gates
  Matrix da0 = delta * net.W[0];  // B x d, gradient w.r.t. gated input
  for (int j = 0; j < d; ++j) {
    double dz = da0.col(j).dot(Xb.col(j));
    out.grads.dlog_alpha[j] = dz * gv.dz_dla[j];
  }
  return out;
}

ForwardBackwardResult forward_backward(const SparsityProblem& problem,
                                       const std::vector<int>& batch,
                                       Rng& rng) {
  GateSample sample = sample_gates(problem, rng);
  return forward_backward_with_sample(problem, batch, sample);
}

double evaluate_accuracy(const SparsityProblem& problem) {
  const DenseNet& net = problem.net;
  std::vector<int> offs = gate_offsets(net.spec);
  Vector z = test_time_gates(problem.gates);
  const int n = static_cast<int>(problem.data.X.rows());
  ForwardPass fp = forward_gated(net, problem.data.X, problem.data.labels, &z,
                                 offs);
  int correct = 0;
  for (int i = 0; i < n; ++i) {
    int argmax = 0;
    fp.probs.row(i).maxCoeff(&argmax);
    if (argmax == problem.data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / n;
}

namespace {

struct AdamBuf {
  Matrix m, v;
  void init(const Matrix& like) {
    m = Matrix::Zero(like.rows(), like.cols());
    v = Matrix::Zero(like.rows(), like.cols());
  }
  void step(Matrix& p, const Matrix& g, double lr, double b1, double b2,
            double eps, long t) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    double bc1 = 1.0 - std::pow(b1, static_cast<double>(t));
    double bc2 = 1.0 - std::pow(b2, static_cast<double>(t));
    p.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
  }
};

std::vector<std::vector<int>> make_batches(int n, int batch, Rng& rng) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  // Fisher-Yates with the run rng; deterministic per seed.
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[i], perm[j]);
  }
  std::vector<std::vector<int>> batches;
  for (int start = 0; start < n; start += batch) {
    int end = std::min(n, start + batch);
    batches.emplace_back(perm.begin() + start, perm.begin() + end);
  }
  return batches;
}

}  // namespace

SparsityTrainResult train_sparsity(SparsityProblem& problem,
                                   const SparsityTrainConfig& cfg) {
  require(cfg.epochs >= 1 && cfg.batch >= 1, "train_sparsity: bad config");
  const size_t L = problem.net.W.size();
  const int n = static_cast<int>(problem.data.X.rows());
  Rng rng(cfg.seed);

  std::vector<AdamBuf> aW(L), ab(L);
  for (size_t l = 0; l < L; ++l) {
    aW[l].init(problem.net.W[l]);
    ab[l].init(problem.net.b[l]);
  }
  AdamBuf ala;
  Matrix la_like = problem.gates.log_alpha;
  ala.init(la_like);

  DualState dual = DualState::zeros(1, 0);
  long t = 0;
  double last_loss = 0.0;
  const double inv_gates = 1.0 / problem.num_gates();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto batches = make_batches(n, cfg.batch, rng);
    for (const auto& batch : batches) {
      ForwardBackwardResult fb;
      if (cfg.gates_frozen_at_one) {
        // z identically 1: no sampling, no gate updates.
        GateSample frozen;
        frozen.u_logit = Vector::Constant(problem.num_gates(), 1e6);
        fb = forward_backward_with_sample(problem, batch, frozen);
      } else {
        fb = forward_backward(problem, batch, rng);
      }
      last_loss = fb.loss;
      ++t;

      Vector la_grad = fb.grads.dlog_alpha;
      if (!cfg.gates_frozen_at_one) {
        if (cfg.mode == SparsityTrainConfig::Mode::penalized) {
          la_grad += cfg.penalty_c * expected_l0_grad(problem.gates);
        } else {
          // dual ascent on the density violation, primal sees
          // lambda * d(density)/d(log_alpha)
          ViolationVector viol;
          viol.viol_g =
              Vector::Constant(1, problem.density() - problem.density_target);
          viol.viol_h = Vector(0);
          if (cfg.dual.kind == DualKind::ga) {
            dual_ga_step(dual, viol, cfg.dual.step_size);
          } else {
            dual_nupi_step(dual, viol, cfg.dual);
          }
          la_grad +=
              dual.lambda[0] * inv_gates * expected_l0_grad(problem.gates);
        }
      }

      for (size_t l = 0; l < L; ++l) {
        aW[l].step(problem.net.W[l], fb.grads.dW[l], cfg.lr, cfg.adam_beta1,
                   cfg.adam_beta2, cfg.adam_epsilon, t);
        Matrix bg = fb.grads.db[l];
        Matrix bm = problem.net.b[l];
        ab[l].step(bm, bg, cfg.lr, cfg.adam_beta1, cfg.adam_beta2,
                   cfg.adam_epsilon, t);
        problem.net.b[l] = bm;
      }
      if (!cfg.gates_frozen_at_one) {
        Matrix la = problem.gates.log_alpha;
        Matrix lg = la_grad;
        ala.step(la, lg, cfg.lr, cfg.adam_beta1, cfg.adam_beta2,
                 cfg.adam_epsilon, t);
        problem.gates.log_alpha = la;
      }
    }
  }

  SparsityTrainResult res;
  res.density = problem.density();
  res.train_accuracy = evaluate_accuracy(problem);
  res.final_loss = last_loss;
  res.lambda = dual.lambda.size() > 0 ? dual.lambda[0] : 0.0;
  return res;
}

SparsityTrainResult train_ungated(DenseNet& net, const ClassDataset& data,
                                  const SparsityTrainConfig& cfg) {
  SparsityProblem shim;
  shim.net = net;
  shim.gates.log_alpha = Vector::Constant(
      net.spec.widths.front() +
          std::accumulate(net.spec.widths.begin() + 1,
                          net.spec.widths.end() - 1, 0),
      droprate_log_alpha(0.01));
  shim.data = data;
  shim.density_target = 1.0;
  SparsityTrainConfig frozen = cfg;
  frozen.gates_frozen_at_one = true;
  SparsityTrainResult res = train_sparsity(shim, frozen);
  net = shim.net;
  return res;
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  require(in.good(), "idx: truncated header in " + path);
  return (static_cast<std::uint32_t>(buf[0]) << 24) |
         (static_cast<std::uint32_t>(buf[1]) << 16) |
         (static_cast<std::uint32_t>(buf[2]) << 8) |
         static_cast<std::uint32_t>(buf[3]);
}

}  // namespace

ClassDataset load_idx(const std::string& images_path,
                      const std::string& labels_path, int limit) {
  std::ifstream img(images_path, std::ios::binary);
  require(img.good(), "idx: cannot open " + images_path);
  require(read_be32(img, images_path) == 2051u,
          "idx: bad image magic in " + images_path);
  int n = static_cast<int>(read_be32(img, images_path));
  int rows = static_cast<int>(read_be32(img, images_path));
  int cols = static_cast<int>(read_be32(img, images_path));

  std::ifstream lab(labels_path, std::ios::binary);
  require(lab.good(), "idx: cannot open " + labels_path);
  require(read_be32(lab, labels_path) == 2049u,
          "idx: bad label magic in " + labels_path);
  int nl = static_cast<int>(read_be32(lab, labels_path));
  require(nl == n, "idx: image/label count mismatch");

  if (limit > 0 && limit < n) n = limit;
  ClassDataset data;
  data.X = Matrix(n, rows * cols);
  data.labels = Eigen::VectorXi(n);
  data.num_classes = 10;
  std::vector<unsigned char> pix(static_cast<size_t>(rows) * cols);
  for (int i = 0; i < n; ++i) {
    img.read(reinterpret_cast<char*>(pix.data()), pix.size());
    require(img.good(), "idx: truncated image data");
    for (size_t j = 0; j < pix.size(); ++j) {
      data.X(i, static_cast<int>(j)) = pix[j] / 255.0;
    }
    char l = 0;
    lab.read(&l, 1);
    require(lab.good(), "idx: truncated label data");
    data.labels[i] = static_cast<int>(static_cast<unsigned char>(l));
  }
  return data;
}

ClassDataset make_synthetic_digits(int n, std::uint64_t seed) {
  require(n >= 10, "synthetic digits: need at least 10 samples");
  const int d = 784;
  const int k = 10;
  const int n_useful = 80;
  const double tau = 2.5;
  const double mag_scale = 2.2;
  const double flip = 0.03;

  Rng rng(seed);
  ClassDataset data;
  data.X = Matrix(n, d);
  data.labels = Eigen::VectorXi(n);
  data.num_classes = k;

  Matrix templates(k, n_useful);
  for (int c = 0; c < k; ++c) {
    for (int j = 0; j < n_useful; ++j) templates(c, j) = tau * rng.normal();
  }
  Vector mags(d - n_useful);
  for (int j = 0; j < mags.size(); ++j) {
    mags[j] = mag_scale * std::pow(10.0, rng.uniform(-1.5, 0.5));
  }
  for (int i = 0; i < n; ++i) {
    int y = static_cast<int>(rng.below(k));
    data.labels[i] = y;
    for (int j = 0; j < n_useful; ++j) {
      data.X(i, j) = templates(y, j) + rng.normal();
    }
    for (int j = 0; j < mags.size(); ++j) {
      data.X(i, n_useful + j) = mags[j] * rng.normal();
    }
  }
  int n_flip = static_cast<int>(flip * n);
  for (int i = 0; i < n_flip; ++i) {
    data.labels[i] = static_cast<int>(rng.below(k));
  }
  return data;
}

namespace {
constexpr char kCkptMagic[8] = {'L', 'G', 'K', 'C', 'K', 'P', 'T', '1'};
}

void save_checkpoint(const SparsityProblem& problem, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "checkpoint: cannot open " + path);
  out.write(kCkptMagic, 8);
  std::uint32_t version = 1;
  out.write(reinterpret_cast<const char*>(&version), 4);
  std::uint32_t nw = static_cast<std::uint32_t>(problem.net.spec.widths.size());
  out.write(reinterpret_cast<const char*>(&nw), 4);
  for (int w : problem.net.spec.widths) {
    std::uint32_t u = static_cast<std::uint32_t>(w);
    out.write(reinterpret_cast<const char*>(&u), 4);
  }
  auto write_block = [&](const double* p, size_t count) {
    out.write(reinterpret_cast<const char*>(p), count * sizeof(double));
  };
  for (size_t l = 0; l < problem.net.W.size(); ++l) {
    write_block(problem.net.W[l].data(), problem.net.W[l].size());
    write_block(problem.net.b[l].data(), problem.net.b[l].size());
  }
  write_block(problem.gates.log_alpha.data(), problem.gates.log_alpha.size());
  require(out.good(), "checkpoint: write failed for " + path);
}

SparsityProblem load_checkpoint(const std::string& path, ClassDataset data,
                                double density_target) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  require(in.good() && std::memcmp(magic, kCkptMagic, 8) == 0,
          "checkpoint: bad magic in " + path);
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  require(version == 1, "checkpoint: unsupported version");
  std::uint32_t nw = 0;
  in.read(reinterpret_cast<char*>(&nw), 4);
  require(in.good() && nw >= 2 && nw < 64, "checkpoint: bad layer count");
  DenseNetSpec spec;
  for (std::uint32_t i = 0; i < nw; ++i) {
    std::uint32_t w = 0;
    in.read(reinterpret_cast<char*>(&w), 4);
    spec.widths.push_back(static_cast<int>(w));
  }
  SparsityProblem p =
      make_sparsity_problem(spec, std::move(data), density_target, 0);
  auto read_block = [&](double* ptr, size_t count) {
    in.read(reinterpret_cast<char*>(ptr), count * sizeof(double));
    require(in.good(), "checkpoint: truncated data in " + path);
  };
  for (size_t l = 0; l < p.net.W.size(); ++l) {
    read_block(p.net.W[l].data(), p.net.W[l].size());
    read_block(p.net.b[l].data(), p.net.b[l].size());
  }
  read_block(p.gates.log_alpha.data(), p.gates.log_alpha.size());
  return p;
}

}  // namespace lagrangekit
