// Experiment driver: solve | sweep | bisect | certify over a JSON config.
// Flag precedence: command line > config file > defaults.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>

#include "lagrangekit/csv.hpp"
#include "lagrangekit/diagnostics.hpp"
#include "lagrangekit/optimizers.hpp"
#include "lagrangekit/problems.hpp"
#include "lagrangekit/smallnet.hpp"
#include "lagrangekit/tuner.hpp"

namespace lk = lagrangekit;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitBadConfig = 2;
constexpr int kExitRuntime = 3;

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
  std::optional<long> stride;
  bool stub = false;
};

lk::Vector to_vector(const json& j) {
  lk::Vector v(j.size());
  int i = 0;
  for (const auto& x : j) v[i++] = x.get<double>();
  return v;
}

struct ProblemBundle {
  lk::ConstrainedProblem problem;
  std::optional<lk::ConstrainedProblem> surrogate;  // proxy schemes
  std::optional<lk::RateProblem> rate;              // rate metrics
};

ProblemBundle build_problem(const json& cfg) {
  const json& p = cfg.at("problem");
  std::string id = p.at("id").get<std::string>();
  ProblemBundle bundle;
  if (id == "concave2d") {
    lk::Concave2D c2d(p.value("eps", 0.5));
    bundle.problem = c2d.problem();
  } else if (id == "convexquad") {
    bundle.problem = lk::ConvexQuad{}.problem();
  } else if (id == "rate") {
    lk::GaussianMixtureSpec spec;
    if (p.contains("dataset")) {
      const json& d = p.at("dataset");
      spec.mean_separation = d.value("separation", spec.mean_separation);
      spec.std_dev = d.value("std", spec.std_dev);
      spec.n_per_class = d.value("n_per_class", spec.n_per_class);
      spec.seed = d.value("seed", spec.seed);
    }
    lk::RateProblem rate;
    rate.data = lk::make_gaussian_mixture(spec);
    rate.target_rate = p.value("target_rate", 0.7);
    bundle.problem = rate.true_problem();
    bundle.surrogate = rate.surrogate_problem();
    bundle.rate = std::move(rate);
  } else {
    throw lk::ContractError("unknown problem id: " + id);
  }
  if (cfg.contains("x0")) bundle.problem.x0 = to_vector(cfg.at("x0"));
  return bundle;
}

lk::PrimalOptConfig build_primal(const json& cfg) {
  lk::PrimalOptConfig c;
  if (!cfg.contains("primal")) return c;
  const json& p = cfg.at("primal");
  std::string kind = p.value("kind", "gd");
  if (kind == "gd") {
    c.kind = lk::PrimalKind::gd;
  } else if (kind == "adam") {
    c.kind = lk::PrimalKind::adam;
  } else {
    throw lk::ContractError("primal.kind must be gd or adam, got " + kind);
  }
  c.step_size = p.value("step_size", c.step_size);
  c.adam_beta1 = p.value("beta1", c.adam_beta1);
  c.adam_beta2 = p.value("beta2", c.adam_beta2);
  c.adam_epsilon = p.value("epsilon", c.adam_epsilon);
  if (c.step_size <= 0) throw lk::ContractError("primal.step_size must be > 0");
  return c;
}

lk::DualOptConfig build_dual(const json& cfg) {
  lk::DualOptConfig c;
  if (!cfg.contains("dual")) return c;
  const json& p = cfg.at("dual");
  std::string kind = p.value("kind", "ga");
  if (kind == "ga") {
    c.kind = lk::DualKind::ga;
  } else if (kind == "nupi") {
    c.kind = lk::DualKind::nupi;
  } else {
    throw lk::ContractError("dual.kind must be ga or nupi, got " + kind);
  }
  c.step_size = p.value("step_size", c.step_size);
  c.kappa_p = p.value("kappa_p", c.kappa_p);
  c.nu = p.value("nu", c.nu);
  if (c.step_size <= 0) throw lk::ContractError("dual.step_size must be > 0");
  return c;
}

lk::SchemeConfig build_scheme(const json& cfg, const lk::ConstrainedProblem& problem) {
  lk::SchemeConfig s;
  if (!cfg.contains("scheme")) return s;
  const json& p = cfg.at("scheme");
  std::string kind = p.value("kind", "lagrangian");
  if (kind == "penalized") {
    s.kind = lk::SchemeKind::penalized;
    if (p.contains("c")) {
      s.penalty_c_g =
          lk::Vector::Constant(problem.num_ineq, p.at("c").get<double>());
    } else if (p.contains("c_g")) {
      s.penalty_c_g = to_vector(p.at("c_g"));
    } else {
      s.penalty_c_g = lk::Vector::Zero(problem.num_ineq);
    }
    s.penalty_c_h = p.contains("c_h") ? to_vector(p.at("c_h"))
                                      : lk::Vector::Zero(problem.num_eq);
  } else if (kind == "lagrangian") {
    s.kind = lk::SchemeKind::lagrangian;
  } else if (kind == "augmented") {
    s.kind = lk::SchemeKind::augmented;
    s.alm_c = p.value("alm_c", 10.0);
  } else if (kind == "proxy") {
    s.kind = lk::SchemeKind::proxy;
    s.surrogate_id = p.value("surrogate", "default");
  } else {
    throw lk::ContractError("scheme.kind must be one of penalized|lagrangian|augmented|proxy");
  }
  return s;
}

std::string out_dir(const json& cfg, const CliOverrides& ov) {
  if (ov.out) return *ov.out;
  if (cfg.contains("out")) return cfg.at("out").get<std::string>();
  const char* env = std::getenv("LAGRANGEKIT_OUT");
  if (env && *env) return env;
  return ".";
}

struct RunSettings {
  lk::RunOptions opts;
  lk::PrimalOptConfig primal;
  lk::DualOptConfig dual;
  lk::SchemeConfig scheme;
};

RunSettings build_run_settings(const json& cfg, const CliOverrides& ov,
                               const lk::ConstrainedProblem& problem) {
  RunSettings rs;
  rs.opts.iters = cfg.value("iters", 1000L);
  rs.opts.seed = ov.seed ? *ov.seed : cfg.value("seed", 0ULL);
  rs.opts.stride = ov.stride ? *ov.stride : cfg.value("stride", 1L);
  if (rs.opts.iters < 1) throw lk::ContractError("iters must be >= 1");
  if (rs.opts.stride < 1) throw lk::ContractError("stride must be >= 1");
  rs.primal = build_primal(cfg);
  rs.dual = build_dual(cfg);
  rs.scheme = build_scheme(cfg, problem);
  return rs;
}

int cmd_solve(const json& cfg, const CliOverrides& ov) {
  ProblemBundle bundle = build_problem(cfg);
  RunSettings rs = build_run_settings(cfg, ov, bundle.problem);
  if (rs.scheme.kind == lk::SchemeKind::proxy && !bundle.surrogate) {
    throw lk::ContractError("proxy scheme needs a problem with a surrogate");
  }

  lk::Trace trace = lk::run(
      bundle.problem, rs.scheme, rs.primal, rs.dual, rs.opts,
      bundle.surrogate ? &*bundle.surrogate : nullptr);

  std::filesystem::path dir(out_dir(cfg, ov));
  std::filesystem::create_directories(dir);
  std::string trace_path = (dir / "trace.csv").string();
  lk::save_trace_csv(trace, trace_path);

  const lk::TraceRecord& last = trace.records.back();
  std::cout << "problem: " << bundle.problem.name << "\n";
  std::cout << "f: " << lk::format_sig(last.f) << "\n";
  std::cout << "x:";
  for (int i = 0; i < last.x.size(); ++i)
    std::cout << ' ' << lk::format_sig(last.x[i]);
  std::cout << "\n";
  for (int i = 0; i < last.g.size(); ++i) {
    std::cout << "violation_g_" << i << ": "
              << lk::format_sig(last.g[i] - bundle.problem.eps_g[i]) << "\n";
  }
  for (int i = 0; i < last.h.size(); ++i) {
    std::cout << "violation_h_" << i << ": "
              << lk::format_sig(last.h[i] - bundle.problem.eps_h[i]) << "\n";
  }
  std::cout << "lambda:";
  for (int i = 0; i < last.lambda.size(); ++i)
    std::cout << ' ' << lk::format_sig(last.lambda[i]);
  std::cout << "\nmu:";
  for (int i = 0; i < last.mu.size(); ++i)
    std::cout << ' ' << lk::format_sig(last.mu[i]);
  std::cout << "\nfeasible: " << (last.is_feasible ? "yes" : "no") << "\n";
  std::cout << "kkt_residual: " << lk::format_sig(last.stationarity) << "\n";
  if (bundle.rate) {
    std::cout << "class0_rate: " << lk::format_sig(bundle.rate->class0_rate(last.x))
              << "\n";
    std::cout << "accuracy: " << lk::format_sig(bundle.rate->accuracy(last.x))
              << "\n";
  }
  if (bundle.rate) {
    std::string data_path = (dir / "dataset.csv").string();
    lk::save_dataset_csv(bundle.rate->data, data_path);
    std::cout << "dataset: " << data_path << "\n";
  }
  std::cout << "trace: " << trace_path << "\n";
  return kExitOk;
}

struct SweepRow {
  double value = 0.0;
  double metric = 0.0;
  double accuracy = 0.0;
  bool feasible = false;
  bool failed = false;
};

int cmd_sweep(const json& cfg, const CliOverrides& ov) {
  const json& sw = cfg.at("sweep");
  std::string axis = sw.at("axis").get<std::string>();
  if (axis != "dual_step" && axis != "penalty") {
    throw lk::ContractError("sweep.axis must be dual_step or penalty");
  }
  std::vector<double> values = sw.at("values").get<std::vector<double>>();
  if (values.empty()) throw lk::ContractError("sweep.values must be nonempty");
  int jobs = ov.jobs ? *ov.jobs : sw.value("jobs", 1);
  if (jobs < 1) throw lk::ContractError("jobs must be >= 1");

  ProblemBundle bundle = build_problem(cfg);
  RunSettings base = build_run_settings(cfg, ov, bundle.problem);

  auto run_one = [&](double v) {
    SweepRow row;
    row.value = v;
    try {
      RunSettings rs = base;
      if (axis == "dual_step") {
        rs.dual.step_size = v;
        if (rs.scheme.kind == lk::SchemeKind::penalized) {
          throw lk::ContractError("dual_step axis needs a dual scheme");
        }
      } else {
        rs.scheme.kind = lk::SchemeKind::penalized;
        rs.scheme.penalty_c_g =
            lk::Vector::Constant(bundle.problem.num_ineq, v);
        rs.scheme.penalty_c_h = lk::Vector::Zero(bundle.problem.num_eq);
      }
      // The penalized scheme reads its gradient from the differentiable
      // surrogate; the dual schemes split true/surrogate per proxy rules.
      const lk::ConstrainedProblem& main_problem =
          (rs.scheme.kind == lk::SchemeKind::penalized && bundle.surrogate)
              ? *bundle.surrogate
              : bundle.problem;
      lk::Trace trace =
          lk::run(main_problem, rs.scheme, rs.primal, rs.dual, rs.opts,
                  bundle.surrogate ? &*bundle.surrogate : nullptr);
      const lk::TraceRecord& last = trace.records.back();
      if (bundle.rate) {
        row.metric = bundle.rate->class0_rate(last.x) * 100.0;
        row.accuracy = bundle.rate->accuracy(last.x) * 100.0;
        row.feasible =
            bundle.rate->class0_rate(last.x) >= bundle.rate->target_rate -
                                                    lk::kDefaultFeasTol;
      } else {
        row.metric = last.f;
        row.accuracy = 0.0;
        row.feasible = last.is_feasible;
      }
    } catch (const std::exception&) {
      row.failed = true;
    }
    return row;
  };

  std::vector<SweepRow> rows(values.size());
  for (size_t start = 0; start < values.size();
       start += static_cast<size_t>(jobs)) {
    size_t end = std::min(values.size(), start + static_cast<size_t>(jobs));
    std::vector<std::future<SweepRow>> futs;
    for (size_t i = start; i < end; ++i) {
      futs.push_back(std::async(std::launch::async, run_one, values[i]));
    }
    for (size_t i = start; i < end; ++i) rows[i] = futs[i - start].get();
  }

  std::vector<size_t> order(rows.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return rows[a].value < rows[b].value;
  });

  std::filesystem::path dir(out_dir(cfg, ov));
  std::filesystem::create_directories(dir);
  std::string path = (dir / "sweep.csv").string();
  std::ofstream out(path);
  out << "value,metric,accuracy,feasible\n";
  for (size_t i : order) {
    const SweepRow& r = rows[i];
    if (r.failed) {
      out << lk::format_sig(r.value) << ",failed,failed,0\n";
    } else {
      out << lk::format_sig(r.value) << ',' << lk::format_sig(r.metric) << ','
          << lk::format_sig(r.accuracy) << ',' << (r.feasible ? 1 : 0) << '\n';
    }
  }
  std::cout << "sweep: " << path << " (" << rows.size() << " rows)\n";
  return kExitOk;
}

int cmd_bisect(const json& cfg, const CliOverrides& ov) {
  json bc = cfg.value("bisect", json::object());
  double lo = bc.value("lo", 1e-3);
  double hi = bc.value("hi", 1.0);
  double target = bc.value("target", 50.0);
  double tol = bc.value("tol", 2.0);
  int max_iters = bc.value("max_iters", 5);
  bool stub = ov.stub || bc.value("stub", false);

  lk::BisectionState state =
      lk::make_bisection(lo, hi, target, tol, max_iters);

  if (stub) {
    // Replay a recorded density sequence instead of training.
    std::vector<double> endpoint_metrics =
        bc.value("stub_endpoints", std::vector<double>{84.5, 25.3});
    std::vector<double> step_metrics = bc.value(
        "stub_steps", std::vector<double>{68.1, 54.2, 39.0, 46.9, 50.5});
    size_t calls = 0;
    auto builder = [&](double) {
      lk::ProbeOutcome out;
      if (calls < 2) {
        out.metric = endpoint_metrics.at(calls);
      } else {
        out.metric = step_metrics.at(calls - 2);
      }
      ++calls;
      return out;
    };
    state = lk::run_bisection(builder, std::move(state));
  } else {
    json tr = bc.value("train", json::object());
    int samples = tr.value("samples", 4000);
    lk::SparsityTrainConfig tc;
    tc.epochs = tr.value("epochs", 20);
    tc.batch = tr.value("batch", 10);
    tc.lr = tr.value("lr", 1e-3);
    tc.seed = tr.value("seed", 2ULL);
    tc.mode = lk::SparsityTrainConfig::Mode::penalized;
    std::uint64_t data_seed = ov.seed ? *ov.seed : cfg.value("seed", 0ULL);

    lk::ClassDataset data;
    if (tr.contains("idx_images")) {
      data = lk::load_idx(tr.at("idx_images").get<std::string>(),
                          tr.at("idx_labels").get<std::string>(), samples);
    } else {
      data = lk::make_synthetic_digits(samples, data_seed);
    }
    lk::DenseNetSpec spec;
    spec.widths = tr.value("widths", std::vector<int>{784, 64, 32, 10});

    auto builder = [&](double c) {
      lk::ClassDataset copy = data;
      lk::SparsityProblem sp =
          lk::make_sparsity_problem(spec, std::move(copy), target / 100.0,
                                    tc.seed);
      lk::SparsityTrainConfig probe_cfg = tc;
      probe_cfg.penalty_c = c;
      lk::SparsityTrainResult res = lk::train_sparsity(sp, probe_cfg);
      lk::ProbeOutcome out;
      out.metric = res.density * 100.0;
      out.accuracy = res.train_accuracy * 100.0;
      return out;
    };
    state = lk::run_bisection(builder, std::move(state));
  }

  std::filesystem::path dir(out_dir(cfg, ov));
  std::filesystem::create_directories(dir);
  std::string path = (dir / "bisection.csv").string();
  lk::save_history_csv(state, path);
  std::cout << "solves: " << state.history.size() << "\n";
  for (const lk::ProbeRecord& r : state.history) {
    std::cout << "iter " << r.iteration << ": c=" << lk::format_sig(r.coefficient)
              << " metric=" << lk::format_sig(r.metric)
              << " accuracy=" << lk::format_sig(r.accuracy) << "\n";
  }
  std::cout << "history: " << path << "\n";
  return kExitOk;
}

int cmd_certify(const json& cfg, const CliOverrides& ov) {
  ProblemBundle bundle = build_problem(cfg);
  const json& ct = cfg.at("certify");
  std::string cand_path = ct.at("candidate").get<std::string>();
  std::ifstream in(cand_path);
  if (!in.good()) throw lk::ContractError("cannot open candidate file " + cand_path);
  json cand = json::parse(in);
  lk::Vector x = to_vector(cand.at("x"));
  lk::Vector lambda = cand.contains("lambda") ? to_vector(cand.at("lambda"))
                                              : lk::Vector::Zero(bundle.problem.num_ineq);
  lk::Vector mu = cand.contains("mu") ? to_vector(cand.at("mu"))
                                      : lk::Vector::Zero(bundle.problem.num_eq);

  lk::KktReport report =
      lk::kkt_certify(bundle.problem, x, lambda, mu, lk::KktTolerances{});
  std::cout << report.to_text();

  std::filesystem::path dir(out_dir(cfg, ov));
  std::filesystem::create_directories(dir);
  std::string path = (dir / "kkt.csv").string();
  std::ofstream out(path);
  out << report.csv_header() << '\n' << report.csv_row() << '\n';
  std::cout << "report: " << path << "\n";

  bool pass = report.first_order_pass &&
              report.second_order != lk::SecondOrder::fail;
  return pass ? kExitOk : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"constrained optimization experiment driver"};
  app.require_subcommand(0, 1);

  std::string config_path;
  CliOverrides ov;
  std::uint64_t seed_flag = 0;
  int jobs_flag = 0;
  std::string out_flag;
  long stride_flag = 0;

  app.add_option("--config", config_path, "JSON config file");
  auto* seed_opt = app.add_option("--seed", seed_flag, "run seed");
  auto* jobs_opt = app.add_option("--jobs", jobs_flag, "sweep concurrency");
  auto* out_opt = app.add_option("--out", out_flag, "output directory");
  auto* stride_opt = app.add_option("--stride", stride_flag, "trace stride");
  app.add_flag("--stub", ov.stub, "bisect replay mode");

  auto* solve = app.add_subcommand("solve", "run one optimization");
  auto* sweep = app.add_subcommand("sweep", "run a hyperparameter sweep");
  auto* bisect = app.add_subcommand("bisect", "tune a penalty coefficient");
  auto* certify = app.add_subcommand("certify", "check KKT conditions");

  CLI11_PARSE(app, argc, argv);

  if (seed_opt->count() > 0) ov.seed = seed_flag;
  if (jobs_opt->count() > 0) ov.jobs = jobs_flag;
  if (out_opt->count() > 0) ov.out = out_flag;
  if (stride_opt->count() > 0) ov.stride = stride_flag;

  try {
    json cfg = json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in.good()) {
        std::cerr << "error: cannot open config " << config_path << "\n";
        return kExitBadConfig;
      }
      cfg = json::parse(in);
    }

    std::string command;
    if (solve->parsed()) command = "solve";
    else if (sweep->parsed()) command = "sweep";
    else if (bisect->parsed()) command = "bisect";
    else if (certify->parsed()) command = "certify";
    else if (cfg.contains("command")) command = cfg.at("command").get<std::string>();
    if (command.empty()) {
      std::cerr << "error: no command given (subcommand or config \"command\")\n";
      return kExitBadConfig;
    }

    if (command == "solve") return cmd_solve(cfg, ov);
    if (command == "sweep") return cmd_sweep(cfg, ov);
    if (command == "bisect") return cmd_bisect(cfg, ov);
    if (command == "certify") return cmd_certify(cfg, ov);
    std::cerr << "error: unknown command " << command << "\n";
    return kExitBadConfig;
  } catch (const lk::EvaluationError& e) {
    std::cerr << "evaluation error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const lk::ContractError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
