#include <doctest.h>

#include <cmath>

#include "lagrangekit/optimizers.hpp"
#include "lagrangekit/problems.hpp"

using namespace lagrangekit;

TEST_CASE("gd step") {
  Vector x(2);
  x << 1.0, 1.0;
  Vector g(2);
  g << 2.0, 0.0;
  Vector next = gd_step(x, g, 0.1);
  CHECK(next[0] == doctest::Approx(0.8));
  CHECK(next[1] == doctest::Approx(1.0));

  CHECK(gd_step(x, Vector::Zero(2), 0.1) == x);
}

TEST_CASE("penalized gd contracts convexquad to the analytic minimizer") {
  // minimize x^2 + 2 (1 - x): closed-form minimizer at x = 1
  ConstrainedProblem p = ConvexQuad{}.problem();
  RunState state = make_run_state(p);  // x0 = 3
  PrimalOptConfig primal;
  primal.step_size = 0.25;
  for (int i = 0; i < 50; ++i) {
    penalized_iteration(p, state, primal, Vector::Constant(1, 2.0), Vector(0));
  }
  CHECK(std::abs(state.x[0] - 1.0) <= 1e-6);
}

TEST_CASE("adam step") {
  PrimalOptConfig cfg;
  cfg.kind = PrimalKind::adam;
  cfg.step_size = 0.001;

  SUBCASE("first step moves each coordinate by about the step size") {
    AdamState st = AdamState::zeros(2);
    Vector x = Vector::Zero(2);
    Vector g(2);
    g << 3.0, -0.25;
    Vector next = adam_step(st, x, g, cfg);
    CHECK(std::abs(next[0] + cfg.step_size) < 1e-6);
    CHECK(std::abs(next[1] - cfg.step_size) < 1e-6);
  }

  SUBCASE("zero gradient with zero moments does not move") {
    AdamState st = AdamState::zeros(2);
    Vector x = Vector::Ones(2);
    CHECK(adam_step(st, x, Vector::Zero(2), cfg) == x);
  }

  SUBCASE("two steps of constant unit gradient displace by -0.002") {
    AdamState st = AdamState::zeros(1);
    Vector x = Vector::Zero(1);
    Vector g = Vector::Ones(1);
    x = adam_step(st, x, g, cfg);
    x = adam_step(st, x, g, cfg);
    CHECK(std::abs(x[0] + 0.002) <= 1e-6);
  }
}

TEST_CASE("dual gradient ascent step") {
  DualState d = DualState::zeros(1, 0);
  d.lambda[0] = 0.1;
  ViolationVector v{Vector::Constant(1, 0.5), Vector(0)};
  dual_ga_step(d, v, 0.01);
  CHECK(d.lambda[0] == doctest::Approx(0.105));

  d.lambda[0] = 0.02;
  v.viol_g[0] = -0.5;
  dual_ga_step(d, v, 0.1);
  CHECK(d.lambda[0] == 0.0);  // clipped

  DualState eq = DualState::zeros(0, 1);
  ViolationVector vh{Vector(0), Vector::Constant(1, -0.3)};
  dual_ga_step(eq, vh, 0.1);
  CHECK(eq.mu[0] == doctest::Approx(-0.03));  // no projection on mu
}

TEST_CASE("nuPI dual step") {
  DualOptConfig cfg;
  cfg.kind = DualKind::nupi;
  cfg.step_size = 0.3;
  cfg.kappa_p = 40.0;

  SUBCASE("stated law") {
    DualState d = DualState::zeros(1, 0);
    d.lambda[0] = 0.2;
    d.prev_err_g[0] = 0.012;
    d.initialized = true;
    ViolationVector v{Vector::Constant(1, 0.01), Vector(0)};
    dual_nupi_step(d, v, cfg);
    CHECK(d.lambda[0] == doctest::Approx(0.179));
    CHECK(d.prev_err_g[0] == doctest::Approx(0.01));
  }

  SUBCASE("first call is a pure integral step") {
    DualState d = DualState::zeros(1, 0);
    ViolationVector v{Vector::Constant(1, 0.05), Vector(0)};
    dual_nupi_step(d, v, cfg);
    CHECK(d.lambda[0] == doctest::Approx(0.015));
  }

  SUBCASE("kappa_p = 0 reproduces gradient ascent bitwise") {
    Rng rng(23);
    DualOptConfig plain = cfg;
    plain.kappa_p = 0.0;
    DualState a = DualState::zeros(3, 2);
    DualState b = DualState::zeros(3, 2);
    for (int step = 0; step < 50; ++step) {
      ViolationVector v{Vector(3), Vector(2)};
      for (int i = 0; i < 3; ++i) v.viol_g[i] = rng.uniform(-1.0, 1.0);
      for (int i = 0; i < 2; ++i) v.viol_h[i] = rng.uniform(-1.0, 1.0);
      dual_ga_step(a, v, plain.step_size);
      dual_nupi_step(b, v, plain);
      for (int i = 0; i < 3; ++i) CHECK(a.lambda[i] == b.lambda[i]);
      for (int i = 0; i < 2; ++i) CHECK(a.mu[i] == b.mu[i]);
    }
  }
}

TEST_CASE("gda with no constraints reduces to gradient descent") {
  ConstrainedProblem p = make_problem("quad", 2, 0, 0);
  p.x0 = Vector::Constant(2, 4.0);
  p.evaluator = [](const Vector& x) {
    Evaluation e;
    e.f = x.squaredNorm();
    e.g = Vector(0);
    e.h = Vector(0);
    e.grad_f = 2.0 * x;
    e.jac_g = Matrix(0, 2);
    e.jac_h = Matrix(0, 2);
    return e;
  };
  RunState state = make_run_state(p);
  PrimalOptConfig primal;
  primal.step_size = 0.1;
  DualOptConfig dual;
  dual.step_size = 0.1;
  Vector expect = p.x0;
  for (int i = 0; i < 20; ++i) {
    gda_iteration(p, state, primal, dual);
    expect = expect - primal.step_size * (2.0 * expect);
  }
  CHECK(state.x == expect);
}

TEST_CASE("gda with nuPI recovers the concave2d constrained optimizer") {
  ConstrainedProblem p = Concave2D(0.5).problem();
  RunState state = make_run_state(p);
  PrimalOptConfig primal;
  primal.step_size = 0.01;
  DualOptConfig dual;
  dual.kind = DualKind::nupi;
  dual.step_size = 0.3;
  dual.kappa_p = 40.0;
  for (int i = 0; i < 10000; ++i) gda_iteration(p, state, primal, dual);
  Concave2DSolution sol = concave2d_solution(0.5);
  CHECK(std::abs(state.x[0] - sol.x) <= 1e-3);
  CHECK(std::abs(state.x[1]) <= 1e-6);
  CHECK(std::abs(state.dual.lambda[0] - sol.lambda) <= 1e-2);
}

TEST_CASE("gda solves the convex sanity problem") {
  ConstrainedProblem p = ConvexQuad{}.problem();
  RunState state = make_run_state(p);
  PrimalOptConfig primal;
  primal.step_size = 0.1;
  DualOptConfig dual;
  dual.step_size = 0.05;
  for (int i = 0; i < 10000; ++i) gda_iteration(p, state, primal, dual);
  CHECK(std::abs(state.x[0] - 1.0) <= 1e-3);
  CHECK(std::abs(state.dual.lambda[0] - 2.0) <= 1e-3);
}

TEST_CASE("penalized concave2d lands at the endpoints") {
  ConstrainedProblem p = Concave2D(0.5).problem();
  PrimalOptConfig primal;
  primal.step_size = 0.01;

  auto final_x = [&](double c) {
    RunState state = make_run_state(p);
    for (int i = 0; i < 10000; ++i) {
      penalized_iteration(p, state, primal, Vector::Constant(1, c), Vector(0));
    }
    return state.x;
  };

  Vector low = final_x(0.5);
  CHECK(std::abs(low[0] - M_PI / 2.0) <= 1e-6);
  CHECK(std::abs(low[1]) <= 1e-6);

  Vector high = final_x(2.0);
  CHECK(std::abs(high[0]) <= 1e-6);
  CHECK(std::abs(high[1]) <= 1e-6);

  // Even at the optimal multiplier the endpoint wins.
  Vector at_lstar = final_x(0.57735);
  double dist_to_solution = std::abs(at_lstar[0] - std::asin(0.5));
  bool at_endpoint = std::abs(at_lstar[0] - M_PI / 2.0) <= 1e-6 ||
                     std::abs(at_lstar[0]) <= 1e-6;
  CHECK(at_endpoint);
  CHECK(dist_to_solution > 0.5);
}

TEST_CASE("augmented value") {
  Evaluation e;
  e.f = 1.0;
  e.g = Vector::Constant(1, 0.2);  // g - eps = 0.2 with eps = 0
  e.h = Vector(0);
  e.grad_f = Vector::Zero(1);
  e.jac_g = Matrix::Zero(1, 1);
  e.jac_h = Matrix(0, 1);
  DualState dual = DualState::zeros(1, 0);
  CHECK(augmented_value(e, dual, Vector::Zero(1), Vector(0), 10.0) ==
        doctest::Approx(1.2));

  e.g[0] = -0.3;  // feasible: relu kills the quadratic term
  CHECK(augmented_value(e, dual, Vector::Zero(1), Vector(0), 10.0) ==
        doctest::Approx(e.f));
}

TEST_CASE("augmented lagrangian converges on concave2d at eps=0.5") {
  ConstrainedProblem p = Concave2D(0.5).problem();
  RunState state = make_run_state(p);
  PrimalOptConfig primal;
  primal.step_size = 0.01;
  DualOptConfig dual;
  dual.step_size = 0.1;
  for (int i = 0; i < 10000; ++i) alm_iteration(p, state, primal, dual, 10.0);
  CHECK(std::abs(state.x[0] - 0.523599) <= 1e-3);
  CHECK(std::abs(state.x[1]) <= 1e-6);
}

TEST_CASE("augmented lagrangian holds on mid-range constraint levels") {
  // With c = 10 the corner basins of this problem capture the iterates for
  // extreme levels; the mid grid converges.
  PrimalOptConfig primal;
  primal.step_size = 0.01;
  DualOptConfig dual;
  dual.step_size = 0.1;
  for (double eps : {0.3, 0.6}) {
    ConstrainedProblem p = Concave2D(eps).problem();
    RunState state = make_run_state(p);
    for (int i = 0; i < 20000; ++i) alm_iteration(p, state, primal, dual, 10.0);
    CHECK(std::abs(state.x[0] - std::asin(eps)) <= 1e-3);
  }
}

TEST_CASE("alm with zero coefficient equals plain gda bitwise") {
  ConstrainedProblem p = Concave2D(0.5).problem();
  PrimalOptConfig primal;
  primal.step_size = 0.01;
  DualOptConfig dual;
  dual.step_size = 0.05;

  RunState a = make_run_state(p);
  RunState b = make_run_state(p);
  for (int i = 0; i < 500; ++i) {
    gda_iteration(p, a, primal, dual);
    alm_iteration(p, b, primal, dual, 0.0);
    CHECK(a.x[0] == b.x[0]);
    CHECK(a.x[1] == b.x[1]);
    CHECK(a.dual.lambda[0] == b.dual.lambda[0]);
  }
}

TEST_CASE("proxy with identical surrogate matches plain gda bitwise") {
  GaussianMixtureSpec spec;
  RateProblem rate;
  rate.data = make_gaussian_mixture(spec);
  ConstrainedProblem sur = rate.surrogate_problem();

  PrimalOptConfig primal;
  primal.step_size = 0.02;
  DualOptConfig dual;
  dual.step_size = 0.01;

  RunState a = make_run_state(sur);
  RunState b = make_run_state(sur);
  for (int i = 0; i < 200; ++i) {
    gda_iteration(sur, a, primal, dual);
    proxy_gda_iteration(sur, sur, b, primal, dual);
  }
  CHECK(a.x == b.x);
  CHECK(a.dual.lambda == b.dual.lambda);
}

TEST_CASE("proxy rejects mismatched surrogate shapes") {
  ConstrainedProblem p = Concave2D(0.5).problem();
  ConstrainedProblem q = ConvexQuad{}.problem();
  RunState state = make_run_state(p);
  PrimalOptConfig primal;
  DualOptConfig dual;
  CHECK_THROWS_AS(proxy_gda_iteration(p, q, state, primal, dual),
                  ContractError);
}

TEST_CASE("run contract") {
  ConstrainedProblem p = Concave2D(0.5).problem();
  SchemeConfig scheme;
  scheme.kind = SchemeKind::lagrangian;
  PrimalOptConfig primal;
  primal.step_size = 0.01;
  DualOptConfig dual;
  dual.step_size = 0.1;

  SUBCASE("zero iterations rejected") {
    RunOptions opts;
    opts.iters = 0;
    CHECK_THROWS_AS(run(p, scheme, primal, dual, opts), ContractError);
  }

  SUBCASE("trace records iterations plus the initial state") {
    RunOptions opts;
    opts.iters = 100;
    Trace t = run(p, scheme, primal, dual, opts);
    CHECK(t.records.size() == 101);
    CHECK(t.records.front().t == 0);
    CHECK(t.records.back().t == 100);
    CHECK(t.records.front().lambda[0] == 0.0);
  }

  SUBCASE("same seed gives identical traces") {
    RunOptions opts;
    opts.iters = 500;
    opts.seed = 42;
    Trace a = run(p, scheme, primal, dual, opts);
    Trace b = run(p, scheme, primal, dual, opts);
    REQUIRE(a.records.size() == b.records.size());
    for (size_t i = 0; i < a.records.size(); ++i) {
      CHECK(a.records[i].x == b.records[i].x);
      CHECK(a.records[i].f == b.records[i].f);
      CHECK(a.records[i].lambda == b.records[i].lambda);
    }
  }

  SUBCASE("table row at eps = 0.8") {
    ConstrainedProblem p8 = Concave2D(0.8).problem();
    DualOptConfig nupi;
    nupi.kind = DualKind::nupi;
    nupi.step_size = 0.3;
    nupi.kappa_p = 40.0;
    RunOptions opts;
    opts.iters = 10000;
    Trace t = run(p8, scheme, primal, nupi, opts);
    CHECK(std::abs(t.records.back().x[0] - 0.927295) <= 1e-3);
  }
}

TEST_CASE("multipliers stay nonnegative across random runs") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    ConstrainedProblem p = Concave2D(rng.uniform(0.05, 0.95)).problem();
    SchemeConfig scheme;
    scheme.kind = trial % 2 == 0 ? SchemeKind::lagrangian
                                 : SchemeKind::augmented;
    scheme.alm_c = 5.0;
    PrimalOptConfig primal;
    primal.step_size = rng.uniform(0.001, 0.05);
    DualOptConfig dual;
    dual.kind = trial % 3 == 0 ? DualKind::nupi : DualKind::ga;
    dual.step_size = rng.uniform(0.01, 0.5);
    dual.kappa_p = dual.kind == DualKind::nupi ? rng.uniform(0.0, 50.0) : 0.0;
    RunOptions opts;
    opts.iters = 300;
    Trace t = run(p, scheme, primal, dual, opts);
    for (const TraceRecord& r : t.records) {
      CHECK(r.lambda.minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("gda primal displacement equals penalized with matched weights") {
  // Per-step correspondence: the Lagrangian primal move with the fresh
  // multipliers equals a penalized move using those multipliers as fixed
  // coefficients.
  ConstrainedProblem p = Concave2D(0.4).problem();
  PrimalOptConfig primal;
  primal.step_size = 0.02;
  DualOptConfig dual;
  dual.step_size = 0.2;

  RunState gda = make_run_state(p);
  for (int i = 0; i < 200; ++i) {
    // advance one gda step from a snapshot, then replay the primal part
    // with the multipliers it produced
    RunState before = gda;
    gda_iteration(p, gda, primal, dual);
    RunState replay = before;
    replay.dual = gda.dual;  // lambda_{t+1}
    penalized_iteration(p, replay, primal, gda.dual.lambda, gda.dual.mu);
    CHECK(std::abs(replay.x[0] - gda.x[0]) <= 1e-12);
    CHECK(std::abs(replay.x[1] - gda.x[1]) <= 1e-12);
  }
}

TEST_CASE("repeated positive violation strictly increases lambda") {
  DualState d = DualState::zeros(1, 0);
  ViolationVector v{Vector::Constant(1, 0.2), Vector(0)};
  double prev = d.lambda[0];
  for (int i = 0; i < 100; ++i) {
    dual_ga_step(d, v, 0.05);
    CHECK(d.lambda[0] > prev);
    prev = d.lambda[0];
  }
}
