#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "lagrangekit/csv.hpp"

namespace fs = std::filesystem;
using lagrangekit::CsvTable;
using lagrangekit::read_csv;

namespace {

std::string bin() {
  const char* p = std::getenv("LAGRANGEKIT_BIN");
  REQUIRE_MESSAGE(p != nullptr, "LAGRANGEKIT_BIN must point at the CLI");
  return p;
}

int run_cli(const std::string& args, const std::string& log) {
  std::string cmd = bin() + " " + args + " >" + log + " 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

struct TempDir {
  fs::path dir;
  explicit TempDir(const std::string& tag) {
    dir = fs::temp_directory_path() / ("lgk_cli_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~TempDir() { fs::remove_all(dir); }
  std::string path(const std::string& name) const {
    return (dir / name).string();
  }
};

}  // namespace

TEST_CASE("solve writes a trace and prints the converged summary") {
  TempDir tmp("solve");
  write_file(tmp.path("cfg.json"), R"({
    "command": "solve",
    "problem": {"id": "concave2d", "eps": 0.5},
    "scheme": {"kind": "lagrangian"},
    "primal": {"kind": "gd", "step_size": 0.01},
    "dual": {"kind": "nupi", "step_size": 0.3, "kappa_p": 40.0},
    "iters": 10000,
    "stride": 100
  })");
  int rc = run_cli("--config " + tmp.path("cfg.json") + " --out " + tmp.path("out"),
                   tmp.path("log.txt"));
  CHECK(rc == 0);
  std::string log = slurp(tmp.path("log.txt"));
  size_t xpos = log.find("x: ");
  REQUIRE(xpos != std::string::npos);
  double x_final = std::stod(log.substr(xpos + 3));
  CHECK(std::abs(x_final - 0.5236) <= 1e-3);
  CHECK(log.find("feasible: yes") != std::string::npos);

  CsvTable trace = read_csv(tmp.path("out") + "/trace.csv");
  CHECK(trace.header == std::vector<std::string>{"iter", "f", "g_0", "lambda_0",
                                                 "stationarity", "feasible"});
  CHECK(trace.rows.size() == 101);  // t = 0, 100, ..., 9900 and the final state
}

TEST_CASE("invalid configs exit 2 naming the offender") {
  TempDir tmp("badcfg");

  SUBCASE("malformed key") {
    write_file(tmp.path("cfg.json"), R"({
      "command": "solve",
      "problem": {"id": "concave2d"},
      "scheme": {"kind": "warp-drive"}
    })");
    int rc = run_cli("--config " + tmp.path("cfg.json"), tmp.path("log.txt"));
    CHECK(rc == 2);
    CHECK(slurp(tmp.path("log.txt")).find("penalized|lagrangian|augmented|proxy") !=
          std::string::npos);
  }

  SUBCASE("zero iterations") {
    write_file(tmp.path("cfg.json"), R"({
      "command": "solve",
      "problem": {"id": "convexquad"},
      "iters": 0
    })");
    int rc = run_cli("--config " + tmp.path("cfg.json"), tmp.path("log.txt"));
    CHECK(rc == 2);
    CHECK(slurp(tmp.path("log.txt")).find("iters") != std::string::npos);
  }

  SUBCASE("missing command") {
    write_file(tmp.path("cfg.json"), R"({"problem": {"id": "convexquad"}})");
    int rc = run_cli("--config " + tmp.path("cfg.json"), tmp.path("log.txt"));
    CHECK(rc == 2);
  }

  SUBCASE("unparseable json") {
    write_file(tmp.path("cfg.json"), "{nope");
    int rc = run_cli("--config " + tmp.path("cfg.json"), tmp.path("log.txt"));
    CHECK(rc == 2);
  }
}

TEST_CASE("identical config and seed yield bitwise-identical outputs") {
  TempDir tmp("determinism");
  write_file(tmp.path("cfg.json"), R"({
    "command": "solve",
    "problem": {"id": "rate", "dataset": {"seed": 3}},
    "scheme": {"kind": "proxy"},
    "primal": {"kind": "gd", "step_size": 0.02},
    "dual": {"kind": "ga", "step_size": 0.01},
    "iters": 2000,
    "stride": 10,
    "seed": 7
  })");
  CHECK(run_cli("--config " + tmp.path("cfg.json") + " --out " + tmp.path("a"),
                tmp.path("la.txt")) == 0);
  CHECK(run_cli("--config " + tmp.path("cfg.json") + " --out " + tmp.path("b"),
                tmp.path("lb.txt")) == 0);
  CHECK(slurp(tmp.path("a") + "/trace.csv") ==
        slurp(tmp.path("b") + "/trace.csv"));
}

TEST_CASE("sweep aggregates in axis order with the documented schema") {
  TempDir tmp("sweep");
  write_file(tmp.path("cfg.json"), R"({
    "command": "sweep",
    "problem": {"id": "rate"},
    "scheme": {"kind": "proxy"},
    "primal": {"kind": "gd", "step_size": 0.02},
    "dual": {"kind": "ga", "step_size": 0.01},
    "iters": 500,
    "sweep": {"axis": "dual_step", "values": [0.1, 0.001, 0.01]}
  })");
  int rc = run_cli("--config " + tmp.path("cfg.json") + " --out " +
                       tmp.path("out") + " --jobs 3",
                   tmp.path("log.txt"));
  CHECK(rc == 0);
  CsvTable sweep = read_csv(tmp.path("out") + "/sweep.csv");
  CHECK(sweep.header ==
        std::vector<std::string>{"value", "metric", "accuracy", "feasible"});
  REQUIRE(sweep.rows.size() == 3);
  CHECK(std::stod(sweep.rows[0][0]) == doctest::Approx(0.001));
  CHECK(std::stod(sweep.rows[1][0]) == doctest::Approx(0.01));
  CHECK(std::stod(sweep.rows[2][0]) == doctest::Approx(0.1));

  SUBCASE("single-value sweep matches the solve metric") {
    write_file(tmp.path("one.json"), R"({
      "command": "sweep",
      "problem": {"id": "rate"},
      "scheme": {"kind": "proxy"},
      "primal": {"kind": "gd", "step_size": 0.02},
      "dual": {"kind": "ga", "step_size": 0.01},
      "iters": 500,
      "sweep": {"axis": "dual_step", "values": [0.01]}
    })");
    CHECK(run_cli("--config " + tmp.path("one.json") + " --out " +
                      tmp.path("single"),
                  tmp.path("log2.txt")) == 0);
    CsvTable one = read_csv(tmp.path("single") + "/sweep.csv");
    REQUIRE(one.rows.size() == 1);
    CHECK(one.rows[0][1] == sweep.rows[1][1]);
  }
}

TEST_CASE("stub bisect replays the recorded sequence") {
  TempDir tmp("bisect");
  write_file(tmp.path("cfg.json"), R"({
    "command": "bisect",
    "bisect": {"lo": 1e-3, "hi": 1.0, "target": 50.0, "tol": 2.0,
               "max_iters": 5, "stub": true}
  })");
  int rc = run_cli("--config " + tmp.path("cfg.json") + " --out " + tmp.path("out"),
                   tmp.path("log.txt"));
  CHECK(rc == 0);
  CsvTable hist = read_csv(tmp.path("out") + "/bisection.csv");
  REQUIRE(hist.rows.size() == 7);  // 2 endpoints + 5 probes
  CHECK(std::stod(hist.rows[2][1]) == doctest::Approx(3.16e-2).epsilon(5e-3));
  CHECK(std::stod(hist.rows[6][1]) == doctest::Approx(2.21e-1).epsilon(5e-3));
  CHECK(std::stod(hist.rows[6][2]) == doctest::Approx(50.5));

  SUBCASE("endpoints only with a zero probe budget") {
    write_file(tmp.path("zero.json"), R"({
      "command": "bisect",
      "bisect": {"lo": 1e-3, "hi": 1.0, "target": 50.0, "tol": 2.0,
                 "max_iters": 0, "stub": true}
    })");
    CHECK(run_cli("--config " + tmp.path("zero.json") + " --out " +
                      tmp.path("zero_out"),
                  tmp.path("log3.txt")) == 0);
    CsvTable h2 = read_csv(tmp.path("zero_out") + "/bisection.csv");
    CHECK(h2.rows.size() == 2);
  }
}

TEST_CASE("certify exit codes") {
  TempDir tmp("certify");

  SUBCASE("analytic solution passes") {
    write_file(tmp.path("cand.json"),
               R"({"x": [0.5235987755982989, 0.0],
                   "lambda": [0.5773502691896258]})");
    write_file(tmp.path("cfg.json"), R"({
      "command": "certify",
      "problem": {"id": "concave2d", "eps": 0.5},
      "certify": {"candidate": ")" + tmp.path("cand.json") + R"("}
    })");
    int rc = run_cli("--config " + tmp.path("cfg.json") + " --out " +
                         tmp.path("out"),
                     tmp.path("log.txt"));
    CHECK(rc == 0);
    CHECK(slurp(tmp.path("log.txt")).find("second_order: pass") !=
          std::string::npos);
  }

  SUBCASE("origin corner fails second order") {
    write_file(tmp.path("cand.json"), R"({"x": [0.0, 0.0], "lambda": [0.0]})");
    write_file(tmp.path("cfg.json"), R"({
      "command": "certify",
      "problem": {"id": "concave2d", "eps": 0.5},
      "certify": {"candidate": ")" + tmp.path("cand.json") + R"("}
    })");
    int rc = run_cli("--config " + tmp.path("cfg.json") + " --out " +
                         tmp.path("out"),
                     tmp.path("log.txt"));
    CHECK(rc == 1);
  }

  SUBCASE("truncated candidate file exits 2") {
    write_file(tmp.path("cand.json"), R"({"x": [0.5)");
    write_file(tmp.path("cfg.json"), R"({
      "command": "certify",
      "problem": {"id": "concave2d", "eps": 0.5},
      "certify": {"candidate": ")" + tmp.path("cand.json") + R"("}
    })");
    int rc = run_cli("--config " + tmp.path("cfg.json"), tmp.path("log.txt"));
    CHECK(rc == 2);
  }
}

TEST_CASE("flags override config values") {
  TempDir tmp("flags");
  write_file(tmp.path("cfg.json"), R"({
    "command": "solve",
    "problem": {"id": "convexquad"},
    "scheme": {"kind": "lagrangian"},
    "primal": {"step_size": 0.1},
    "dual": {"step_size": 0.05},
    "iters": 50,
    "stride": 1,
    "out": ")" + tmp.path("from_config") + R"("
  })");
  CHECK(run_cli("--config " + tmp.path("cfg.json") + " --out " +
                    tmp.path("from_flag") + " --stride 25",
                tmp.path("log.txt")) == 0);
  CHECK(fs::exists(tmp.path("from_flag") + "/trace.csv"));
  CHECK_FALSE(fs::exists(tmp.path("from_config") + "/trace.csv"));
  CsvTable trace = read_csv(tmp.path("from_flag") + "/trace.csv");
  CHECK(trace.rows.size() == 3);  // t = 0, 25 and the final state
}
