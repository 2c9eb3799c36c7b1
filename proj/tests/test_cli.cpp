#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef LQR_CLI_PATH
#error "LQR_CLI_PATH must point at the command-line binary"
#endif

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code;
  std::string output;  // stdout + stderr
};

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("lqr_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

RunResult run_cli(const std::string& args) {
  const fs::path log = scratch_dir() / "run.log";
  const std::string cmd =
      std::string(LQR_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_instance(const std::string& name, const std::string& body) {
  const fs::path p = scratch_dir() / name;
  std::ofstream out(p);
  out << body;
  return p;
}

}  // namespace

TEST_CASE("solve writes a manifest-stamped report", "[cli]") {
  const fs::path out = scratch_dir() / "solve";
  const RunResult r =
      run_cli("solve --builtin single-integrator --out " + out.string());
  REQUIRE(r.exit_code == 0);

  const std::string manifest = slurp(out / "manifest.json");
  CHECK(manifest.find("\"command\": \"solve\"") != std::string::npos);
  CHECK(manifest.find("\"hash\"") != std::string::npos);

  const std::string report = slurp(out / "solve.json");
  CHECK(report.find("\"manifest_hash\"") != std::string::npos);
  CHECK(report.find("\"P_star\"") != std::string::npos);

  // The stamp in the report matches the manifest's own hash.
  auto extract = [](const std::string& text, const std::string& key) {
    const auto pos = text.find(key);
    REQUIRE(pos != std::string::npos);
    const auto open = text.find('"', pos + key.size() + 1);
    const auto close = text.find('"', open + 1);
    return text.substr(open + 1, close - open - 1);
  };
  CHECK(extract(report, "\"manifest_hash\":") == extract(manifest, "\"hash\":"));
}

TEST_CASE("exit codes distinguish failure classes", "[cli]") {
  SECTION("bad invocations return 1") {
    CHECK(run_cli("solve --builtin no-such-plant --out /tmp/x").exit_code == 1);
    CHECK(run_cli("solve --out /tmp/x").exit_code == 1);  // no instance at all
    const fs::path missing = scratch_dir() / "does_not_exist.json";
    CHECK(run_cli("solve --instance " + missing.string() + " --out /tmp/x").exit_code == 1);
  }
  SECTION("violated standing assumptions return 2") {
    const fs::path p = write_instance(
        "zero_q.json",
        R"({"A":[[0.0]],"B":[[1.0]],"Q":[[0.0]],"R":[[1.0]],"W":[[1.0]]})");
    const RunResult r =
        run_cli("solve --instance " + p.string() + " --out " +
                (scratch_dir() / "zq").string());
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("assumption violated") != std::string::npos);
  }
  SECTION("numerical breakdown returns 3") {
    const fs::path out = scratch_dir() / "pgd_bad";
    const RunResult r = run_cli(
        "pgd --builtin single-integrator --k0 -0.5 --alpha 1.0 --out " +
        out.string());
    CHECK(r.exit_code == 3);
    CHECK(r.output.find("step size") != std::string::npos);
  }
  SECTION("failed example checks return 4") {
    // --only with no match is an invocation error, not a check failure.
    CHECK(run_cli("examples --only no-such-check").exit_code == 1);
  }
}

TEST_CASE("reruns are byte-identical", "[cli][determinism]") {
  const fs::path out_a = scratch_dir() / "pl_a";
  const fs::path out_b = scratch_dir() / "pl_b";
  const std::string args = " --builtin stiff-pair --samples 40 --seed 7 --out ";
  REQUIRE(run_cli("pl" + args + out_a.string()).exit_code == 0);
  REQUIRE(run_cli("pl" + args + out_b.string()).exit_code == 0);
  CHECK(slurp(out_a / "pl.csv") == slurp(out_b / "pl.csv"));
  CHECK(slurp(out_a / "pl.json") == slurp(out_b / "pl.json"));
}

TEST_CASE("grid output is independent of the worker count", "[cli][determinism]") {
  const fs::path out_a = scratch_dir() / "grid_a";
  const fs::path out_b = scratch_dir() / "grid_b";
  const std::string args =
      " --builtin coupled-pair --k1-lo -2 --k1-hi 2 --k1-n 21 --k2-lo -2 "
      "--k2-hi 2 --k2-n 21 --out ";
  const std::string bin(LQR_CLI_PATH);
  auto with_threads = [&](const std::string& n, const fs::path& out) {
    const std::string cmd = "LQR_LANDSCAPE_THREADS=" + n + " " + bin +
                            " landscape" + args + out.string() + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  REQUIRE(with_threads("1", out_a) == 0);
  REQUIRE(with_threads("4", out_b) == 0);
  const std::string csv_a = slurp(out_a / "landscape.csv");
  CHECK(csv_a == slurp(out_b / "landscape.csv"));
  CHECK(csv_a.find("nan") != std::string::npos);  // unstable cells are marked
  CHECK(csv_a.rfind("# manifest_hash=", 0) == 0);
}

TEST_CASE("trajectory run reports the sandwich", "[cli]") {
  const fs::path out = scratch_dir() / "gram";
  const RunResult r =
      run_cli("gramian --builtin unit-integrator --out " + out.string());
  REQUIRE(r.exit_code == 0);
  const std::string report = slurp(out / "gramian.json");
  CHECK(report.find("\"J1_relaxation\"") != std::string::npos);
  CHECK(report.find("\"J2_static\"") != std::string::npos);
  CHECK(report.find("\"sdp_residual\"") != std::string::npos);
  const std::string csv = slurp(out / "trajectory.csv");
  CHECK(csv.find("t,x_1,u_1") != std::string::npos);
  // First data row is the initial state itself.
  CHECK(csv.find("\n0,1,-1\n") != std::string::npos);
}

TEST_CASE("example checks filter and scale", "[cli]") {
  CHECK(run_cli("examples").exit_code == 0);
  const RunResult one = run_cli("examples --only sandwich");
  CHECK(one.exit_code == 0);
  CHECK(one.output.find("sandwich") != std::string::npos);
  CHECK(one.output.find("closed-forms") == std::string::npos);
  // Loosening tolerances must never break a passing check.
  CHECK(run_cli("examples --tol 10").exit_code == 0);
  // Crushing them must: exit 4 with the failing checks named.
  const RunResult crushed = run_cli("examples --tol 1e-15");
  CHECK(crushed.exit_code == 4);
  CHECK(crushed.output.find("FAIL") != std::string::npos);
}

TEST_CASE("landscape slice reports a flattening basin", "[cli]") {
  const fs::path out1 = scratch_dir() / "slice1";
  const fs::path out10 = scratch_dir() / "slice10";
  const std::string tail = " --out ";
  REQUIRE(run_cli("landscape --builtin coupled-pair --slice-b 1" + tail +
                  out1.string())
              .exit_code == 0);
  REQUIRE(run_cli("landscape --builtin coupled-pair --slice-b 10" + tail +
                  out10.string())
              .exit_code == 0);

  const std::string csv = slurp(out10 / "slice.csv");
  CHECK(csv.rfind("# manifest_hash=", 0) == 0);
  CHECK(csv.find("k,J\n") != std::string::npos);

  const auto curvature_of = [](const std::string& report) {
    const auto pos = report.find("\"curvature\":");
    REQUIRE(pos != std::string::npos);
    return std::stod(report.substr(pos + 12));
  };
  const double c1 = curvature_of(slurp(out1 / "slice.json"));
  const double c10 = curvature_of(slurp(out10 / "slice.json"));
  CHECK(c1 == Catch::Approx(1960.0 / 627.0).epsilon(1e-5));
  CHECK(c10 < 0.2 * c1);  // the basin flattens as b grows
  CHECK(slurp(out10 / "slice.json").find("\"curvature_reference\"") !=
        std::string::npos);
}

TEST_CASE("certify reports ranks and strictness", "[cli]") {
  const fs::path out = scratch_dir() / "cert";
  const RunResult r =
      run_cli("certify --builtin stiff-pair --out " + out.string());
  REQUIRE(r.exit_code == 0);
  const std::string report = slurp(out / "certify.json");
  CHECK(report.find("\"strict_complementarity\": true") != std::string::npos);
  CHECK(report.find("\"rank_M\": 1") != std::string::npos);
  CHECK(report.find("\"rank_Z\": 2") != std::string::npos);

  const fs::path out2 = scratch_dir() / "cert2";
  REQUIRE(run_cli("certify --builtin coupled-pair --out " + out2.string())
              .exit_code == 0);
  const std::string degenerate = slurp(out2 / "certify.json");
  CHECK(degenerate.find("\"strict_complementarity\": false") != std::string::npos);
}

TEST_CASE("certify runs a generated seed suite", "[cli]") {
  const fs::path out = scratch_dir() / "cert_rand";
  const RunResult r = run_cli("certify --random-seeds 100 --random-n 4 --random-m 2 --out " +
                              out.string());
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("bundles=100/100") != std::string::npos);
  const std::string report = slurp(out / "certify_random.json");
  CHECK(report.find("\"bundles\": 100") != std::string::npos);
  CHECK(report.find("\"passes\": 100") != std::string::npos);
  CHECK(report.find("\"pass\": false") == std::string::npos);
  // Fixed dimensions land in every row; no seed may drift to another shape.
  CHECK(report.find("\"n\": 3") == std::string::npos);
  CHECK(report.find("\"m\": 1,") == std::string::npos);

  // The suite flags exclude a concrete instance and demand --random-seeds.
  CHECK(run_cli("certify --random-seeds 5 --builtin stiff-pair --out " +
                out.string())
            .exit_code == 1);
  CHECK(run_cli("certify --random-n 4 --builtin stiff-pair --out " + out.string())
            .exit_code == 1);
}
