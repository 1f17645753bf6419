#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "esn/io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path log =
      fs::temp_directory_path() / ("esnlab_log_" + std::to_string(counter++));
  const std::string cmd =
      std::string("\"") + ESNLAB_PATH + "\" " + args + " > " + log.string() +
      " 2>&1";
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.output = esn::read_text_file(log.string());
  fs::remove(log);
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("esnlab_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::istringstream in(esn::read_text_file(path.string()));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("help lists every subcommand") {
  const RunResult r = run_cli("--help");
  CHECK(r.exit_code == 0);
  for (const char* name :
       {"esp-test", "sweep", "scaling", "extreme-rho", "lipschitz",
        "verify-spectral", "oracle", "curves"}) {
    CAPTURE(name);
    CHECK(r.output.find(name) != std::string::npos);
  }
}

TEST_CASE("missing subcommand is a usage error") {
  const RunResult r = run_cli("");
  CHECK(r.exit_code != 0);
}

TEST_CASE("esp-test with defaults reports convergence and writes records") {
  const fs::path dir = fresh_dir("esp");
  const RunResult r = run_cli("esp-test --out " + dir.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("converged=true") != std::string::npos);

  const auto records =
      nlohmann::json::parse(esn::read_text_file((dir / "esp_test.json").string()));
  REQUIRE(records.is_array());
  REQUIRE(records.size() == 1);
  const auto& rec = records[0];
  CHECK(rec["trial"] == 0);
  CHECK(rec["converged"] == true);
  CHECK(rec["convergence_time"].get<int>() > 0);
  CHECK(rec["diverged"] == false);
  REQUIRE(rec["distances"].is_array());
  CHECK(rec["distances"].size() > 10);

  const std::vector<std::string> trace = read_lines(dir / "trace_0.csv");
  REQUIRE(!trace.empty());
  CHECK(trace[0] == "t,distance");
  CHECK(trace.size() == rec["distances"].size() + 1);
}

TEST_CASE("identical sweep invocations emit identical bytes") {
  const fs::path a = fresh_dir("sweep_a");
  const fs::path b = fresh_dir("sweep_b");
  const std::string grid =
      "sweep --set n_values=20 --set rho_values=0.5,0.95 "
      "--set leak_values=0.3,0.7 --set trials_per_cell=3 --set seeds=1,2";
  const RunResult ra = run_cli(grid + " --parallelism 1 --out " + a.string());
  const RunResult rb = run_cli(grid + " --parallelism 3 --out " + b.string());
  CHECK(ra.exit_code == 0);
  CHECK(rb.exit_code == 0);
  for (const char* name : {"phase.csv", "phase.json"}) {
    CAPTURE(name);
    CHECK(esn::read_text_file((a / name).string()) ==
          esn::read_text_file((b / name).string()));
  }
}

TEST_CASE("unknown sweep key exits with the validation code") {
  const fs::path dir = fresh_dir("sweep_bad");
  const RunResult r = run_cli("sweep --set bogus=1 --out " + dir.string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("bogus") != std::string::npos);
}

TEST_CASE("verify-spectral hits the requested radius on the dense path") {
  const fs::path dir = fresh_dir("spectral");
  const RunResult r =
      run_cli("verify-spectral --n 100 --rho 10 --out " + dir.string());
  CHECK(r.exit_code == 0);

  const std::vector<std::string> lines = read_lines(dir / "eigenvalues.csv");
  REQUIRE(lines.size() == 101);
  CHECK(lines[0] == "re,im");
  double max_modulus = 0.0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t comma = lines[i].find(',');
    REQUIRE(comma != std::string::npos);
    const std::complex<double> z(std::stod(lines[i].substr(0, comma)),
                                 std::stod(lines[i].substr(comma + 1)));
    max_modulus = std::max(max_modulus, std::abs(z));
  }
  CHECK(max_modulus == doctest::Approx(10.0).epsilon(1e-5));
}

TEST_CASE("curves writes the requested number of samples") {
  const fs::path dir = fresh_dir("curves");
  const RunResult r =
      run_cli("curves --family tanh --points 101 --out " + dir.string());
  CHECK(r.exit_code == 0);
  const std::vector<std::string> lines = read_lines(dir / "curve_tanh.csv");
  REQUIRE(lines.size() == 102);
  CHECK(lines[0] == "x,value");
  CHECK(lines[1].rfind("-3,", 0) == 0);
  CHECK(lines[101].rfind("3,", 0) == 0);
}

TEST_CASE("oracle reports a unique zero-input attractor") {
  const fs::path dir = fresh_dir("oracle");
  const RunResult r =
      run_cli("oracle --n 3 --inits 6 --zero-input --out " + dir.string());
  CHECK(r.exit_code == 0);

  const auto j =
      nlohmann::json::parse(esn::read_text_file((dir / "oracle.json").string()));
  CHECK(j["unique"] == true);
  CHECK(j["budget_exhausted"] == false);
  REQUIRE(j["cycles"].is_array());
  CHECK(j["cycles"].size() >= 1);
  long basin_total = 0;
  for (const auto& basin : j["basin_counts"]) basin_total += basin.get<long>();
  CHECK(basin_total == 6);
}

TEST_CASE("lipschitz table has one row per requested family") {
  const fs::path dir = fresh_dir("lip");
  const RunResult r = run_cli(
      "lipschitz --families tanh,relu --samples 5000 --out " + dir.string());
  CHECK(r.exit_code == 0);
  const std::vector<std::string> lines = read_lines(dir / "lipschitz.csv");
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "family,max,median,p95");
  CHECK(lines[1].rfind("tanh,", 0) == 0);
  CHECK(lines[2].rfind("relu,", 0) == 0);
}
