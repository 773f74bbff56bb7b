#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& exe, const std::string& args) {
  const std::string cmd = "'" + exe + "' " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

Run alp(const std::string& args) { return run(ALP_CLI, args); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

// Fresh scratch directory per test case.
struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("alp_cli_test_" + std::to_string(getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator()(const std::string& name) const { return "'" + (dir / name).string() + "'"; }
  fs::path path(const std::string& name) const { return dir / name; }
};

}  // namespace

TEST_CASE("exit codes") {
  Scratch d;
  CHECK(alp("synth --sigma0 -0.1 --out " + d("s.csv")).code == 2);
  CHECK(!fs::exists(d.path("s.csv")));
  CHECK(alp("synth --grid nonsense --out " + d("s.csv")).code == 2);
  CHECK(alp("calibrate --in " + d("missing.csv") + " --out " + d("r")).code == 3);
  CHECK(alp("price --moneyness 1 --tenor 1 --sigma0 1").code == 2);
  CHECK(alp("").code == 2);

  REQUIRE(alp("synth --grid coarse --out " + d("s.csv")).code == 0);
  const std::string csv = slurp(d.path("s.csv"));
  std::ofstream(d.path("empty.csv")) << csv.substr(0, csv.find('\n') + 1);
  CHECK(alp("calibrate-seq --in " + d("empty.csv") + " --out " + d("e")).code == 2);
  CHECK(!fs::exists(d.path("e.report.json")));
}

TEST_CASE("synth writes the 50x100 grid and a dated sequence") {
  Scratch d;
  const Run r = alp("synth --preset eq24 --grid paper --out " + d("s.csv"));
  REQUIRE(r.code == 0);
  CHECK(count_lines(slurp(d.path("s.csv"))) == 1 + 50 * 100);
  const json m = json::parse(slurp(d.path("s.csv.manifest.json")));
  CHECK(m.at("command") == "synth");

  REQUIRE(alp("synth --dynamic sin --dates 16 --horizon 0.5 --grid coarse --out " + d("q.csv")).code == 0);
  std::istringstream in(slurp(d.path("q.csv")));
  std::string line;
  std::getline(in, line);
  std::size_t rows = 0;
  std::set<std::string> dates;
  while (std::getline(in, line)) {
    ++rows;
    dates.insert(line.substr(0, line.find(',')));
  }
  CHECK(dates.size() == 16);
  CHECK(rows == 16 * 13 * 20);
}

TEST_CASE("repeated runs are byte-identical") {
  Scratch d;
  REQUIRE(alp("synth --grid coarse --out " + d("s.csv")).code == 0);
  const std::string args = " --model neural --arch 8,8 --epochs 200 --polish 3 --in " + d("s.csv");
  REQUIRE(alp("calibrate" + args + " --out " + d("a")).code == 0);
  REQUIRE(alp("calibrate" + args + " --out " + d("b")).code == 0);
  for (const char* ext : {".report.json", ".term.json", ".terms.csv", ".fitted.csv"}) {
    CAPTURE(ext);
    CHECK(slurp(d.path(std::string("a") + ext)) == slurp(d.path(std::string("b") + ext)));
  }
  REQUIRE(alp("synth --grid coarse --out " + d("t.csv")).code == 0);
  CHECK(slurp(d.path("s.csv")) == slurp(d.path("t.csv")));
}

TEST_CASE("check passes and the fault build fails the martingale group") {
  CHECK(alp("check").code == 0);
  const Run only = alp("check --only parity");
  CHECK(only.code == 0);
  CHECK(only.out.find("martingale") == std::string::npos);
  const Run fault = run(ALP_CLI_FAULT, "check --only martingale");
  CHECK(fault.code == 1);
  CHECK(fault.out.find("FAIL") != std::string::npos);
}

TEST_CASE("price prints parity-consistent JSON") {
  const Run r = alp("price --preset eq24 --moneyness 1 --tenor 1");
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(std::fabs(j.at("call").get<double>() - 0.118996103399) <= 1e-12);
  CHECK(std::fabs(j.at("parity_residual").get<double>()) <= 1e-12);
  const json deep = json::parse(alp("price --moneyness 1e-12 --tenor 1").out);
  CHECK(std::fabs(deep.at("call").get<double>() - 1.0) <= 1e-9);
}

TEST_CASE("parametric calibration recovers the preset") {
  Scratch d;
  REQUIRE(alp("synth --grid coarse --out " + d("s.csv")).code == 0);
  REQUIRE(alp("calibrate --model parametric --in " + d("s.csv") + " --out " + d("p")).code == 0);
  const json term = json::parse(slurp(d.path("p.term.json")));
  const json want = {{"sigma0", 0.15}, {"H0", 0.45},  {"alpha0", 0.8},
                     {"alpha1", 1.0},  {"beta0", 0.7}, {"beta1", 2.0}};
  for (const auto& [k, v] : want.items()) {
    CAPTURE(k);
    const double got = term.at("params").at(k).get<double>();
    CHECK(std::fabs(got - v.get<double>()) <= 0.01 * v.get<double>());
  }
  const json report = json::parse(slurp(d.path("p.report.json")));
  CHECK(report.at("mse_table").back().at("tenor") == "All");
}
