#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <string>

#include "tndve/errors.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = TNDVE_CLI;
const std::string kData = TNDVE_TEST_DATA;

fs::path scratch() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("tndve_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  std::string cmd = kCli + " " + args + " >" + (scratch() / "stdout.txt").string() + " 2>" +
                    (scratch() / "stderr.txt").string();
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string data(const std::string& name) { return kData + "/" + name; }

}  // namespace

TEST_CASE("exit codes are distinct per error class") {
  using tndve::ErrorCode;
  std::set<int> seen{0, 1, 2, 3};
  for (ErrorCode c : {ErrorCode::File, ErrorCode::Schema, ErrorCode::Value, ErrorCode::RankDeficient,
                      ErrorCode::Separation, ErrorCode::NotConverged, ErrorCode::DimensionMismatch,
                      ErrorCode::DegenerateData, ErrorCode::DegenerateEstimand, ErrorCode::SingularJacobian,
                      ErrorCode::TooManyFailures, ErrorCode::UnknownScenario, ErrorCode::InvalidProbability,
                      ErrorCode::Config})
    CHECK(seen.insert(tndve::exit_code(c)).second);
}

TEST_CASE("estimate on the toy data") {
  CHECK(run("estimate " + data("toy_tnd.csv")) == 0);
  std::string out = slurp(scratch() / "stdout.txt");
  CHECK(out.find("psi") != std::string::npos);
  CHECK(run("estimate " + data("toy_cohort.csv") + " --design cohort --estimator standardized") == 0);
}

TEST_CASE("exit code matrix") {
  CHECK(run("estimate " + data("missing.csv")) == 10);
  CHECK(run("estimate " + data("toy_tnd.csv") + " --col-y outcome") == 11);
  CHECK(run("estimate " + data("bad_value.csv")) == 12);
  CHECK(run("estimate " + data("collinear.csv") + " --estimator logit") == 20);
  CHECK(run("estimate " + data("separated.csv")) == 21);
  CHECK(run("estimate " + data("cohort_no_focal.csv") + " --design cohort --estimator standardized") == 30);
  CHECK(run("estimate " + data("tnd_no_vax_cases.csv") + " --estimator dr") == 31);
  CHECK(run("estimate " + data("toy_tnd.csv") + " --ci bootstrap --boot-b 200 --seed 1") == 40);
  CHECK(run("gen-data --scenario 9 --out " + (scratch() / "g.csv").string()) == 50);
  {
    std::ofstream cfg(scratch() / "badprob.json");
    cfg << R"({"scenario": 1, "beta10": 0.5, "n": 500})";
  }
  CHECK(run("gen-data --config " + (scratch() / "badprob.json").string() + " --out " + (scratch() / "g.csv").string()) ==
        51);
  CHECK(run("simulate --scenario 2 --misspec ps --out " + (scratch() / "sim_bad").string()) == 60);
  CHECK(run("estimate") == 2);
  CHECK(run("estimate " + data("toy_tnd.csv") + " --ci jackknife") == 2);
  std::string err = slurp(scratch() / "stderr.txt");
  CHECK_FALSE(err.empty());
}

TEST_CASE("errors name their class on stderr") {
  CHECK(run("estimate " + data("separated.csv")) == 21);
  CHECK(slurp(scratch() / "stderr.txt").find("Separation") != std::string::npos);
}

TEST_CASE("simulate is reproducible and replays bit for bit") {
  const std::string common = "simulate --scenario 1,8 --reps 3 --population 3000 --estimators tnd-om,cohort --seed 11 ";
  fs::path a = scratch() / "sim_a", b = scratch() / "sim_b";
  REQUIRE(run(common + "--out " + a.string()) == 0);
  REQUIRE(run(common + "--workers 2 --out " + b.string()) == 0);
  for (const char* f : {"replicates.csv", "summary.csv", "summary.md"}) {
    CAPTURE(f);
    CHECK(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  REQUIRE(fs::exists(a / "manifest.json"));
  CHECK(run("replay " + (a / "manifest.json").string() + " --out " + (scratch() / "sim_replay").string()) == 0);
  CHECK(slurp(scratch() / "stdout.txt").find("bit-identical") != std::string::npos);

  fs::path est = scratch() / "est.csv";
  REQUIRE(run("estimate " + data("toy_tnd.csv") + " --out " + est.string()) == 0);
  fs::path manifest = est.string() + ".manifest.json";
  REQUIRE(fs::exists(manifest));
  CHECK(run("replay " + manifest.string() + " --out " + (scratch() / "est_replay.csv").string()) == 0);

  // a recorded digest that no longer matches
  nlohmann::json m = nlohmann::json::parse(slurp(manifest));
  m["outputs"][0]["sha256"] = std::string(64, '0');
  std::ofstream(manifest) << m.dump(2);
  CHECK(run("replay " + manifest.string() + " --out " + (scratch() / "est_replay2.csv").string()) == 3);
}

TEST_CASE("gen-data writes a readable population") {
  fs::path out = scratch() / "pop.csv";
  REQUIRE(run("gen-data --scenario 2 --n 800 --seed 4 --tested --out " + out.string()) == 0);
  CHECK(run("estimate " + out.string() + " --estimator om") == 0);
  fs::path again = scratch() / "pop2.csv";
  REQUIRE(run("gen-data --scenario 2 --n 800 --seed 4 --tested --out " + again.string()) == 0);
  CHECK(slurp(out) == slurp(again));
}

TEST_CASE("sensitivity writes one row per grid point") {
  fs::path out = scratch() / "sens.csv";
  REQUIRE(run("sensitivity " + data("toy_tnd.csv") + " --omega 1 --points 5 --ci none --out " + out.string()) == 0);
  std::istringstream in(slurp(out));
  std::string line;
  int rows = 0;
  std::getline(in, line);
  CHECK(line.rfind("eta,psi,ve", 0) == 0);
  while (std::getline(in, line)) rows += !line.empty();
  CHECK(rows == 5);
}
