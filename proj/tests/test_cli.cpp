#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

std::string bin() {
  const char* b = std::getenv("WIDTHFLOW_BIN");
  REQUIRE(b != nullptr);
  return b;
}

int run(const std::string& args) {
  const std::string cmd = bin() + " " + args + " > /dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WEXITSTATUS(st);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path work() {
  static fs::path p = [] {
    fs::path q = fs::temp_directory_path() / "widthflow_cli_test";
    fs::remove_all(q);
    fs::create_directories(q);
    return q;
  }();
  return p;
}

}  // namespace

TEST_CASE("usage and parse errors exit 2") {
  CHECK(run("") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("gen --kind nope") == 2);
  CHECK(run("measure --input " + (work() / "missing.json").string()) == 2);
  CHECK(run("verify --suite nope") == 2);
  // unknown config key
  std::ofstream(work() / "bad.json") << "{\"unknown_key\": 1}\n";
  CHECK(run("gen --config " + (work() / "bad.json").string()) == 2);
  // malformed body file
  std::ofstream(work() / "broken.json") << "{not json";
  CHECK(run("measure --input " + (work() / "broken.json").string()) == 2);
}

TEST_CASE("gen + measure round trip") {
  const fs::path d = work() / "gen";
  CHECK(run("gen --kind ball --out " + d.string()) == 0);
  CHECK(fs::exists(d / "body.json"));
  CHECK(run("measure --input " + (d / "body.json").string() + " --out " +
            d.string()) == 0);
  nlohmann::json j = nlohmann::json::parse(slurp(d / "measure.json"));
  CHECK(std::abs(j["R"].get<double>() - 0.5) < 1e-9);
  CHECK(std::abs(j["V_energy"].get<double>() - M_PI / 6.0) < 1e-9);
  for (const auto& c : j["checks"]) CHECK(c["pass"].get<bool>());
}

TEST_CASE("outputs are deterministic and flags beat config") {
  const fs::path a = work() / "da", b = work() / "db", c = work() / "dc";
  CHECK(run("gen --kind random --seed 7 --out " + a.string()) == 0);
  CHECK(run("gen --kind random --seed 7 --out " + b.string()) == 0);
  CHECK(slurp(a / "body.json") == slurp(b / "body.json"));

  std::ofstream(work() / "cfg.json")
      << "{\"kind\": \"random\", \"seed\": 3}\n";
  CHECK(run("gen --config " + (work() / "cfg.json").string() +
            " --seed 7 --out " + c.string()) == 0);
  CHECK(slurp(c / "body.json") == slurp(a / "body.json"));  // flag wins
}

TEST_CASE("flow on the ball: one recorded state, converged") {
  const fs::path d = work() / "flow";
  const fs::path ball = work() / "gen" / "body.json";
  CHECK(run("flow --input " + ball.string() + " --n-steps 5 --out " +
            d.string()) == 0);
  const std::string csv = slurp(d / "trace.csv");
  CHECK(csv.find("step,time,R,r,V") == 0);
  nlohmann::json j = nlohmann::json::parse(slurp(d / "diagnostics.json"));
  CHECK(j["converged"].get<bool>());
  CHECK(j["steps"].get<int>() == 0);
  CHECK(fs::exists(d / "body_0000.json"));
  // byte-identical rerun
  const fs::path d2 = work() / "flow2";
  CHECK(run("flow --input " + ball.string() + " --n-steps 5 --out " +
            d2.string()) == 0);
  CHECK(slurp(d2 / "trace.csv") == csv);
}

TEST_CASE("export-mesh writes a well-formed OBJ") {
  const fs::path d = work() / "mesh";
  const fs::path body = work() / "da" / "body.json";
  CHECK(run("export-mesh --input " + body.string() +
            " --resolution 12 --out " + d.string()) == 0);
  const std::string obj = slurp(d / "body.obj");
  CHECK(obj.find("v ") != std::string::npos);
  CHECK(obj.find("f ") != std::string::npos);
}

TEST_CASE("mollify-demo: deterministic, infeasible measures exit 3") {
  const fs::path a = work() / "ma", b = work() / "mb";
  CHECK(run("mollify-demo --seed 3 --epsilon 0.1 --out " + a.string()) == 0);
  CHECK(run("mollify-demo --seed 3 --epsilon 0.1 --out " + b.string()) == 0);
  CHECK(slurp(a / "mollify.json") == slurp(b / "mollify.json"));
  CHECK(slurp(a / "measure.json") == slurp(b / "measure.json"));
  // an atom off the sphere is an infeasible input
  std::ofstream(work() / "off.json")
      << "{\"atoms\": [{\"x\": 0, \"y\": 0, \"z\": 2, \"mass\": 1}]}\n";
  CHECK(run("mollify-demo --input " + (work() / "off.json").string()) == 3);
}

TEST_CASE("verify writes machine-readable verdicts") {
  const fs::path d = work() / "verify";
  CHECK(run("verify --suite mollifier --count 4 --seed 1 --out " +
            d.string()) == 0);
  nlohmann::json j = nlohmann::json::parse(slurp(d / "verify.json"));
  CHECK(j["pass"].get<bool>());
  REQUIRE(j["suites"].size() == 1);
  CHECK(j["suites"][0]["suite"].get<std::string>() == "mollifier");
  for (const auto& r : j["suites"][0]["results"])
    CHECK(r["pass"].get<bool>());
}
