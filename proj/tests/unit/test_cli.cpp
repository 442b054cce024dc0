#include <doctest.h>

#include "artifacts.hpp"
#include "config.hpp"
#include "experiments.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;
using namespace branchlab::cli;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("branchlab_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

json frequency_config(const std::string& out) {
  json j = json::parse(R"({
    "schema_version": 1, "kind": "frequency", "seed": 1,
    "field": {"type": "cylindrical", "n": 2, "k": 1, "c": [[0.7071067811865476, 0], [0, 0.7071067811865476]]},
    "params": {"radii": [0.2, 0.4, 0.6, 0.8, 1.0], "expected_N": 0.5, "tol": 1e-6}
  })");
  j["output_dir"] = out;
  return j;
}

json monotonicity_config(const std::string& out) {
  json j = json::parse(R"({
    "schema_version": 1, "kind": "monotonicity", "seed": 5,
    "field": {"type": "random_power_sum", "m": 2, "terms": 2, "index": 0},
    "params": {"family_size": 2, "count": 12}
  })");
  j["output_dir"] = out;
  return j;
}

json control_config(const std::string& out) {
  json j = json::parse(R"({
    "schema_version": 1, "kind": "monotonicity", "seed": 3,
    "field": {"type": "angular_modes", "n": 2,
              "modes": [{"beta": 0.5, "omega": 2.5, "c": [1.0]}, {"beta": 2.5, "omega": 0.5, "c": [1.0]}]},
    "params": {"rho_min": 0.05, "rho_max": 0.9, "count": 20},
    "expect_fail": ["monotone", "squash_order", "squeeze_order", "radial_order"]
  })");
  j["output_dir"] = out;
  return j;
}

std::string key_of(const json& j) {
  try {
    (void)parse_config(j, fs::temp_directory_path());
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<valid>";
}

struct ToolResult {
  int exit_code = -1;
  std::string out;
};

ToolResult run_tool(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const std::string cmd = std::string(BRANCHLAB_TOOL_PATH) + " " + args + " > " + out.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  ToolResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out);
  return r;
}

void write_json(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(2); }

}  // namespace

TEST_CASE("frequency experiment writes a constant N column") {
  const fs::path dir = scratch("freq");
  const ExperimentConfig cfg = parse_config(frequency_config((dir / "run").string()), dir);
  REQUIRE(run_experiment(cfg) == kExitOk);
  std::istringstream csv(read_file(dir / "run" / "frequency.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "rho,D,H,N,dN_drho");
  int rows = 0;
  while (std::getline(csv, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    REQUIRE(cells.size() == 5);
    CHECK(std::abs(std::stod(cells[3]) - 0.5) <= 1e-6);
    ++rows;
  }
  CHECK(rows == 5);
  std::ostringstream os;
  CHECK(report_directory(dir / "run", os) == kExitOk);
  CHECK(os.str().find("ALL GREEN") != std::string::npos);
}

TEST_CASE("identical configs produce byte-identical artifacts") {
  const fs::path dir = scratch("determinism");
  // same output path both times: config.json echoes it
  const ExperimentConfig cfg = parse_config(monotonicity_config((dir / "a").string()), dir);
  REQUIRE(run_experiment(cfg) == kExitOk);
  fs::rename(dir / "a", dir / "b");
  REQUIRE(run_experiment(cfg) == kExitOk);
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir / "a")) files.push_back(e.path().filename().string());
  REQUIRE(files.size() >= 4);
  for (const auto& f : files) CHECK(read_file(dir / "a" / f) == read_file(dir / "b" / f));
}

TEST_CASE("config validation names the offending key") {
  const std::string out = "unused";
  json j = frequency_config(out);
  CHECK(key_of(j) == "<valid>");

  json bad = j;
  bad["colour"] = 1;
  CHECK(key_of(bad) == "/colour");

  bad = j;
  bad["params"]["tol"] = -1.0;
  CHECK(key_of(bad) == "/params/tol");

  bad = j;
  bad["schema_version"] = 2;
  CHECK(key_of(bad) == "/schema_version");

  bad = j;
  bad["kind"] = "magic";
  CHECK(key_of(bad) == "/kind");

  bad = j;
  bad["field"]["type"] = "nonsense";
  CHECK(key_of(bad).rfind("/field", 0) == 0);

  bad = j;
  bad["params"]["theta"] = 0.3;
  CHECK(key_of(bad) == "/params/theta");
}

TEST_CASE("tool exit codes and error JSON") {
  const fs::path dir = scratch("tool");
  {
    std::ofstream(dir / "broken.json") << "{\"schema_version\": 1, \"kind\": ";
    const ToolResult r = run_tool("validate " + (dir / "broken.json").string(), dir);
    CHECK(r.exit_code == kExitConfig);
    const json e = json::parse(r.out);
    CHECK(e.at("error") == "config");
  }
  {
    json bad = frequency_config("out");
    bad["params"]["tol"] = "tight";
    write_json(dir / "bad_tol.json", bad);
    const ToolResult r = run_tool("run " + (dir / "bad_tol.json").string(), dir);
    CHECK(r.exit_code == kExitConfig);
    const json e = json::parse(r.out);
    CHECK(e.at("key") == "/params/tol");
  }
  {
    write_json(dir / "ok.json", frequency_config("out"));
    const ToolResult r = run_tool("validate " + (dir / "ok.json").string(), dir);
    CHECK(r.exit_code == kExitOk);
    CHECK(json::parse(r.out).at("valid") == true);
  }
  {
    fs::create_directories(dir / "empty");
    const ToolResult r = run_tool("report " + (dir / "empty").string(), dir);
    CHECK(r.exit_code == kExitConfig);
  }
}

TEST_CASE("report lists expected failures of the negative control") {
  const fs::path dir = scratch("report");
  REQUIRE(run_experiment(parse_config(control_config((dir / "control").string()), dir)) == kExitOk);
  std::ostringstream os;
  CHECK(report_directory(dir, os) == kExitOk);
  const std::string text = os.str();
  for (const char* check : {"monotone", "squash_order", "squeeze_order", "radial_order"}) {
    const auto pos = text.find(check);
    REQUIRE(pos != std::string::npos);
    CHECK(text.substr(pos, text.find('\n', pos) - pos).find("EXPECTED-FAIL") != std::string::npos);
  }
  CHECK(text.find("ALL GREEN") != std::string::npos);
}

TEST_CASE("report rejects empty directories and tampered artifacts") {
  const fs::path dir = scratch("tamper");
  std::ostringstream sink;
  CHECK_THROWS_AS(report_directory(dir, sink), ConfigError);

  REQUIRE(run_experiment(parse_config(frequency_config((dir / "run").string()), dir)) == kExitOk);
  std::ofstream(dir / "run" / "frequency.csv", std::ios::app) << "0,0,0,0,0\n";
  std::ostringstream os;
  CHECK(report_directory(dir / "run", os) == kExitChecksFailed);
  CHECK(os.str().find("FAILURES PRESENT") != std::string::npos);

  std::ofstream(dir / "run" / "stray.txt") << "x";
  std::ostringstream os2;
  CHECK(report_directory(dir / "run", os2) == kExitChecksFailed);
}

TEST_CASE("manifest lists every artifact with its hash") {
  const fs::path dir = scratch("manifest");
  REQUIRE(run_experiment(parse_config(frequency_config((dir / "run").string()), dir)) == kExitOk);
  const json m = json::parse(read_file(dir / "run" / "manifest.json"));
  std::size_t listed = 0;
  for (const auto& f : m.at("files")) {
    CHECK(f.at("sha256") == sha256_hex(read_file(dir / "run" / f.at("name").get<std::string>())));
    ++listed;
  }
  std::size_t present = 0;
  for (const auto& e : fs::directory_iterator(dir / "run"))
    if (e.path().filename() != "manifest.json") ++present;
  CHECK(listed == present);
}

TEST_CASE("sha256 of a known string") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
