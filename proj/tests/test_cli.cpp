#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "savflow/experiment.hpp"

using namespace savflow;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json base_config() {
  return json{
      {"schema", 1},
      {"kind", "coarsening"},
      {"model",
       {{"name", "gl"}, {"eps", 0.2}, {"beta", 1.0}, {"gamma", 1.0}, {"s", 1.0}}},
      {"grid", {{"n", {16, 16}}}},
      {"initial", {{"type", "random"}, {"amplitude", 0.1}, {"mean", 0.0}}},
      {"seed", 99},
      {"scheme", {{"name", "cn-substep"}}},
      {"time", {{"dt", 1e-3}, {"T", 0.01}}},
      {"output", {{"directory", "unused"}, {"ledger_every", 1}}}};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Expect validation failure whose message mentions the given field path.
void expect_reject(const json& cfg, const std::string& needle) {
  try {
    validate_config_json(cfg);
    FAIL_CHECK("config accepted; expected rejection mentioning " << needle);
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find(needle) != std::string::npos);
  }
}

}  // namespace

TEST_CASE("valid config is accepted") {
  CHECK_NOTHROW(validate_config_json(base_config()));
}

TEST_CASE("schema and kind validation") {
  json c = base_config();
  c["schema"] = 2;
  expect_reject(c, "schema");
  c = base_config();
  c.erase("schema");
  expect_reject(c, "schema");
  c = base_config();
  c["kind"] = "nonsense";
  expect_reject(c, "kind");
}

TEST_CASE("unknown keys are rejected with their path") {
  json c = base_config();
  c["extra_block"] = 1;
  expect_reject(c, "extra_block");
  c = base_config();
  c["model"]["typo"] = 3.0;
  expect_reject(c, "model");
  c = base_config();
  c["time"]["Tfinal"] = 1.0;
  expect_reject(c, "Tfinal");
}

TEST_CASE("parameter range validation points at the offending field") {
  json c = base_config();
  c["grid"]["n"] = {15, 16};
  expect_reject(c, "grid.n");
  c = base_config();
  c["model"]["eps"] = -0.1;
  expect_reject(c, "model");
  c = base_config();
  c["output"]["ledger_every"] = 0;
  expect_reject(c, "ledger_every");
  c = base_config();
  c["scheme"]["name"] = "rk4";
  expect_reject(c, "scheme");
  c = base_config();
  c["initial"]["type"] = "gaussian";
  expect_reject(c, "initial");
  c = base_config();
  c.erase("seed");
  expect_reject(c, "seed");
}

TEST_CASE("qtensor configs require a 3-D grid") {
  json c = base_config();
  c["kind"] = "qtensor";
  c["model"] = {{"name", "qtensor"}, {"a", -1.0}, {"b", -4.0}, {"c", 4.0},
                {"L1", 1.0}};
  c["initial"] = {{"type", "random"}, {"amplitude", 0.1}};
  expect_reject(c, "grid.n");
}

TEST_CASE("identical config and seed reproduce the ledger byte for byte") {
  fs::path tmp = fs::temp_directory_path() / "savflow_cli_test";
  fs::remove_all(tmp);
  json c = base_config();
  fs::path cfg_path = tmp / "cfg.json";
  fs::create_directories(tmp);
  std::ofstream(cfg_path) << c.dump(2);

  ExperimentConfig a = load_config(cfg_path.string());
  a.out_dir = (tmp / "a").string();
  ExperimentOutcome oa = run_experiment(a, 1);
  ExperimentConfig b = load_config(cfg_path.string());
  b.out_dir = (tmp / "b").string();
  ExperimentOutcome ob = run_experiment(b, 1);

  CHECK(oa.passed);
  CHECK(ob.passed);
  std::string la = slurp(tmp / "a" / "ledger.csv");
  std::string lb = slurp(tmp / "b" / "ledger.csv");
  CHECK(!la.empty());
  CHECK(la == lb);
  fs::remove_all(tmp);
}

TEST_CASE("rates_report aggregates csv files and fits slopes") {
  fs::path tmp = fs::temp_directory_path() / "savflow_rates_test";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  // A clean second-order error law split across two files.
  std::ofstream(tmp / "r1.csv") << "dt,error\n1e-2,4e-4\n5e-3,1e-4\n";
  std::ofstream(tmp / "r2.csv") << "dt,error\n2.5e-3,2.5e-5\n";
  std::string table = rates_report((tmp / "*.csv").string());
  CHECK(table.find("dt,error,slope") == 0);
  auto pos = table.find("# fitted slope: ");
  REQUIRE(pos != std::string::npos);
  double fitted = std::stod(table.substr(pos + 16));
  CHECK(fitted == doctest::Approx(2.0).epsilon(1e-6));
  CHECK_THROWS(rates_report((tmp / "missing*.csv").string()));
  fs::remove_all(tmp);
}

TEST_CASE("format_double round-trips doubles exactly") {
  for (double v : {0.1, 1.0 / 3.0, 1e-17, 123456.789, -2.5e300}) {
    std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
}
