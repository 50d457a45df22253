#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "capflow/config.hpp"
#include "capflow/studies.hpp"

using namespace capflow;

namespace {

Config baseConfig(const std::string& study) {
  Config cfg = Config::from_text(
      "grid.Nx = 16\n"
      "grid.Ny = 16\n"
      "grid.dt = 0.01\n"
      "grid.t0 = 0.05\n"
      "seed = 7\n");
  cfg.set("study.name", study);
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("validation rejects missing fields and unknown studies") {
  Config cfg = Config::from_text("study.name = smoke\ngrid.Ny = 8\n");
  try {
    validate_config(cfg);
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("grid.Nx") != std::string::npos);
  }
  Config bad = baseConfig("frobnicate");
  CHECK_THROWS_AS(validate_config(bad), ConfigError);
  Config badkind = baseConfig("taylor");
  badkind.set("control.kind", "sideways");
  CHECK_THROWS_AS(validate_config(badkind), ConfigError);
}

TEST_CASE("smoke study: all-zero data stays zero and passes") {
  StudyReport rep = run_study(baseConfig("smoke"));
  CHECK(rep.pass());
  CHECK(rep.metrics.at("state_norm").value == 0.0);
  CHECK(rep.csv_rows.size() == 6);  // levels 0..5
  for (const auto& row : rep.csv_rows) {
    CHECK(row[1] == 0.0);
    CHECK(row[2] == 0.0);
  }
}

TEST_CASE("taylor study at desk scale produces a quadratic slope") {
  Config cfg = baseConfig("taylor");
  cfg.set("study.seeds", "1");
  cfg.set("study.s_count", "4");
  StudyReport rep = run_study(cfg);
  REQUIRE(rep.metrics.count("slope_seed0") == 1);
  CHECK(rep.metrics.at("slope_seed0").pass);
  CHECK(rep.csv_rows.size() == 4);
}

TEST_CASE("mms temporal rate is approximately first order") {
  Config cfg = baseConfig("mms");
  cfg.set("study.mode", "temporal");
  cfg.set("grid.Nx", "8");
  cfg.set("grid.Ny", "12");
  cfg.set("grid.dt", "0.0125");
  cfg.set("grid.t0", "0.2");
  StudyReport rep = run_study(cfg);
  CHECK(rep.metrics.at("temporal_rate").pass);
  CHECK(rep.metrics.at("temporal_rate").value < 1.6);
  CHECK(rep.metrics.at("jump_residual").pass);
}

TEST_CASE("outputs are written and bit-reproducible for a fixed seed") {
  Config cfg = baseConfig("mollifier");
  cfg.set("grid.Nx", "128");
  cfg.set("study.eps_count", "2");
  StudyReport r1 = run_study(cfg);
  StudyReport r2 = run_study(cfg);
  REQUIRE(r1.csv_rows.size() == r2.csv_rows.size());
  for (size_t i = 0; i < r1.csv_rows.size(); ++i)
    for (size_t j = 0; j < r1.csv_rows[i].size(); ++j)
      CHECK(r1.csv_rows[i][j] == r2.csv_rows[i][j]);

  const auto dir = std::filesystem::temp_directory_path() / "capflow_test_out";
  std::filesystem::remove_all(dir);
  write_outputs(r1, cfg, dir.string());
  REQUIRE(std::filesystem::exists(dir / "mollifier.csv"));
  REQUIRE(std::filesystem::exists(dir / "mollifier.json"));
  const std::string csv1 = slurp(dir / "mollifier.csv");
  write_outputs(r2, cfg, dir.string());
  CHECK(csv1 == slurp(dir / "mollifier.csv"));
  const std::string js = slurp(dir / "mollifier.json");
  CHECK(js.find("\"config\"") != std::string::npos);
  CHECK(js.find("\"grid.Nx\"") != std::string::npos);
  CHECK(js.find("\"metrics\"") != std::string::npos);
  CHECK(js.find("runtime_seconds") != std::string::npos);
  std::filesystem::remove_all(dir);
}
