#include <doctest.h>

#include "capflow/config.hpp"

using namespace capflow;

TEST_CASE("parses flat dotted key=value text") {
  Config cfg = Config::from_text(
      "# comment line\n"
      "grid.Nx = 128   # trailing comment\n"
      "grid.dt=0.01\n"
      "\n"
      "study.name = taylor\n");
  CHECK(cfg.integer("grid.Nx") == 128);
  CHECK(cfg.num("grid.dt") == doctest::Approx(0.01));
  CHECK(cfg.str("study.name") == "taylor");
  CHECK(cfg.has("grid.Nx"));
  CHECK(!cfg.has("grid.Ny"));
}

TEST_CASE("defaults and typed errors") {
  Config cfg = Config::from_text("a.b = 2.5\nc = xyz\n");
  CHECK(cfg.num("missing", 7.0) == 7.0);
  CHECK(cfg.integer("missing", 3) == 3);
  CHECK(cfg.str("missing", "d") == "d");
  CHECK_THROWS_AS(cfg.num("c"), ConfigError);
  CHECK_THROWS_AS(cfg.integer("a.b"), ConfigError);
  CHECK_THROWS_AS(cfg.str("missing"), ConfigError);
}

TEST_CASE("missing required fields are reported by name") {
  Config cfg = Config::from_text("study.name = smoke\n");
  try {
    cfg.require({"study.name", "grid.Nx", "grid.dt"});
    CHECK(false);
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("grid.Nx") != std::string::npos);
    CHECK(msg.find("grid.dt") != std::string::npos);
    CHECK(msg.find("study.name") == std::string::npos);
  }
}

TEST_CASE("malformed lines and duplicates are rejected") {
  CHECK_THROWS_AS(Config::from_text("just a line\n"), ConfigError);
  CHECK_THROWS_AS(Config::from_text("a=1\na=2\n"), ConfigError);
  CHECK_THROWS_AS(Config::from_text("=5\n"), ConfigError);
  CHECK_THROWS_AS(Config::from_file("/nonexistent/capflow.cfg"), ConfigError);
}
