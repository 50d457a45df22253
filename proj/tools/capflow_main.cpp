#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "capflow/config.hpp"
#include "capflow/studies.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;
constexpr int kExitAcceptance = 4;

int cmdValidate(const std::string& path) {
  try {
    capflow::Config cfg = capflow::Config::from_file(path);
    capflow::validate_config(cfg);
  } catch (const capflow::ConfigError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  }
  std::printf("ok\n");
  return kExitOk;
}

int cmdRun(const std::string& path, const std::string& outdir) {
  capflow::Config cfg;
  try {
    cfg = capflow::Config::from_file(path);
    capflow::validate_config(cfg);
  } catch (const capflow::ConfigError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  }
  capflow::StudyReport rep;
  try {
    rep = capflow::run_study(cfg);
  } catch (const capflow::ConfigError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return kExitSolver;
  }
  capflow::write_outputs(rep, cfg, outdir);
  for (const auto& [name, m] : rep.metrics)
    std::printf("%s: %s  value=%.6g  bound=%.6g\n", name.c_str(),
                m.pass ? "pass" : "FAIL", m.value, m.tolerance);
  std::printf("study %s: %s (%.1f s), outputs in %s\n", rep.study.c_str(),
              rep.pass() ? "pass" : "FAIL", rep.runtime_seconds,
              outdir.c_str());
  return rep.pass() ? kExitOk : kExitAcceptance;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"capflow: two-phase flow sensitivity verification studies"};
  app.require_subcommand(1);

  std::string config_path, outdir = ".";
  auto* run = app.add_subcommand("run", "run the study named in a config");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("-o,--output", outdir, "output directory (default .)");

  std::string validate_path;
  auto* val = app.add_subcommand("validate", "check a config without running");
  val->add_option("config", validate_path, "config file")->required();

  auto* ls = app.add_subcommand("list-studies", "print available study names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  if (run->parsed()) return cmdRun(config_path, outdir);
  if (val->parsed()) return cmdValidate(validate_path);
  if (ls->parsed()) {
    for (const auto& n : capflow::study_names()) std::printf("%s\n", n.c_str());
    return kExitOk;
  }
  return kExitValidation;
}
