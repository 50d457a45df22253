#pragma once

#include <map>
#include <string>
#include <vector>

#include "capflow/config.hpp"

namespace capflow {

/// One named check of a study: the measured value, the bound it is held
/// against, and the verdict. The comparison direction is baked into `pass`
/// (slopes are checked against bands, errors against upper bounds).
struct MetricEntry {
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct StudyReport {
  std::string study;
  std::map<std::string, MetricEntry> metrics;
  std::vector<std::string> csv_columns;
  std::vector<std::vector<double>> csv_rows;
  double runtime_seconds = 0.0;

  bool pass() const;
};

/// Solver-level failure during a study (distinct exit code from config
/// errors at the CLI).
struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> study_names();

/// Checks study.name and the study-specific required fields; throws
/// ConfigError naming the offending field.
void validate_config(const Config& cfg);

StudyReport run_study(const Config& cfg);

/// Writes <study>.csv and <study>.json under outdir (created if absent);
/// the JSON report echoes the resolved configuration.
void write_outputs(const StudyReport& rep, const Config& cfg,
                   const std::string& outdir);

/// Concurrency cap: CAPFLOW_THREADS when set, hardware concurrency otherwise.
int thread_cap();

}  // namespace capflow
