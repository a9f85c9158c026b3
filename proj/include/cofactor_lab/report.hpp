#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "cofactor_lab/system_spec.hpp"

namespace coflab {

using OrderedJson = nlohmann::ordered_json;

/// Exit codes shared by the CLI and the report runners.
enum ExitCode : int {
  kExitPass = 0,
  kExitCheckFailure = 1,
  kExitInputError = 2,
  kExitNumericAbort = 3,
};

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> points;
  std::optional<double> dt;
  std::optional<double> rtol;
  std::optional<double> t_end;
  int probe_rows = 5;
  int probe_cols = 5;
  std::string probe_grid_label = "5x5";
};

struct RunResult {
  OrderedJson report;
  std::string csv;  // empty when the command produces none
  int exit_code = kExitPass;
};

/// Structure + scKt + chain identity verification (the `verify` command).
RunResult run_verify(const SystemSpec& spec, const RunOptions& opts);

/// Trajectory integration with per-integral drift monitoring (`integrate`).
RunResult run_integrate(const SystemSpec& spec, const RunOptions& opts);

/// The canonical-transformation pipeline with certificates (`separate`).
/// Produces the (u, s) trajectory CSV.
RunResult run_separate(const SystemSpec& spec, const RunOptions& opts);

/// {value, tolerance, pass} entry used throughout the reports.
OrderedJson check_entry(double value, double tolerance, bool pass);
OrderedJson check_entry_le(double value, double tolerance);

std::string format_csv_value(double v);

}  // namespace coflab
