#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cofactor_lab/chain.hpp"
#include "cofactor_lab/dynamics.hpp"
#include "cofactor_lab/numerics.hpp"
#include "cofactor_lab/report.hpp"
#include "cofactor_lab/separation.hpp"
#include "cofactor_lab/spec_io.hpp"

namespace {

using namespace coflab;

struct CliArgs {
  std::string spec_path;
  std::string out_path;
  RunOptions opts;
  std::string probe_grid;
};

void add_common(CLI::App* cmd, CliArgs& args) {
  cmd->add_option("spec", args.spec_path, "system spec JSON file")->required();
  cmd->add_option("--out", args.out_path, "write the report JSON here (stdout otherwise)");
  cmd->add_option("--seed", [&args](const std::vector<std::string>& v) {
        char* end = nullptr;
        const unsigned long long s = std::strtoull(v.at(0).c_str(), &end, 10);
        if (end == v.at(0).c_str() || *end != '\0') return false;
        args.opts.seed = s;
        return true;
      }, "override the spec seed");
  cmd->add_option("--points", [&args](const std::vector<std::string>& v) {
        char* end = nullptr;
        const long p = std::strtol(v.at(0).c_str(), &end, 10);
        if (end == v.at(0).c_str() || *end != '\0' || p < 1) return false;
        args.opts.points = static_cast<int>(p);
        return true;
      }, "number of sample points (>= 1)");
}

std::string csv_path_for(const CliArgs& args, const std::string& fallback) {
  if (args.out_path.empty()) return fallback;
  std::string p = args.out_path;
  const auto dot = p.find_last_of('.');
  if (dot != std::string::npos) p.resize(dot);
  return p + ".csv";
}

void emit(RunResult& result, const CliArgs& args, const std::string& csv_default) {
  if (!csv_default.empty()) {
    const std::string cp = csv_path_for(args, csv_default);
    std::ofstream out(cp, std::ios::binary);
    out << result.csv;
    result.report["csv"] = cp;
  }
  const std::string text = result.report.dump(2) + "\n";
  if (args.out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(args.out_path, std::ios::binary);
    out << text;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cofactor-lab: verification, integration and separation of driven cofactor systems"};
  app.require_subcommand(1);

  CliArgs args;
  double dt = 0.0, rtol = 0.0, t_end = -1.0;

  CLI::App* verify = app.add_subcommand("verify", "structure, Killing-tensor and chain checks");
  add_common(verify, args);

  CLI::App* integrate = app.add_subcommand("integrate", "integrate and monitor the integrals");
  add_common(integrate, args);
  integrate->add_option("--dt", dt, "fixed RK4 step");
  integrate->add_option("--rtol", rtol, "embedded RK45 relative tolerance");
  integrate->add_option("--t-end", t_end, "integration horizon");

  CLI::App* separate = app.add_subcommand("separate", "canonical-transformation pipeline");
  add_common(separate, args);
  separate->add_option("--dt", dt, "fixed RK4 step");
  separate->add_option("--rtol", rtol, "embedded RK45 relative tolerance");
  separate->add_option("--t-end", t_end, "integration horizon");
  separate->add_option("--probe-grid", args.probe_grid, "certificate probe grid, e.g. 5x5");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInputError;
  }

  if (dt > 0.0) args.opts.dt = dt;
  if (rtol > 0.0) args.opts.rtol = rtol;
  if (t_end >= 0.0) args.opts.t_end = t_end;
  if (!args.probe_grid.empty()) {
    const auto x = args.probe_grid.find('x');
    if (x == std::string::npos) {
      std::cerr << "error: --probe-grid expects RxC, e.g. 5x5\n";
      return kExitInputError;
    }
    try {
      args.opts.probe_rows = std::stoi(args.probe_grid.substr(0, x));
      args.opts.probe_cols = std::stoi(args.probe_grid.substr(x + 1));
    } catch (const std::exception&) {
      std::cerr << "error: --probe-grid expects RxC, e.g. 5x5\n";
      return kExitInputError;
    }
    if (args.opts.probe_rows < 1 || args.opts.probe_cols < 1) {
      std::cerr << "error: probe grid must be positive\n";
      return kExitInputError;
    }
    args.opts.probe_grid_label = args.probe_grid;
  }

  try {
    SystemSpec spec = load_spec_file(args.spec_path);
    RunResult result;
    if (verify->parsed()) {
      result = run_verify(spec, args.opts);
      emit(result, args, "");
    } else if (integrate->parsed()) {
      result = run_integrate(spec, args.opts);
      emit(result, args, "trajectory.csv");
    } else {
      result = run_separate(spec, args.opts);
      emit(result, args, "separation.csv");
    }
    return result.exit_code;
  } catch (const SpecError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return kExitNumericAbort;
  }
}
