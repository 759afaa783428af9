#pragma once

// Command-line parsing and the file-writing experiment runner.
//
// Precedence: command-line flags, then the config file (--config, flat
// TOML/INI "key = value" lines using the long flag names), then KDBM_*
// environment variables, then the built-in defaults.

#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <CLI11.hpp>

#include "kdbm/acceptance.hpp"
#include "kdbm/errors.hpp"
#include "kdbm/experiment.hpp"
#include "kdbm/io.hpp"

namespace kdbm {

/// Bad flags, config keys or combinations of values.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitUsage = 2, kExitNumeric = 3, kExitIo = 4 };

/// The parse result; `help` holds the usage text when --help was given.
struct ParsedCommandLine {
  ExperimentSpec spec;
  std::optional<std::string> help;
};

inline ParsedCommandLine parse_config(const std::vector<std::string>& args) {
  CLI::App app{"Kinetic Brownian motion on Hermitian matrices: simulation and checks", "kdbm"};
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_config("--config", "", "Config file with key = value lines (long flag names as keys)");
  app.get_formatter()->column_width(30);

  ExperimentSpec spec;
  std::string command = "simulate", scheme = "ito_euler_project", out = ".";
  std::vector<std::string> commands(kCommandNames.begin(), kCommandNames.end());

  app.add_option("--command", command, "Experiment to run")->check(CLI::IsMember(commands))->envname("KDBM_COMMAND")
      ->capture_default_str();
  app.add_option("--d", spec.sim.d, "Matrix dimension (2..8)")->check(CLI::Range(kMinDimension, kMaxDimension))
      ->envname("KDBM_D")->capture_default_str();
  app.add_option("--dt", spec.sim.dt, "Time step")->check(CLI::PositiveNumber)->envname("KDBM_DT")
      ->capture_default_str();
  app.add_option("--t-max", spec.sim.t_max, "Horizon (the short horizon h for markov-test)")
      ->check(CLI::NonNegativeNumber)->envname("KDBM_T_MAX")->capture_default_str();
  app.add_option("--paths", spec.paths, "Number of paths (per ensemble)")->check(CLI::PositiveNumber)
      ->envname("KDBM_PATHS")->capture_default_str();
  app.add_option("--seed", spec.seed, "Master seed")->envname("KDBM_SEED")->capture_default_str();
  app.add_option("--scheme", scheme, "Kinetic integrator")
      ->check(CLI::IsMember({"ito_euler_project", "stratonovich_heun"}))->envname("KDBM_SCHEME")
      ->capture_default_str();
  auto* gap_floor = app.add_option("--gap-floor", spec.sim.gap_floor,
                                   "Eigenvalue gap floor; negative means 1e-3 times the initial gap")
                        ->envname("KDBM_GAP_FLOOR")->capture_default_str();
  app.add_option("--record-stride", spec.sim.record_stride, "Record every n-th step")->check(CLI::PositiveNumber)
      ->envname("KDBM_RECORD_STRIDE")->capture_default_str();
  auto* scale = app.add_option("--scale-L", spec.scale_L, "Diffusive scale L (homogenize)")
                    ->check(CLI::PositiveNumber)->envname("KDBM_SCALE_L")->capture_default_str();
  app.add_option("--out", out, "Output directory")->envname("KDBM_OUT")->capture_default_str();
  app.add_option("--threads", spec.threads, "Worker threads (default: hardware concurrency)")
      ->check(CLI::PositiveNumber)->envname("KDBM_THREADS");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    return {spec, app.help()};
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  try {
    spec.command = parse_command(command);
    spec.sim.scheme = parse_scheme(scheme);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  spec.out_dir = out;
  if (scale->count() > 0 && spec.command != Command::homogenize)
    throw UsageError("--scale-L only applies to the homogenize command");
  if (gap_floor->count() > 0 && !uses_gap_floor(spec.command))
    throw UsageError("--gap-floor only applies to spectral, lambda-a and d2");
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return {spec, std::nullopt};
}

inline ParsedCommandLine parse_config(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return parse_config(args);
}

namespace detail {

inline ExperimentOutput run_validate(const ExperimentSpec& spec, std::ostream& log) {
  AcceptanceOptions opts;
  opts.threads = spec.threads;
  opts.seed = spec.seed;
  ExperimentOutput out;
  const auto results = run_acceptance(opts, {}, [&](const CriterionResult& r) { log << format_result(r) << std::flush; });
  out.paths_csv = paths_csv(spec, leading_columns(), [](std::size_t, CsvWriter&) {});
  SummaryTable t;
  for (const auto& r : results) {
    t.add("criterion_" + std::to_string(r.id), r.pass ? 1.0 : 0.0);
    std::string detail;
    for (const auto& d : r.details) detail += (detail.empty() ? "" : "; ") + d;
    out.checks.push_back({std::to_string(r.id) + ". " + r.title, r.pass, detail});
  }
  out.summary_csv = t.csv(describe(spec));
  return out;
}

}  // namespace detail

/// Runs the experiment and writes paths.csv, summary.csv and report.txt into
/// spec.out_dir. Returns the process exit status.
inline int run_experiment(const ExperimentSpec& spec, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  ExperimentOutput out;
  try {
    out = spec.command == Command::validate ? detail::run_validate(spec, log) : run_command(spec);
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  try {
    std::error_code ec;
    std::filesystem::create_directories(spec.out_dir, ec);
    if (ec) throw std::runtime_error("cannot create " + spec.out_dir.string() + ": " + ec.message());
    write_file(spec.out_dir / "paths.csv", out.paths_csv);
    write_file(spec.out_dir / "summary.csv", out.summary_csv);
    write_file(spec.out_dir / "report.txt", out.report());
  } catch (const std::exception& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  }
  if (spec.command != Command::validate) log << out.report();
  return out.all_pass() ? kExitOk : kExitCheckFailed;
}

}  // namespace kdbm
