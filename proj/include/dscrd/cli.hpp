#pragma once

#include "dscrd/covariance.hpp"
#include "dscrd/mc_oracle.hpp"
#include "dscrd/network.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dscrd::cli {

enum class Command { Validate, Rate, Sweep, Simulate, Compare };
enum class Format { Json, Csv };

// Exit statuses of `run`.
inline constexpr int kExitOk = 0;
inline constexpr int kExitModelError = 1;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitMonteCarlo = 3;

struct RunConfig {
  Command command = Command::Rate;
  std::string config_path;
  std::optional<std::string> output_path;  // stdout when absent
  Format format = Format::Json;
  std::uint64_t seed = 42;
  std::size_t sample_count = 1'000'000;
  std::vector<double> alpha_grid;          // sweep; 50 evenly spaced points in (0, 1] when empty
  std::optional<std::string> node;         // sweep target; the root-most node when absent
  std::optional<std::string> export_path;  // simulate: binary sample dump
  double loewner_tol = kPsdTol;
  double match_tol = mc::kPassSigma;  // Monte Carlo pass threshold in standard errors
};

std::optional<Command> parse_command(const std::string& name);

// Report renderers; all output is deterministic for identical inputs.
std::string validate_report(const NetworkSpec& net, Format fmt);
std::string rate_report(const NetworkReport& rep, Format fmt);
std::string compare_report(const NetworkReport& rep, Format fmt, double loewner_tol);
std::string sweep_report(const std::string& node, const std::vector<SweepRow>& rows, Format fmt);

struct SimulationOutcome {
  std::string report;
  double worst_sigma = 0.0;
  bool hard_failure = false;
};
SimulationOutcome simulate_report(const NetworkSpec& net, const NetworkReport& rep, const RunConfig& cfg);

// Executes one command. Diagnostics go to `err`; the report goes to the
// output path or `out`. Returns one of the kExit* codes.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace dscrd::cli
