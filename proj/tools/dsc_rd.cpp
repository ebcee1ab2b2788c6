// dsc-rd: rate-distortion evaluation for multi-hop Gaussian sensor trees.

#include "dscrd/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace dscrd::cli;

  CLI::App app{"Rate-distortion limits for multi-hop distributed coding of vector Gaussian sources"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string format = "json";
  std::string output, node, export_path;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", cfg.config_path, "Network configuration (JSON, schema 1)")->required();
    sub->add_option("--out", output, "Write the report here instead of stdout");
    sub->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--loewner-tol", cfg.loewner_tol, "Relative Loewner-order tolerance")->check(CLI::PositiveNumber);
  };

  auto* validate = app.add_subcommand("validate", "Load the configuration and print a model summary");
  common(validate);
  auto* rate = app.add_subcommand("rate", "Per-node rates and sum-rate");
  common(rate);
  auto* compare = app.add_subcommand("compare", "Rates alongside the no-side-information baseline");
  common(compare);
  auto* sweep = app.add_subcommand("sweep", "Rate of one node along the distortion family");
  common(sweep);
  sweep->add_option("--alphas", cfg.alpha_grid, "Comma-separated alpha grid in (0, 1]")->delimiter(',');
  sweep->add_option("--node", node, "Node to sweep (default: the node nearest the base station)");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo check of every closed form");
  common(simulate);
  simulate->add_option("--seed", cfg.seed, "Random seed");
  simulate->add_option("--samples", cfg.sample_count, "Samples per node")->check(CLI::Range(std::size_t{100}, std::size_t{1} << 40));
  simulate->add_option("--match-tol", cfg.match_tol, "Pass threshold in standard errors")->check(CLI::PositiveNumber);
  simulate->add_option("--export", export_path, "Binary sample dump for the node nearest the base station");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitModelError;
  }

  for (auto* sub : app.get_subcommands()) cfg.command = *parse_command(sub->get_name());
  cfg.format = format == "csv" ? Format::Csv : Format::Json;
  if (!output.empty()) cfg.output_path = output;
  if (!node.empty()) cfg.node = node;
  if (!export_path.empty()) cfg.export_path = export_path;
  return run(cfg, std::cout, std::cerr);
}
