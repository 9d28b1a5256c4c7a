#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "divemeta/cli.hpp"

int main(int argc, char** argv) {
  using namespace divemeta;

  CLI::App app{"Meta-analysis of two-group median differences"};
  app.require_subcommand(1);

  RunConfig pool_cfg;
  std::string input;
  auto* pool = app.add_subcommand("pool", "Pool study-level median differences from a CSV table");
  pool->add_option("--input", input, "Study table (CSV)")->required()->check(CLI::ExistingFile);
  pool->add_option("--method", pool_cfg.method, "Estimator")
      ->required()
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, PoolMethod>{{"dive", PoolMethod::Dive}, {"qe-re", PoolMethod::QeRe},
                                            {"qe-fe", PoolMethod::QeFe}},
          CLI::ignore_case));
  pool->add_option("--alpha", pool_cfg.alpha, "Two-sided level, default 0.05")->check(CLI::Range(0.0, 1.0));
  pool->add_option("--ci", pool_cfg.ci, "Interval flavor")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, CiSelection>{{"z", CiSelection::Z}, {"t", CiSelection::T}, {"both", CiSelection::Both}},
          CLI::ignore_case));
  pool->add_option("--format", pool_cfg.output, "Output format")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, OutputFormat>{
              {"text", OutputFormat::Text}, {"csv", OutputFormat::Csv}, {"json", OutputFormat::Json}},
          CLI::ignore_case));

  std::string config;
  std::string out_dir;
  int workers = 1;
  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo scenario file");
  simulate->add_option("--config", config, "Scenario file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", out_dir, "Output directory")->required();
  simulate->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  if (*pool) return cmd_pool(input, pool_cfg, std::cout, std::cerr);
  return cmd_simulate(config, out_dir, workers, std::cout, std::cerr);
}
