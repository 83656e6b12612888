#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "magedge/magedge.h"

namespace {

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream buf;
  buf << in.rdbuf();
  out = buf.str();
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Magnetic perturbations of lattice operators and their spectral edges"};
  app.set_version_flag("--version", std::string(magedge_version()));
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int workers = 0;
  bool quiet = false;

  const char* commands[][2] = {
      {"flux", "Fluxes, phases and cocycle defects on triangles (flux.csv)"},
      {"butterfly", "Full spectra over a flux grid and the gap table (butterfly.csv, gaps.csv)"},
      {"sweep", "Spectral edges over an eps grid (sweep_<which>.csv)"},
      {"fit", "Power and power-log fits of the edge shift (fit.json)"},
      {"verify", "Regularity certificates for the edge shift (certificate_<which>.json)"},
      {"harness", "Mollifier regularization checks (harness.json)"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory")->required();
    sub->add_option("--seed", seed, "Eigensolver seed (overrides the config)");
    sub->add_option("--workers", workers, "Worker threads, 0 = available parallelism")->check(CLI::NonNegativeNumber);
    sub->add_flag("--quiet", quiet, "Suppress progress output");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  std::string config;
  if (!read_file(config_path, config)) {
    std::cerr << "magedge: cannot read config '" << config_path << "'\n";
    return 1;
  }

  auto* sub = app.get_subcommands().front();
  magedge_run_options options{};
  options.has_seed = sub->count("--seed") > 0;
  options.seed = seed;
  options.has_workers = sub->count("--workers") > 0;
  options.workers = workers;
  options.quiet = quiet ? 1 : 0;

  int exit_code = 1;
  const magedge_status status = magedge_run(command.c_str(), config.c_str(), out_dir.c_str(), &options, &exit_code);
  if (status != MAGEDGE_OK) {
    std::cerr << "magedge: " << magedge_status_string(status) << ": " << magedge_last_error() << '\n';
    return 1;
  }
  return exit_code;
}
