// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nframes/nframes.h"

int main(int argc, char** argv) {
  std::vector<std::string> names;
  for (int i = 0; i < nf_command_count(); ++i) names.emplace_back(nf_command_name(i));

  CLI::App app{"Normal frames and normal coordinates for linear connections on fibre bundles", "nframes"};
  app.set_version_flag("--version", nf_version());
  std::string command, config, format = "text", report_path;
  double tol = 0.0, step = 0.0;
  int grid = 0;
  std::uint64_t seed = 0;
  bool timing = false;
  app.add_option("command", command, "Command to run")->required()->check(CLI::IsMember(names));
  app.add_option("--config", config, "JSON config file")->required();
  auto* tol_opt = app.add_option("--tol", tol, "Primary tolerance of the command")->check(CLI::PositiveNumber);
  app.add_option("--grid", grid, "Grid nodes per axis")->check(CLI::Range(2, 1000000));
  app.add_option("--step", step, "ODE and quadrature step")->check(CLI::PositiveNumber);
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "machine"}));
  auto* seed_opt = app.add_option("--seed", seed, "Seed for random sampling");
  app.add_flag("--timing", timing, "Report wall-clock time");
  app.add_option("--report", report_path, "Also write the machine report to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return NF_INPUT_ERROR;
  }

  nf_options options;
  nf_options_init(&options);
  options.config_path = config.c_str();
  options.has_tol = tol_opt->count() > 0;
  options.tol = tol;
  options.grid = grid;
  options.step = step;
  options.has_seed = seed_opt->count() > 0;
  options.seed = seed;
  options.timing = timing;

  nf_report* report = nullptr;
  const int code = nf_run(command.c_str(), &options, &report);
  if (!report) {
    std::fprintf(stderr, "nframes: %s\n", nf_last_error());
    return code == NF_INTERNAL_ERROR ? NF_INPUT_ERROR : code;
  }
  std::fputs(format == "machine" ? nf_report_json(report) : nf_report_text(report), stdout);
  if (code == NF_INPUT_ERROR && format == "text") std::fprintf(stderr, "nframes: %s\n", nf_last_error());
  if (!report_path.empty()) {
    std::ofstream out(report_path, std::ios::binary);
    out << nf_report_json(report);
    if (!out) {
      std::fprintf(stderr, "nframes: cannot write report to %s\n", report_path.c_str());
      nf_report_destroy(report);
      return NF_INPUT_ERROR;
    }
  }
  nf_report_destroy(report);
  return code;
}
