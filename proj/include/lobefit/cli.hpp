#pragma once

// Command-line front end: sld, synth, fit, sweep and mc subcommands driven by
// a RunConfig file plus a few overriding flags.

#include "lobefit/error.hpp"
#include "lobefit/inverse.hpp"
#include "lobefit/io.hpp"
#include "lobefit/sensitivity.hpp"
#include "lobefit/zoa.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace lobefit {

struct CliFlags {
  std::string config;
  std::string records;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> paths;
  std::optional<double> neighborhood;
  std::optional<int> grid;
  std::optional<int> max_iters;
  std::optional<double> alpha;
  bool axisymmetric = false;
  std::string format = "table";
};

namespace cli_detail {

inline RunConfig resolve(const CliFlags& f) {
  RunConfig r = load_config(f.config);
  if (f.seed) {
    r.seed = *f.seed;
    r.mc.seed = *f.seed;
  }
  if (f.paths) r.mc.paths = *f.paths;
  if (f.neighborhood) r.mc.neighborhood = *f.neighborhood;
  if (f.grid) r.speed_count = *f.grid;
  if (f.max_iters) r.fit.max_iterations = *f.max_iters;
  if (f.alpha) r.fit.alpha = *f.alpha;
  if (f.axisymmetric) r.axisymmetric = true;
  if (!f.records.empty()) r.records = f.records;
  if (!f.out.empty()) r.out = f.out;
  if (r.speed_count < 2) throw InvalidArgument("--grid must be at least 2");
  r.mc.validate();
  return r;
}

inline std::string out_path(const RunConfig& r, const std::string& fallback) { return r.out.empty() ? fallback : r.out; }

inline TieSpec ties(const RunConfig& r, const DirectionalDynamics& d) {
  return r.axisymmetric ? TieSpec::axisymmetric(d) : TieSpec{};
}

inline int run_sld(const CliFlags& f, std::ostream& out) {
  const RunConfig r = resolve(f);
  const CurveFormat format = parse_curve_format(f.format);
  const SldCurve curve = build_sld(r.dynamics, r.cutting, r.sld());
  std::optional<BoundarySamples> overlay;
  if (!r.records.empty()) overlay = load_records(r.records);
  const std::string path = out_path(r, format == CurveFormat::table ? "sld.csv" : "sld.svg");
  export_curve(curve, format, path, overlay ? &*overlay : nullptr);
  out << "wrote " << path << " (" << curve.envelope().size() << " covered speeds)\n";
  return 0;
}

inline int run_synth(const CliFlags& f, std::ostream& out) {
  const RunConfig r = resolve(f);
  const BoundarySamples s = boundary_at_speeds(r.dynamics, r.cutting, r.speeds(), r.sld());
  const std::string path = out_path(r, "records.csv");
  write_records(s, path);
  out << "wrote " << path << " (" << s.size() << " records)\n";
  return 0;
}

inline int run_fit(const CliFlags& f, std::ostream& out) {
  RunConfig r = resolve(f);
  if (r.records.empty()) throw InvalidArgument("fit needs a records file (--records or 'records' in the config)");
  const BoundarySamples reference = load_records(r.records);
  const DirectionalDynamics center = r.guess ? *r.guess : r.dynamics;
  const ParameterVector start = flatten(center, ties(r, center));
  if (r.guess_count > 1) r.fit.initial_guesses = perturbed_guesses(start, r.guess_spread, r.guess_count, r.seed);
  else r.fit.initial_guesses = {start};
  const FitReport report = fit(reference, r.cutting, r.fit);
  const std::string path = out_path(r, "fit_report.txt");
  write_text(format_fit_report(report), path);
  write_text(format_fit_history(report), path + ".history.csv");
  out << "objective " << report.objective << ", " << report.history.size() << " iterations, "
      << (report.converged ? "converged" : "not converged") << " (" << report.termination << ")\n";
  for (std::size_t i = 0; i < report.parameters.size(); ++i)
    out << "  " << report.parameters.name(i) << " = " << report.parameters[i] << '\n';
  out << "wrote " << path << '\n';
  return 0;
}

inline int run_sweep(const CliFlags& f, std::ostream& out) {
  const RunConfig r = resolve(f);
  const ParameterVector p = flatten(r.dynamics, ties(r, r.dynamics));
  const auto grid = default_sweep_grid(r.sweep_limit, r.sweep_step);
  const SweepReport report = sweep(p, r.cutting, grid, r.speeds(), r.sld(), r.threads);
  const std::string path = out_path(r, "sweep_report.txt");
  write_text(format_sweep_report(report), path);
  out << "wrote " << path << '\n';
  return 0;
}

inline int run_mc(const CliFlags& f, std::ostream& out) {
  const RunConfig r = resolve(f);
  const ParameterVector p = flatten(r.dynamics, ties(r, r.dynamics));
  const McReport report = mc_sensitivity(p, r.cutting, r.mc, r.speeds(), r.sld());
  const std::string path = out_path(r, "mc_report.txt");
  write_text(format_mc_report(report), path);
  out << "wrote " << path << " (" << report.used_paths << " of " << report.paths << " paths used)\n";
  return 0;
}

} // namespace cli_detail

/// Runs the tool. Returns 0 on success, 1 on a computation or input error and
/// 2 on a usage error.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"lobefit: stability lobes and modal parameter identification from chatter boundaries"};
  app.require_subcommand(1);
  CliFlags flags;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "run configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out, "output path");
    sub->add_option("--grid", flags.grid, "number of sampled spindle speeds");
    sub->add_flag("--axisymmetric", flags.axisymmetric, "tie each x mode to the matching y mode");
    sub->add_option("--seed", flags.seed, "random seed");
  };

  auto* sld = app.add_subcommand("sld", "build a stability boundary and export it");
  add_common(sld);
  sld->add_option("--records", flags.records, "reference records drawn over the boundary");
  sld->add_option("--format", flags.format, "table or svg-like")->check(CLI::IsMember({"table", "svg-like", "svg"}));

  auto* synth = app.add_subcommand("synth", "write a synthetic records table from the configured modes");
  add_common(synth);

  auto* fit_cmd = app.add_subcommand("fit", "identify modal parameters from a records table");
  add_common(fit_cmd);
  fit_cmd->add_option("--records", flags.records, "measured or synthetic boundary records");
  fit_cmd->add_option("--max-iters", flags.max_iters, "iteration budget")->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--alpha", flags.alpha, "step pace in (0, 1]");

  auto* sweep_cmd = app.add_subcommand("sweep", "one-at-a-time sensitivity sweep");
  add_common(sweep_cmd);

  auto* mc = app.add_subcommand("mc", "Monte Carlo sensitivity");
  add_common(mc);
  mc->add_option("--paths", flags.paths, "number of paths")->check(CLI::PositiveNumber);
  mc->add_option("--neighborhood", flags.neighborhood, "neighbourhood width t");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*sld) return cli_detail::run_sld(flags, out);
    if (*synth) return cli_detail::run_synth(flags, out);
    if (*fit_cmd) return cli_detail::run_fit(flags, out);
    if (*sweep_cmd) return cli_detail::run_sweep(flags, out);
    if (*mc) return cli_detail::run_mc(flags, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

} // namespace lobefit
