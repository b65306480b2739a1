#pragma once

/// \file cli.hpp
/// \brief `idiff_bench` command line: one subcommand per experiment.
///
/// Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.
/// With --out, attached tables and per-phase wall times are written next to
/// the main CSV as <stem>.<name>.csv; without it the main CSV goes to stdout.

#include <charconv>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "idiff/bench/config.hpp"
#include "idiff/bench/csv.hpp"
#include "idiff/bench/experiments.hpp"

namespace idiff::bench {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumerical = 2;

/// Parses "m,p,k" or "m,p" (k keeps its default).
inline Dims parse_dims(const std::string& text, Dims defaults) {
  std::vector<std::size_t> values;
  std::string_view rest = text;
  while (true) {
    const std::size_t comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    std::size_t v = 0;
    const auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || end != item.data() + item.size()) {
      throw ConfigError("--dims: expected comma-separated integers m,p,k, got '" + text + "'");
    }
    values.push_back(v);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  if (values.size() < 2 || values.size() > 3) throw ConfigError("--dims: expected m,p,k, got '" + text + "'");
  Dims d{values[0], values[1], values.size() == 3 ? values[2] : defaults.k};
  return d;
}

inline std::string sidecar_path(const std::string& out_path, const std::string& name) {
  const std::filesystem::path p(out_path);
  return (p.parent_path() / (p.stem().string() + "." + name + ".csv")).string();
}

namespace detail {

struct CliOptions {
  std::uint64_t seed = 0;
  std::string out;
  std::string dims;
  std::size_t inner_iters = 0;
  std::size_t outer_iters = 0;
  std::string solver;
  std::string condition;
  std::string json_meta;
};

inline void add_common_options(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--seed", o.seed, "64-bit seed of every random stream");
  cmd->add_option("--out", o.out, "CSV output path (default: stdout)");
  cmd->add_option("--dims", o.dims, "m,p,k (samples, features or d, classes)");
  cmd->add_option("--inner-iters", o.inner_iters, "inner solver iterations");
  cmd->add_option("--outer-iters", o.outer_iters, "outer iterations (lasso: grid points)");
  cmd->add_option("--solver", o.solver, "inner solver")->check(CLI::IsMember({"gd", "pg", "md", "bcd"}));
  cmd->add_option("--condition", o.condition, "optimality condition")
      ->check(CLI::IsMember({"stationary", "kkt", "pg-fp", "proj-fp", "md-fp"}));
  cmd->add_option("--json-meta", o.json_meta, "write run metadata as JSON to this path");
}

inline ExperimentConfig build_config(Experiment e, const CLI::App& cmd, const CliOptions& o) {
  ExperimentConfig cfg = ExperimentConfig::defaults(e);
  cfg.seed = o.seed;
  cfg.out_path = o.out;
  if (cmd.count("--dims") > 0) cfg.dims = parse_dims(o.dims, cfg.dims);
  if (cmd.count("--inner-iters") > 0) cfg.inner_iters = o.inner_iters;
  if (cmd.count("--outer-iters") > 0) cfg.outer_iters = o.outer_iters;
  if (cmd.count("--solver") > 0) cfg.solver = o.solver;
  if (cmd.count("--condition") > 0) cfg.condition = o.condition;
  cfg.validate();
  return cfg;
}

/// Opens (and truncates) a path up front so an unwritable location is a
/// configuration error rather than a failure after the run.
inline void check_writable(const std::string& path) {
  std::ofstream probe(path, std::ios::binary | std::ios::trunc);
  if (!probe) throw ConfigError("cannot open '" + path + "' for writing");
}

inline nlohmann::json run_metadata(const ExperimentConfig& cfg, const ExperimentOutput& res,
                                   const std::vector<std::string>& files) {
  nlohmann::json j;
  j["experiment"] = experiment_name(cfg.experiment);
  j["seed"] = cfg.seed;
  j["dims"] = {{"m", cfg.dims.m}, {"p", cfg.dims.p}, {"k", cfg.dims.k}};
  j["inner_iters"] = cfg.inner_iters;
  j["outer_iters"] = cfg.outer_iters;
  j["solver"] = cfg.solver;
  j["condition"] = cfg.condition;
  j["rows"] = res.table.size();
  j["columns"] = res.table.header();
  j["versions"] = {{"idiff", kVersion},
                   {"compiler", __VERSION__},
                   {"cplusplus", static_cast<long>(__cplusplus)},
                   {"cli11", CLI11_VERSION},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  nlohmann::json meta = nlohmann::json::object();
  for (const auto& [key, value] : res.metadata) meta[key] = value;
  j["metadata"] = meta;
  nlohmann::json times = nlohmann::json::object();
  for (const auto& [phase, seconds] : res.timings.entries()) times[phase] = seconds;
  j["wall_time_seconds"] = times;
  j["outputs"] = files;
  return j;
}

inline void write_outputs(const ExperimentConfig& cfg, const ExperimentOutput& res, const std::string& json_meta,
                          std::ostream& out) {
  std::vector<std::string> files;
  if (cfg.out_path.empty()) {
    res.table.write(out);
  } else {
    res.table.save(cfg.out_path);
    files.push_back(cfg.out_path);
    for (const auto& [name, table] : res.attachments) {
      const std::string path = sidecar_path(cfg.out_path, name);
      table.save(path);
      files.push_back(path);
    }
    std::vector<std::string> phases;
    std::vector<double> seconds;
    for (const auto& [phase, s] : res.timings.entries()) {
      phases.push_back(phase);
      seconds.push_back(s);
    }
    if (!phases.empty()) {
      CsvTable timing(phases);
      timing.add_row(seconds);
      const std::string path = sidecar_path(cfg.out_path, "timing");
      timing.save(path);
      files.push_back(path);
    }
  }
  if (!json_meta.empty()) {
    std::ofstream js(json_meta, std::ios::binary);
    if (!js) throw Error("cannot open '" + json_meta + "' for writing");
    js << run_metadata(cfg, res, files).dump(2) << '\n';
  }
}

}  // namespace detail

/// Entry point of the benchmark CLI; never throws.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app("Implicit differentiation benchmarks: writes one CSV per run.", "idiff_bench");
  app.require_subcommand(1, 1);
  detail::CliOptions opts;
  struct Entry {
    Experiment experiment;
    CLI::App* cmd;
  };
  const std::vector<std::pair<Experiment, const char*>> commands = {
      {Experiment::RidgePrecision, "Jacobian error along gradient descent on ridge regression vs the error bound"},
      {Experiment::SvmHpo, "hyperparameter search for a multiclass SVM with finite-difference checks"},
      {Experiment::Distill, "dataset distillation into one prototype per class"},
      {Experiment::Lasso, "derivative of the lasso solution path vs finite differences"},
  };
  std::vector<Entry> entries;
  for (const auto& [e, about] : commands) {
    CLI::App* cmd = app.add_subcommand(experiment_name(e), about);
    detail::add_common_options(cmd, opts);
    entries.push_back({e, cmd});
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  ExperimentConfig cfg;
  try {
    for (const Entry& entry : entries)
      if (entry.cmd->parsed()) cfg = detail::build_config(entry.experiment, *entry.cmd, opts);
    if (!cfg.out_path.empty()) detail::check_writable(cfg.out_path);
    if (!opts.json_meta.empty()) detail::check_writable(opts.json_meta);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  try {
    const ExperimentOutput res = run_experiment(cfg);
    detail::write_outputs(cfg, res, opts.json_meta, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace idiff::bench
