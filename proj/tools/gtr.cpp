// gtr: run tension-reduction measurement scenarios from JSON files.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "gtr/presets.hpp"
#include "gtr/runner.hpp"
#include "gtr/scenario.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_schema = 2;
constexpr int exit_runtime = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

gtr::Json parse_json(const std::string& text, const std::string& what) {
  try {
    return gtr::Json::parse(text);
  } catch (const gtr::Json::parse_error& e) {
    throw gtr::SchemaError("$", what + ": " + e.what());
  }
}

// Applies GTR_DEFAULT_SEED when the scenario has no seed of its own.
void apply_default_seed(gtr::Json& root) {
  if (root.contains("seed")) return;
  if (const char* env = std::getenv("GTR_DEFAULT_SEED")) {
    char* end = nullptr;
    const unsigned long long seed = std::strtoull(env, &end, 10);
    if (end && *end == '\0') {
      std::cerr << "warning: scenario omits 'seed'; using GTR_DEFAULT_SEED=" << seed << "\n";
      root["seed"] = static_cast<std::uint64_t>(seed);
    } else {
      std::cerr << "warning: ignoring malformed GTR_DEFAULT_SEED value '" << env << "'\n";
    }
  }
}

int run_scenario_json(gtr::Json root, const std::string& out_path, const std::string& format,
                      const gtr::RunOptions& opts, bool quiet = false) {
  apply_default_seed(root);
  const gtr::Scenario sc = gtr::scenario_from_json(root);
  gtr::ScenarioRunner runner(sc, opts);
  const gtr::Json results = runner.run();
  if (format == "csv")
    write_output(out_path, gtr::results_to_csv(results));
  else
    write_output(out_path, gtr::canonical_json_text(results));
  const auto& log = runner.expectations();
  if (!log.passed()) {
    for (const auto& f : log.failures) std::cerr << "expectation failed: " << f << "\n";
    return exit_runtime;
  }
  if (!quiet && log.checked > 0)
    std::cerr << log.checked << " expectation(s) checked, all passed\n";
  return exit_ok;
}

// Replaces every {"param": "<name>"} node with the given value.
gtr::Json substitute_param(const gtr::Json& node, const std::string& name, double value,
                           bool as_int) {
  if (node.is_object()) {
    if (node.size() == 1 && node.contains("param") && node["param"] == name)
      return as_int ? gtr::Json(static_cast<std::int64_t>(std::llround(value)))
                    : gtr::Json(value);
    gtr::Json out = gtr::Json::object();
    for (const auto& [k, v] : node.items()) out[k] = substitute_param(v, name, value, as_int);
    return out;
  }
  if (node.is_array()) {
    gtr::Json out = gtr::Json::array();
    for (const auto& v : node) out.push_back(substitute_param(v, name, value, as_int));
    return out;
  }
  return node;
}

void flatten_metrics(const gtr::Json& results, std::vector<std::pair<std::string, double>>& out) {
  for (const auto& r : results.at("results")) {
    const std::string id = r.value("id", "");
    for (const auto& [key, value] : r.items()) {
      if (key == "id" || key == "type" || key == "trace") continue;
      if (value.is_number()) {
        out.emplace_back(id + "." + key, value.get<double>());
      } else if (value.is_boolean()) {
        out.emplace_back(id + "." + key, value.get<bool>() ? 1.0 : 0.0);
      } else if (value.is_array()) {
        for (std::size_t i = 0; i < value.size(); ++i)
          if (value[i].is_number())
            out.emplace_back(id + "." + key + "[" + std::to_string(i) + "]",
                             value[i].get<double>());
      }
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"general tension-reduction measurement scenarios"};
  app.require_subcommand(1);

  std::string scenario_path, out_path, format = "json";
  gtr::RunOptions opts;

  auto* run = app.add_subcommand("run", "execute a scenario file");
  run->add_option("file", scenario_path, "scenario JSON file")->required();
  run->add_option("--out", out_path, "output path (default: stdout)");
  run->add_option("--format", format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  run->add_option("--workers", opts.workers, "parallel trial workers")
      ->check(CLI::Range(1, 256));
  run->add_flag("--trace", opts.trace, "record per-run state trajectories");

  std::string preset_name;
  auto* preset = app.add_subcommand("preset", "write a built-in scenario file");
  preset->add_option("name", preset_name, "preset name")
      ->required()
      ->check(CLI::IsMember(gtr::preset_names()));
  preset->add_option("--out", out_path, "output path (default: <name>.json)");

  std::string sweep_param, sweep_template;
  double sweep_from = 0.0, sweep_to = 1.0;
  int sweep_steps = 10;
  auto* sweep = app.add_subcommand("sweep", "run a template over a parameter grid");
  sweep->add_option("template", sweep_template, "scenario template with {\"param\": NAME} slots")
      ->required();
  sweep->add_option("--param", sweep_param, "parameter name (eps, theta, n, ...)")->required();
  sweep->add_option("--from", sweep_from, "first grid value")->required();
  sweep->add_option("--to", sweep_to, "last grid value")->required();
  sweep->add_option("--steps", sweep_steps, "number of grid points")->check(CLI::Range(1, 100000));
  sweep->add_option("--out", out_path, "output CSV path (default: stdout)");
  sweep->add_option("--workers", opts.workers, "parallel trial workers")
      ->check(CLI::Range(1, 256));

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const gtr::Json root = parse_json(read_file(scenario_path), "scenario parse error");
      return run_scenario_json(root, out_path, format, opts);
    }

    if (preset->parsed()) {
      const gtr::Json j = gtr::preset_scenario(preset_name);
      const std::string path = out_path.empty() ? preset_name + ".json" : out_path;
      write_output(path, gtr::canonical_json_text(j));
      if (path != "-") std::cerr << "wrote " << path << "\n";
      return exit_ok;
    }

    if (sweep->parsed()) {
      const gtr::Json tmpl = parse_json(read_file(sweep_template), "template parse error");
      const bool as_int = (sweep_param == "n") || (sweep_param == "cells");
      std::string csv;
      char buf[64];
      for (int step = 0; step < sweep_steps; ++step) {
        const double value =
            sweep_steps == 1
                ? sweep_from
                : sweep_from + (sweep_to - sweep_from) * step / (sweep_steps - 1.0);
        gtr::Json root = substitute_param(tmpl, sweep_param, value, as_int);
        apply_default_seed(root);
        const gtr::Scenario sc = gtr::scenario_from_json(root);
        gtr::ScenarioRunner runner(sc, opts);
        const gtr::Json results = runner.run();
        std::vector<std::pair<std::string, double>> metrics;
        flatten_metrics(results, metrics);
        if (step == 0) {
          csv = "schema," + sweep_param;
          for (const auto& [k, v] : metrics) csv += "," + k;
          csv += "\n";
        }
        std::snprintf(buf, sizeof buf, "%.17g", value);
        csv += "gtr-sweep-1,";
        csv += buf;
        for (const auto& [k, v] : metrics) {
          std::snprintf(buf, sizeof buf, "%.17g", v);
          csv += std::string(",") + buf;
        }
        csv += "\n";
        if (!runner.expectations().passed()) {
          for (const auto& f : runner.expectations().failures)
            std::cerr << "expectation failed at " << sweep_param << "=" << value << ": " << f
                      << "\n";
          write_output(out_path, csv);
          return exit_runtime;
        }
      }
      write_output(out_path, csv);
      return exit_ok;
    }
  } catch (const gtr::SchemaError& e) {
    std::cerr << "schema error at " << e.path() << ": " << e.what() << "\n";
    return exit_schema;
  } catch (const gtr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_runtime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_runtime;
  }
  return exit_ok;
}
