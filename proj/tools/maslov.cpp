// Scenario runner: wires the header-only library into reproducible
// command-line experiments with JSON/CSV/SVG reports.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include <maslov/scenarios.hpp>

namespace fs = std::filesystem;
using namespace maslov;

namespace {

int write_outputs(const ScenarioResult& result, const ScenarioConfig& cfg) {
  fs::path out = cfg.out_dir;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {
    std::cerr << "error: cannot create output directory " << out << ": " << ec.message() << "\n";
    return 2;
  }
  const std::set<std::string> fmts(cfg.formats.begin(), cfg.formats.end());
  if (fmts.count("json")) {
    std::ofstream f(out / (cfg.name + "-report.json"));
    f << result.report.dump(2) << "\n";
  }
  if (fmts.count("csv"))
    for (const auto& [stem, content] : result.csv) std::ofstream(out / (stem + ".csv")) << content;
  if (fmts.count("svg"))
    for (const auto& [stem, content] : result.svg) std::ofstream(out / (stem + ".svg")) << content;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"maslov: numerical experiments on Lagrangian submanifolds of model Kahler "
               "manifolds"};
  app.require_subcommand(1);

  // run ---------------------------------------------------------------------
  auto* run = app.add_subcommand("run", "run a scenario and emit report files");
  std::string scenario, config_file, out_dir, format = "json";
  int n = 0, n1 = 0, n2 = 0, steps = 0, basis_degree = 0, threads = 1;
  double theta = -1.0, eps = -1.0, amplitude = -1.0, deformation = -1.0;
  long seed = -1;
  std::string ladder_str, sub_scenario;
  run->add_option("SCENARIO", scenario, "scenario name (see `maslov list`)")->required();
  run->add_option("--config", config_file, "JSON config file; flags override its fields");
  run->add_option("--out", out_dir, "output directory (default: $MASLOV_OUT or ./out)");
  run->add_option("--threads", threads, "worker count pin (runs are single-threaded)");
  run->add_option("--format", format, "comma-separated subset of json,csv,svg");
  run->add_option("--n", n, "loop resolution override");
  run->add_option("--n1", n1, "grid resolution override");
  run->add_option("--n2", n2, "grid resolution override");
  run->add_option("--ladder", ladder_str, "refinement ladder, e.g. 64,128,256,512");
  run->add_option("--theta", theta, "latitude polar angle");
  run->add_option("--eps", eps, "flow step size / descent context");
  run->add_option("--steps", steps, "flow step count");
  run->add_option("--basis-degree", basis_degree, "descent basis truncation degree");
  run->add_option("--seed", seed, "RNG seed");
  run->add_option("--amplitude", amplitude, "potential-kahler amplitude");
  run->add_option("--deformation", deformation, "football-sphere deformation");
  run->add_option("--scenario", sub_scenario, "sub-scenario for the convergence runner");

  // list --------------------------------------------------------------------
  auto* list = app.add_subcommand("list", "print the scenario catalog");
  bool list_json = false;
  list->add_flag("--json", list_json, "machine-readable catalog");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (list->parsed()) {
    if (list_json) {
      nlohmann::json j = nlohmann::json::array();
      for (const auto& [name, desc] : scenario_catalog())
        j.push_back({{"name", name}, {"description", desc}});
      std::cout << j.dump(2) << "\n";
    } else {
      for (const auto& [name, desc] : scenario_catalog())
        std::cout << name << "\n    " << desc << "\n";
    }
    return 0;
  }

  ScenarioConfig cfg;
  try {
    if (!config_file.empty()) {
      std::ifstream f(config_file);
      if (!f) throw ModelConfigError("cannot open config file: " + config_file);
      nlohmann::json j;
      f >> j;
      cfg = ScenarioConfig::from_json(j);
    }
    cfg.name = scenario;
    if (n > 0) cfg.n = n;
    if (n1 > 0) cfg.n1 = n1;
    if (n2 > 0) cfg.n2 = n2;
    if (theta >= 0) cfg.theta = theta;
    if (eps >= 0) cfg.eps = eps;
    if (steps > 0) cfg.steps = steps;
    if (basis_degree > 0) cfg.basis_degree = basis_degree;
    if (seed >= 0) cfg.seed = static_cast<unsigned>(seed);
    if (amplitude >= 0) cfg.amplitude = amplitude;
    if (deformation >= 0) cfg.deformation = deformation;
    if (!sub_scenario.empty()) cfg.sub_scenario = sub_scenario;
    if (!ladder_str.empty()) {
      cfg.ladder.clear();
      std::stringstream ss(ladder_str);
      std::string tok;
      while (std::getline(ss, tok, ',')) cfg.ladder.push_back(std::stoi(tok));
    }
    if (!out_dir.empty())
      cfg.out_dir = out_dir;
    else if (cfg.out_dir.empty()) {
      const char* env = std::getenv("MASLOV_OUT");
      cfg.out_dir = env ? env : "out";
    }
    cfg.formats.clear();
    std::stringstream fs(format);
    std::string tok;
    while (std::getline(fs, tok, ',')) cfg.formats.push_back(tok);
    cfg.threads = threads;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  ScenarioResult result;
  try {
    result = run_scenario(cfg);
  } catch (const ModelConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return 1;
  }

  if (int rc = write_outputs(result, cfg); rc != 0) return rc;

  for (const auto& c : result.checks)
    std::cout << (c.passed ? "  ok   " : "  FAIL ") << c.name << "  (" << c.value << ")\n";
  if (!result.passed()) {
    std::cerr << "scenario '" << cfg.name << "' failed assertions:\n";
    for (const auto& c : result.checks)
      if (!c.passed) std::cerr << "  " << c.name << " = " << c.value << "\n";
    return 1;
  }
  std::cout << "scenario '" << cfg.name << "' passed ("
            << result.checks.size() << " checks)\n";
  return 0;
}
