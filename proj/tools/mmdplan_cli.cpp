// Command-line front end; talks to the library only through the C interface.
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmdplan/mmdplan.h"

namespace fs = std::filesystem;

namespace {

struct Failure {
  int code;
};

void check(mmdplan_status st, const std::string& what) {
  if (st != MMDPLAN_OK) {
    std::cerr << "error: " << what << ": " << mmdplan_last_error() << " (status " << st << ")\n";
    throw Failure{static_cast<int>(st) + 1};
  }
}

using ScenarioPtr = std::unique_ptr<mmdplan_scenario, decltype(&mmdplan_scenario_free)>;
using BankPtr = std::unique_ptr<mmdplan_bank, decltype(&mmdplan_bank_free)>;

ScenarioPtr load(const std::string& path, const std::string& config) {
  mmdplan_scenario* s = nullptr;
  check(mmdplan_scenario_load(path.c_str(), &s), "loading scenario '" + path + "'");
  ScenarioPtr p(s, &mmdplan_scenario_free);
  if (!config.empty()) check(mmdplan_scenario_apply_config(s, config.c_str()), "applying config '" + config + "'");
  return p;
}

std::string in_dir(const std::string& dir, const char* name) {
  fs::create_directories(dir);
  return (fs::path(dir) / name).string();
}

void print_file(const std::string& path) {
  std::ifstream in(path);
  std::cout << in.rdbuf();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uncertainty-aware trajectory planning among reconstructed cuboid obstacles"};
  app.require_subcommand(1);

  std::string scenario_path, config_path, out_dir = ".", planner = "cem";
  std::vector<std::string> scenario_paths, planners;
  std::uint64_t seed = 0;
  int seeds = 30, buildings = 0, bank_size = 500;
  double area = 0.0, window = 40.0, resolution = 0.25;
  bool timing = false;

  auto* gen = app.add_subcommand("gen", "Generate a square-street scenario");
  gen->add_option("--seed", seed, "Scenario seed");
  gen->add_option("--buildings", buildings, "Building count (default 47)");
  gen->add_option("--area", area, "Square area in m^2 (default 160000)");
  gen->add_option("--out", out_dir, "Output directory");
  gen->add_option("--config", config_path, "Config patch applied before saving")->check(CLI::ExistingFile);

  auto* plan = app.add_subcommand("plan", "Run one receding-horizon trial");
  plan->add_option("--scenario", scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);
  plan->add_option("--planner", planner, "Planner")->check(CLI::IsMember({"cem", "scp", "det"}));
  plan->add_option("--seed", seed, "Trial seed");
  plan->add_option("--out", out_dir, "Output directory");
  plan->add_option("--config", config_path, "Config patch")->check(CLI::ExistingFile);

  auto* bench = app.add_subcommand("bench", "Benchmark table over seeds");
  bench->add_option("--scenario", scenario_paths, "Scenario file (repeatable)")->required()->check(CLI::ExistingFile);
  bench->add_option("--planner", planners, "Planner (repeatable; default all)")
      ->check(CLI::IsMember({"cem", "scp", "det"}));
  bench->add_option("--seeds", seeds, "Seeds per (scenario, planner)");
  bench->add_option("--seed", seed, "First seed");
  bench->add_option("--out", out_dir, "Output directory");
  bench->add_option("--config", config_path, "Config patch")->check(CLI::ExistingFile);
  bench->add_flag("--timing", timing, "Report compute time (machine dependent)");

  auto* qbench = app.add_subcommand("query-bench", "Analytic SDF against voxel EDT queries");
  qbench->add_option("--scenario", scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);
  qbench->add_option("--seed", seed, "Query seed");
  qbench->add_option("--window", window, "Buildings within this many meters of the chord midpoint");
  qbench->add_option("--resolution", resolution, "Voxel size in meters");
  qbench->add_option("--out", out_dir, "Output directory");
  qbench->add_option("--config", config_path, "Config patch")->check(CLI::ExistingFile);

  auto* calib = app.add_subcommand("calibrate", "Error bank from the perception pipeline");
  calib->add_option("--scenario", scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);
  calib->add_option("--seeds", seeds, "Perception seeds");
  calib->add_option("--seed", seed, "First seed");
  calib->add_option("--out", out_dir, "Output directory");
  calib->add_option("--config", config_path, "Config patch")->check(CLI::ExistingFile);

  auto* bankgen = app.add_subcommand("bank-gen", "Default synthetic error bank");
  bankgen->add_option("--seed", seed, "Bank seed");
  bankgen->add_option("--size", bank_size, "Entries per array");
  bankgen->add_option("--out", out_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      mmdplan_scenario* s = nullptr;
      check(mmdplan_scenario_generate(seed, buildings, area, &s), "generating scenario");
      ScenarioPtr p(s, &mmdplan_scenario_free);
      if (!config_path.empty()) check(mmdplan_scenario_apply_config(s, config_path.c_str()), "applying config");
      const std::string path = in_dir(out_dir, "scenario.json");
      check(mmdplan_scenario_save(s, path.c_str()), "saving scenario");
      std::cout << path << '\n';
    } else if (*plan) {
      auto s = load(scenario_path, config_path);
      mmdplan_planner kind;
      check(mmdplan_parse_planner(planner.c_str(), &kind), "planner");
      const std::string traj = in_dir(out_dir, "trajectory.csv");
      const std::string metrics = in_dir(out_dir, "metrics.json");
      const std::string trace = in_dir(out_dir, "cem_trace.csv");
      mmdplan_metrics m{};
      check(mmdplan_run_trial(s.get(), kind, seed, traj.c_str(), metrics.c_str(),
                              kind == MMDPLAN_PLANNER_CEM ? trace.c_str() : nullptr, &m),
            "running trial");
      print_file(metrics);
      return m.success ? 0 : 3;
    } else if (*bench) {
      std::vector<ScenarioPtr> owned;
      std::vector<const mmdplan_scenario*> list;
      for (const auto& path : scenario_paths) {
        owned.push_back(load(path, config_path));
        list.push_back(owned.back().get());
      }
      if (planners.empty()) planners = {"cem", "scp", "det"};
      std::vector<mmdplan_planner> kinds;
      for (const auto& name : planners) {
        mmdplan_planner k;
        check(mmdplan_parse_planner(name.c_str(), &k), "planner");
        kinds.push_back(k);
      }
      const std::string table = in_dir(out_dir, "bench.csv");
      check(mmdplan_benchmark(list.data(), static_cast<int>(list.size()), kinds.data(), static_cast<int>(kinds.size()),
                              seeds, seed, timing ? 1 : 0, table.c_str()),
            "benchmark");
      print_file(table);
    } else if (*qbench) {
      auto s = load(scenario_path, config_path);
      const std::string table = in_dir(out_dir, "query_bench.csv");
      double dis = 0.0, tol = 0.0;
      check(mmdplan_query_bench(s.get(), seed, window, resolution, table.c_str(), &dis, &tol), "query bench");
      print_file(table);
      std::printf("max_disagreement_m=%.6f bound_m=%.6f\n", dis, tol);
    } else if (*calib) {
      auto s = load(scenario_path, config_path);
      mmdplan_bank* b = nullptr;
      check(mmdplan_calibrate(s.get(), seeds, seed, &b), "calibration");
      BankPtr p(b, &mmdplan_bank_free);
      const std::string path = in_dir(out_dir, "bank.json");
      check(mmdplan_bank_save(b, path.c_str()), "saving bank");
      int n = 0;
      check(mmdplan_bank_size(b, &n), "bank size");
      std::cout << path << " (" << n << " entries)\n";
    } else if (*bankgen) {
      mmdplan_bank* b = nullptr;
      check(mmdplan_bank_default(seed, bank_size, &b), "generating bank");
      BankPtr p(b, &mmdplan_bank_free);
      const std::string path = in_dir(out_dir, "bank.json");
      check(mmdplan_bank_save(b, path.c_str()), "saving bank");
      std::cout << path << '\n';
    }
  } catch (const Failure& f) {
    return f.code;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
