#include "mmdplan/mmdplan.h"

#include <fstream>
#include <new>
#include <stdexcept>
#include <string>

#include "mmdplan/harness.hpp"
#include "mmdplan/voxel.hpp"

struct mmdplan_scenario {
  mmdplan::Scenario s;
};

struct mmdplan_bank {
  mmdplan::ErrorBank b;
};

namespace {

thread_local std::string g_error;

// I/O failures from the core are runtime_errors whose text starts like this.
bool is_io(const std::string& what) {
  return what.rfind("cannot open", 0) == 0 || what.rfind("cannot write", 0) == 0 ||
         what.rfind("write failed", 0) == 0;
}

template <class Fn>
mmdplan_status guard(Fn&& fn) {
  try {
    g_error.clear();
    fn();
    return MMDPLAN_OK;
  } catch (const std::invalid_argument& e) {
    g_error = e.what();
    return MMDPLAN_INVALID_ARGUMENT;
  } catch (const std::length_error& e) {
    g_error = e.what();
    return MMDPLAN_CAPACITY_EXCEEDED;
  } catch (const std::bad_alloc&) {
    g_error = "out of memory";
    return MMDPLAN_CAPACITY_EXCEEDED;
  } catch (const std::runtime_error& e) {
    g_error = e.what();
    return is_io(g_error) ? MMDPLAN_IO_ERROR : MMDPLAN_RUNTIME_ERROR;
  } catch (const std::exception& e) {
    g_error = e.what();
    return MMDPLAN_INTERNAL_ERROR;
  } catch (...) {
    g_error = "unknown error";
    return MMDPLAN_INTERNAL_ERROR;
  }
}

void need(const void* p, const char* what) {
  if (!p) throw std::invalid_argument(std::string(what) + " must not be NULL");
}

std::ofstream open_out(const char* path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error(std::string("cannot write '") + path + "'");
  return os;
}

void finish(std::ofstream& os, const char* path) {
  os.flush();
  if (!os) throw std::runtime_error(std::string("write failed for '") + path + "'");
}

mmdplan::PlannerKind kind(mmdplan_planner p) {
  switch (p) {
    case MMDPLAN_PLANNER_CEM: return mmdplan::PlannerKind::Cem;
    case MMDPLAN_PLANNER_SCP: return mmdplan::PlannerKind::Scp;
    case MMDPLAN_PLANNER_DET: return mmdplan::PlannerKind::Det;
  }
  throw std::invalid_argument("unknown planner enum value");
}

}  // namespace

extern "C" {

const char* mmdplan_last_error(void) { return g_error.c_str(); }

const char* mmdplan_version(void) { return "0.1.0"; }

mmdplan_status mmdplan_parse_planner(const char* name, mmdplan_planner* out) {
  return guard([&] {
    need(name, "name");
    need(out, "out");
    switch (mmdplan::parse_planner(name)) {
      case mmdplan::PlannerKind::Cem: *out = MMDPLAN_PLANNER_CEM; break;
      case mmdplan::PlannerKind::Scp: *out = MMDPLAN_PLANNER_SCP; break;
      case mmdplan::PlannerKind::Det: *out = MMDPLAN_PLANNER_DET; break;
    }
  });
}

mmdplan_status mmdplan_scenario_generate(uint64_t seed, int n_buildings, double area_m2, mmdplan_scenario** out) {
  return guard([&] {
    need(out, "out");
    *out = nullptr;
    mmdplan::StreetParams p;
    if (n_buildings > 0) p.n_buildings = n_buildings;
    if (area_m2 > 0.0) p.area = area_m2;
    *out = new mmdplan_scenario{mmdplan::generate_square_street(seed, p)};
  });
}

mmdplan_status mmdplan_scenario_load(const char* path, mmdplan_scenario** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new mmdplan_scenario{mmdplan::load_scenario(path)};
  });
}

mmdplan_status mmdplan_scenario_save(const mmdplan_scenario* s, const char* path) {
  return guard([&] {
    need(s, "scenario");
    need(path, "path");
    mmdplan::save_scenario(s->s, path);
  });
}

mmdplan_status mmdplan_scenario_apply_config(mmdplan_scenario* s, const char* path) {
  return guard([&] {
    need(s, "scenario");
    need(path, "path");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(std::string("cannot open '") + path + "'");
    const std::string text((std::istreambuf_iterator<char>(in)), {});
    mmdplan::apply_config_json(s->s, text);
  });
}

mmdplan_status mmdplan_scenario_set_bank_file(mmdplan_scenario* s, const char* path) {
  return guard([&] {
    need(s, "scenario");
    need(path, "path");
    s->s.bank_ref = mmdplan::BankSource{mmdplan::BankSource::Kind::File, 0, 0, path};
    (void)mmdplan::resolve_bank(s->s);
  });
}

mmdplan_status mmdplan_scenario_building_count(const mmdplan_scenario* s, int* out) {
  return guard([&] {
    need(s, "scenario");
    need(out, "out");
    *out = static_cast<int>(s->s.buildings.size());
  });
}

void mmdplan_scenario_free(mmdplan_scenario* s) { delete s; }

mmdplan_status mmdplan_bank_default(uint64_t seed, int size, mmdplan_bank** out) {
  return guard([&] {
    need(out, "out");
    *out = nullptr;
    *out = new mmdplan_bank{mmdplan::default_bank(seed, size)};
  });
}

mmdplan_status mmdplan_bank_load(const char* path, mmdplan_bank** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new mmdplan_bank{mmdplan::load_bank(path)};
  });
}

mmdplan_status mmdplan_bank_save(const mmdplan_bank* b, const char* path) {
  return guard([&] {
    need(b, "bank");
    need(path, "path");
    mmdplan::save_bank(b->b, path);
  });
}

mmdplan_status mmdplan_bank_size(const mmdplan_bank* b, int* out) {
  return guard([&] {
    need(b, "bank");
    need(out, "out");
    *out = static_cast<int>(b->b.yaw.size());
  });
}

void mmdplan_bank_free(mmdplan_bank* b) { delete b; }

mmdplan_status mmdplan_calibrate(const mmdplan_scenario* s, int n_seeds, uint64_t first_seed, mmdplan_bank** out) {
  return guard([&] {
    need(s, "scenario");
    need(out, "out");
    *out = nullptr;
    mmdplan::CalibrateOptions opt;
    opt.n_seeds = n_seeds;
    opt.first_seed = first_seed;
    *out = new mmdplan_bank{mmdplan::calibrate(s->s, opt)};
  });
}

mmdplan_status mmdplan_run_trial(const mmdplan_scenario* s, mmdplan_planner planner, uint64_t seed,
                                 const char* trajectory_csv, const char* metrics_json, const char* trace_csv,
                                 mmdplan_metrics* out) {
  return guard([&] {
    need(s, "scenario");
    const auto p = kind(planner);
    const auto r = mmdplan::run_trial(s->s, p, seed);
    if (trajectory_csv) {
      auto os = open_out(trajectory_csv);
      r.path.write_csv(os);
      finish(os, trajectory_csv);
    }
    if (metrics_json) {
      auto os = open_out(metrics_json);
      os << mmdplan::metrics_to_json(r.metrics, p, seed);
      finish(os, metrics_json);
    }
    if (trace_csv && !r.cem_traces.empty()) {
      auto os = open_out(trace_csv);
      r.cem_traces.front().write_csv(os);
      finish(os, trace_csv);
    }
    if (out) {
      const auto& m = r.metrics;
      *out = mmdplan_metrics{m.success ? 1 : 0, m.reached_goal ? 1 : 0, m.smoothness, m.compute_seconds,
                             m.traversed_length, m.min_gt_clearance, m.replans};
    }
  });
}

mmdplan_status mmdplan_benchmark(const mmdplan_scenario* const* scenarios, int n_scenarios,
                                 const mmdplan_planner* planners, int n_planners, int n_seeds, uint64_t first_seed,
                                 int timing, const char* table_csv) {
  return guard([&] {
    need(scenarios, "scenarios");
    need(planners, "planners");
    need(table_csv, "table_csv");
    if (n_scenarios < 1 || n_planners < 1) throw std::invalid_argument("benchmark: empty scenario or planner list");
    std::vector<mmdplan::Scenario> list;
    for (int i = 0; i < n_scenarios; ++i) {
      need(scenarios[i], "scenario");
      list.push_back(scenarios[i]->s);
    }
    mmdplan::BenchOptions opt;
    opt.planners.clear();
    for (int i = 0; i < n_planners; ++i) opt.planners.push_back(kind(planners[i]));
    opt.n_seeds = n_seeds;
    opt.first_seed = first_seed;
    opt.timing = timing != 0;
    const auto table = mmdplan::benchmark(list, opt);
    auto os = open_out(table_csv);
    mmdplan::write_bench_table(os, table);
    finish(os, table_csv);
  });
}

mmdplan_status mmdplan_query_bench(const mmdplan_scenario* s, uint64_t seed, double window_m, double resolution,
                                   const char* table_csv, double* max_disagreement, double* tolerance) {
  return guard([&] {
    need(s, "scenario");
    const auto world = mmdplan::query_window(s->s, window_m);
    mmdplan::QueryBenchConfig cfg;
    cfg.seed = seed;
    if (resolution > 0.0) cfg.resolution = resolution;
    const auto r = mmdplan::query_bench(world, cfg);
    if (table_csv) {
      auto os = open_out(table_csv);
      mmdplan::write_query_bench(os, r);
      finish(os, table_csv);
    }
    if (max_disagreement) *max_disagreement = r.max_disagreement;
    if (tolerance) *tolerance = r.tolerance;
  });
}

}  // extern "C"
