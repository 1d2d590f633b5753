/* C interface of the mmdplan library. Objects are opaque handles owned by the
 * caller and released with the matching *_free function. Every call returns a
 * status; on failure mmdplan_last_error() describes it (thread local, valid
 * until the next call on the same thread). */
#ifndef MMDPLAN_MMDPLAN_H
#define MMDPLAN_MMDPLAN_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define MMDPLAN_API __attribute__((visibility("default")))
#else
#define MMDPLAN_API
#endif

typedef enum {
  MMDPLAN_OK = 0,
  MMDPLAN_INVALID_ARGUMENT = 1,
  MMDPLAN_IO_ERROR = 2,
  MMDPLAN_RUNTIME_ERROR = 3,
  MMDPLAN_CAPACITY_EXCEEDED = 4,
  MMDPLAN_INTERNAL_ERROR = 5
} mmdplan_status;

typedef enum { MMDPLAN_PLANNER_CEM = 0, MMDPLAN_PLANNER_SCP = 1, MMDPLAN_PLANNER_DET = 2 } mmdplan_planner;

typedef struct mmdplan_scenario mmdplan_scenario;
typedef struct mmdplan_bank mmdplan_bank;

typedef struct {
  int success;
  int reached_goal;
  double smoothness;
  double compute_seconds;
  double traversed_length;
  double min_gt_clearance; /* +inf when the scene has no buildings */
  int replans;
} mmdplan_metrics;

MMDPLAN_API const char* mmdplan_last_error(void);
MMDPLAN_API const char* mmdplan_version(void);
/* "cem", "scp", "det" */
MMDPLAN_API mmdplan_status mmdplan_parse_planner(const char* name, mmdplan_planner* out);

/* Scenarios. n_buildings <= 0 and area_m2 <= 0 select the defaults (47, 160000). */
MMDPLAN_API mmdplan_status mmdplan_scenario_generate(uint64_t seed, int n_buildings, double area_m2,
                                                     mmdplan_scenario** out);
MMDPLAN_API mmdplan_status mmdplan_scenario_load(const char* path, mmdplan_scenario** out);
MMDPLAN_API mmdplan_status mmdplan_scenario_save(const mmdplan_scenario* s, const char* path);
/* Merge-patches planner, perception and trial settings from a config file. */
MMDPLAN_API mmdplan_status mmdplan_scenario_apply_config(mmdplan_scenario* s, const char* path);
/* Points the scenario at a bank file (stored as given). */
MMDPLAN_API mmdplan_status mmdplan_scenario_set_bank_file(mmdplan_scenario* s, const char* path);
MMDPLAN_API mmdplan_status mmdplan_scenario_building_count(const mmdplan_scenario* s, int* out);
MMDPLAN_API void mmdplan_scenario_free(mmdplan_scenario* s);

/* Error banks. */
MMDPLAN_API mmdplan_status mmdplan_bank_default(uint64_t seed, int size, mmdplan_bank** out);
MMDPLAN_API mmdplan_status mmdplan_bank_load(const char* path, mmdplan_bank** out);
MMDPLAN_API mmdplan_status mmdplan_bank_save(const mmdplan_bank* b, const char* path);
MMDPLAN_API mmdplan_status mmdplan_bank_size(const mmdplan_bank* b, int* out);
MMDPLAN_API void mmdplan_bank_free(mmdplan_bank* b);
MMDPLAN_API mmdplan_status mmdplan_calibrate(const mmdplan_scenario* s, int n_seeds, uint64_t first_seed,
                                             mmdplan_bank** out);

/* One receding-horizon trial. Output paths may be NULL; trace_csv receives the
 * iteration table of the first cem planning call (ignored for other planners). */
MMDPLAN_API mmdplan_status mmdplan_run_trial(const mmdplan_scenario* s, mmdplan_planner planner, uint64_t seed,
                                             const char* trajectory_csv, const char* metrics_json,
                                             const char* trace_csv, mmdplan_metrics* out);

/* Seeds first_seed .. first_seed + n_seeds - 1 for every (scenario, planner).
 * timing = 0 prints '-' for compute time so the table is reproducible. */
MMDPLAN_API mmdplan_status mmdplan_benchmark(const mmdplan_scenario* const* scenarios, int n_scenarios,
                                             const mmdplan_planner* planners, int n_planners, int n_seeds,
                                             uint64_t first_seed, int timing, const char* table_csv);

/* Analytic SDF against voxel EDT on the buildings within window_m of the
 * start-goal chord midpoint. Either output pointer may be NULL. */
MMDPLAN_API mmdplan_status mmdplan_query_bench(const mmdplan_scenario* s, uint64_t seed, double window_m,
                                               double resolution, const char* table_csv,
                                               double* max_disagreement, double* tolerance);

#ifdef __cplusplus
}
#endif

#endif
