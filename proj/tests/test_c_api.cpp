#include "mmdplan/mmdplan.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("mmdplan_capi_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const char* name) const { return (path / name).string(); }
};

std::string slurp(const std::string& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

TEST(CApi, ParsePlanner) {
  mmdplan_planner p;
  EXPECT_EQ(mmdplan_parse_planner("scp", &p), MMDPLAN_OK);
  EXPECT_EQ(p, MMDPLAN_PLANNER_SCP);
  EXPECT_EQ(mmdplan_parse_planner("rrt", &p), MMDPLAN_INVALID_ARGUMENT);
  EXPECT_NE(std::string(mmdplan_last_error()).find("rrt"), std::string::npos);
  EXPECT_EQ(mmdplan_parse_planner(nullptr, &p), MMDPLAN_INVALID_ARGUMENT);
  EXPECT_EQ(mmdplan_parse_planner("cem", nullptr), MMDPLAN_INVALID_ARGUMENT);
}

TEST(CApi, NullHandlesAreRejected) {
  int n = 0;
  EXPECT_EQ(mmdplan_scenario_building_count(nullptr, &n), MMDPLAN_INVALID_ARGUMENT);
  EXPECT_EQ(mmdplan_bank_size(nullptr, &n), MMDPLAN_INVALID_ARGUMENT);
  EXPECT_EQ(mmdplan_scenario_generate(0, 0, 0.0, nullptr), MMDPLAN_INVALID_ARGUMENT);
  mmdplan_metrics m{};
  EXPECT_EQ(mmdplan_run_trial(nullptr, MMDPLAN_PLANNER_CEM, 0, nullptr, nullptr, nullptr, &m),
            MMDPLAN_INVALID_ARGUMENT);
  mmdplan_scenario_free(nullptr);
  mmdplan_bank_free(nullptr);
}

TEST(CApi, MissingFileIsIoError) {
  mmdplan_scenario* s = nullptr;
  EXPECT_EQ(mmdplan_scenario_load("/nonexistent/scenario.json", &s), MMDPLAN_IO_ERROR);
  EXPECT_EQ(s, nullptr);
  EXPECT_GT(std::string(mmdplan_last_error()).size(), 0u);
}

TEST(CApi, ScenarioRoundTrip) {
  TempDir dir;
  mmdplan_scenario* s = nullptr;
  ASSERT_EQ(mmdplan_scenario_generate(3, 0, 0.0, &s), MMDPLAN_OK);
  int n = 0;
  ASSERT_EQ(mmdplan_scenario_building_count(s, &n), MMDPLAN_OK);
  EXPECT_EQ(n, 47);
  const std::string a = dir.file("a.json"), b = dir.file("b.json");
  ASSERT_EQ(mmdplan_scenario_save(s, a.c_str()), MMDPLAN_OK);
  mmdplan_scenario* t = nullptr;
  ASSERT_EQ(mmdplan_scenario_load(a.c_str(), &t), MMDPLAN_OK);
  ASSERT_EQ(mmdplan_scenario_save(t, b.c_str()), MMDPLAN_OK);
  EXPECT_EQ(slurp(a), slurp(b));
  mmdplan_scenario_free(s);
  mmdplan_scenario_free(t);
}

TEST(CApi, BankRoundTrip) {
  TempDir dir;
  mmdplan_bank* b = nullptr;
  ASSERT_EQ(mmdplan_bank_default(5, 32, &b), MMDPLAN_OK);
  int n = 0;
  ASSERT_EQ(mmdplan_bank_size(b, &n), MMDPLAN_OK);
  EXPECT_EQ(n, 32);
  const std::string p = dir.file("bank.json");
  ASSERT_EQ(mmdplan_bank_save(b, p.c_str()), MMDPLAN_OK);
  mmdplan_bank* c = nullptr;
  ASSERT_EQ(mmdplan_bank_load(p.c_str(), &c), MMDPLAN_OK);
  ASSERT_EQ(mmdplan_bank_size(c, &n), MMDPLAN_OK);
  EXPECT_EQ(n, 32);
  EXPECT_EQ(mmdplan_bank_default(5, 0, &b), MMDPLAN_INVALID_ARGUMENT);
  mmdplan_bank_free(b);
  mmdplan_bank_free(c);
}

TEST(CApi, TrialWritesOutputs) {
  TempDir dir;
  mmdplan_scenario* s = nullptr;
  ASSERT_EQ(mmdplan_scenario_generate(0, 0, 0.0, &s), MMDPLAN_OK);
  const std::string traj = dir.file("t.csv"), metrics = dir.file("m.json");
  mmdplan_metrics m{};
  ASSERT_EQ(mmdplan_run_trial(s, MMDPLAN_PLANNER_SCP, 2, traj.c_str(), metrics.c_str(), nullptr, &m), MMDPLAN_OK)
      << mmdplan_last_error();
  EXPECT_EQ(m.success, 1);
  EXPECT_GT(m.traversed_length, 0.0);
  EXPECT_TRUE(std::isfinite(m.min_gt_clearance));
  EXPECT_EQ(slurp(traj).substr(0, 28), "t,x,y,z,vx,vy,vz,ax,ay,az\n0,");
  EXPECT_NE(slurp(metrics).find("\"success\""), std::string::npos);
  mmdplan_scenario_free(s);
}

}  // namespace
