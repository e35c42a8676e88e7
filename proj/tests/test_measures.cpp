#include <cmath>

#include <gtest/gtest.h>

#include "terrabench/measures.hpp"

using namespace terrabench;

namespace {

RunResult run(std::size_t T, bool success, double h = 0.0) { return {0, T, h, success, 1}; }

// T = [100, 200, 50000, 300] with T_max = 50000; the 50000 run failed.
std::vector<RunResult> worked_example() {
  return {run(100, true, 1343), run(200, true, 1344), run(50000, false, 1300), run(300, true, 1341)};
}

}  // namespace

TEST(Measures, WorkedExample) {
  const auto r = worked_example();
  EXPECT_DOUBLE_EQ(success_rate(r), 0.75);
  EXPECT_DOUBLE_EQ(mean_successful_T(r), 200.0);
  EXPECT_DOUBLE_EQ(ert(r), 50600.0 / 3.0);
  EXPECT_NEAR(ert_alternative(r, 50000), 50600.0 / 3.0, 1e-9);
  EXPECT_NEAR(sp(r), 266.6666666666667, 1e-9);
  EXPECT_DOUBLE_EQ(par(r, 2, 50000), 25150.0);
  EXPECT_DOUBLE_EQ(par(r, 10, 50000), (10.0 * 50000 + 600) / 4.0);
  EXPECT_DOUBLE_EQ(hv(r, 50000), 37350.0);
  EXPECT_DOUBLE_EQ(avg_returned_height(r), (1343.0 + 1344 + 1300 + 1341) / 4);
}

TEST(Measures, GertUsesBandScores) {
  const auto r = worked_example();
  const auto s = default_schedule();
  // Scores: 10 + 10 + 3 (Ben Macdui band [1297, 1310)) + 10.
  EXPECT_DOUBLE_EQ(total_score(r, s), 33.0);
  EXPECT_DOUBLE_EQ(gert(r, s), 50600.0 / 33.0);
  EXPECT_DOUBLE_EQ(gert(r, indicator_schedule(1340)), ert(r));
  EXPECT_EQ(s.score(1346.0), 0.0);
  EXPECT_EQ(s.score(1345.9), 10.0);
  EXPECT_EQ(s.score(1235.0), 2.0);
  EXPECT_EQ(s.score(1234.99), 1.0);
}

TEST(Measures, NoSuccesses) {
  const std::vector<RunResult> r{run(500, false, 10), run(500, false, 20)};
  EXPECT_TRUE(std::isinf(ert(r)));
  EXPECT_TRUE(std::isinf(ert_alternative(r, 500)));
  EXPECT_TRUE(std::isinf(sp(r)));
  EXPECT_TRUE(std::isnan(mean_successful_T(r)));
  EXPECT_EQ(hv(r, 500), 0.0);
  EXPECT_EQ(par(r, 2, 500), 1000.0);
  EXPECT_TRUE(std::isinf(gert(r, default_schedule())));
  const auto m = compute_measures(r, default_schedule(), 500);
  EXPECT_EQ(m.N_s, 0u);
  EXPECT_EQ(measures_json(m).find("\"ERT\": \"inf\"") != std::string::npos, true);
}

TEST(Measures, AlternativeErtNeedsFullCostFailures) {
  const std::vector<RunResult> r{run(100, true), run(499, false)};
  EXPECT_THROW(ert_alternative(r, 500), std::invalid_argument);
  EXPECT_THROW(ert(std::vector<RunResult>{}), std::invalid_argument);
}

TEST(Measures, ReportRow) {
  const auto m = compute_measures(worked_example(), default_schedule(), 50000);
  EXPECT_EQ(m.N, 4u);
  EXPECT_EQ(m.N_s, 3u);
  EXPECT_DOUBLE_EQ(m.PAR2, 25150.0);
  const std::string row = measures_csv_row(m);
  const std::string header = measures_csv_header();
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), std::count(header.begin(), header.end(), ','));
  EXPECT_EQ(row.substr(0, 9), "4,3,0.75,");
}
