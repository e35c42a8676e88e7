#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include <gtest/gtest.h>

#include "terrabench/commands.hpp"
#include "test_util.hpp"

using namespace terrabench;
namespace fs = std::filesystem;

namespace {

int cli(const std::string& args) {
  const std::string cmd = std::string(TERRABENCH_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmallConfig = R"(seed = 5
[data.synthetic]
seed = 9
nrows = 32
ncols = 32
ruggedness = 0.6
[[bands]]
low = -200
high = 1100
score = 0
[[bands]]
low = 1100
high = 1300
score = 1
[[bands]]
low = 1300
high = 1401
score = 10
[run]
f_target = 1300
T_max = 500
runs = 6
[algorithm]
name = "nelder_mead"
[tune]
M = 5
T_instance = 2000
min_runs = 2
[report]
target = [100.0, 200.0]
)";

const char* kTunedConfig = R"(seed = 5
[data.synthetic]
seed = 9
nrows = 32
ncols = 32
[[bands]]
low = -200
high = 1300
score = 0
[[bands]]
low = 1300
high = 1401
score = 1
[run]
f_target = 1300
T_max = 400
[algorithm]
name = "pso"
[tune]
M = 5
T_instance = 1500
min_runs = 2
)";

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "config.toml";
  write_file_atomic(p, text);
  return p;
}

}  // namespace

TEST(Preprocess, TilesAssembleToTheSourceGrid) {
  const auto dir = tbtest::temp_dir("pre");
  SyntheticSpec spec;
  spec.seed = 4;
  spec.nrows = 20;
  spec.ncols = 30;
  std::ostringstream out;
  ASSERT_EQ(cmd_synth(spec, 2, 1, dir / "tiles", out).size(), 2u);
  const auto grid = preprocess_tiles(dir / "tiles", {});
  const auto src = synth_terrain(spec.seed, spec.nrows, spec.ncols, spec.ruggedness, spec.cell_size);
  ASSERT_EQ(grid.ncols(), 30u);
  ASSERT_EQ(grid.nrows(), 20u);
  // Sea points are sloped, every other point is untouched.
  const auto mask = build_sea_mask(src);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    if (!mask.is_sea(p)) {
      EXPECT_EQ(grid[p], src[p]) << p;
    }
  }

  cmd_preprocess(dir / "tiles", {}, dir / "a.bin", out);
  cmd_preprocess(dir / "tiles", {}, dir / "b.bin", out);
  EXPECT_EQ(read_file(dir / "a.bin"), read_file(dir / "b.bin"));
  EXPECT_EQ(read_cache(dir / "a.bin"), grid);
}

TEST(Preprocess, CliExitCodes) {
  const auto dir = tbtest::temp_dir("cli");
  EXPECT_EQ(cli("synth --out " + (dir / "t").string() + " --nrows 16 --ncols 16 --tiles-x 2"), 0);
  EXPECT_EQ(cli("preprocess --asc-dir " + (dir / "t").string() + " --out " + (dir / "c.bin").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "c.bin"));
  EXPECT_EQ(cli("preprocess --asc-dir " + (dir / "missing").string() + " --out " + (dir / "d.bin").string()),
            kExitUsage);
  write_file_atomic(dir / "bad" / "x.asc", "ncols 2\nnrows 2\nxllcorner 0\n");
  EXPECT_EQ(cli("preprocess --asc-dir " + (dir / "bad").string() + " --out " + (dir / "e.bin").string()),
            kExitData);
  EXPECT_EQ(cli("frobnicate"), kExitUsage);
  EXPECT_EQ(cli(""), kExitUsage);
}

TEST(Optima, SinglePeakGrid) {
  const auto dir = tbtest::temp_dir("opt");
  const auto grid = tbtest::grid_of({{1, 2, 3}, {2, 5, 4}, {1, 2, 3}});
  std::ostringstream out;
  const auto s = cmd_optima(grid, ScoreSchedule({{0, 4, 0, "lowland", "low"}, {4, 6, 1, "bennevis", "top"}}), dir,
                            false, out);
  EXPECT_EQ(s.optima, 1u);
  EXPECT_DOUBLE_EQ(s.top_band_proportion, 1.0);
  EXPECT_NE(out.str().find("optima 1\n"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "optima.csv"));
  EXPECT_TRUE(fs::exists(dir / "band_stats.csv"));

  std::ostringstream gated;
  cmd_optima(grid, ScoreSchedule({{0, 6, 1, "bennevis", "all"}}), dir, true, gated);
  EXPECT_NE(gated.str().find("reference_optima 957174"), std::string::npos);
}

TEST(Run, SeedRepeatIsIdenticalAndInvalidConfigsFail) {
  const auto dir = tbtest::temp_dir("run");
  const auto cfg = write_config(dir, kSmallConfig);
  ASSERT_EQ(cli("run --config " + cfg.string() + " --out " + (dir / "a").string()), 0);
  ASSERT_EQ(cli("run --config " + cfg.string() + " --out " + (dir / "b").string() + " --jobs 3"), 0);
  EXPECT_EQ(read_file(dir / "a" / "results.csv"), read_file(dir / "b" / "results.csv"));
  EXPECT_EQ(read_file(dir / "a" / "traces" / "trace_000005.csv"), read_file(dir / "b" / "traces" / "trace_000005.csv"));
  EXPECT_EQ(parse_results_csv(read_file(dir / "a" / "results.csv")).size(), 6u);
  EXPECT_TRUE(fs::exists(dir / "a" / "measures.json"));
  EXPECT_TRUE(fs::exists(dir / "a" / "instance.toml"));
  // Nelder-Mead is deterministic from the run's first start, so the seed shows in a stochastic optimizer.
  std::string pso = kSmallConfig;
  pso.replace(pso.find("nelder_mead"), 11, "pso");
  const auto pso_dir = dir / "pso";
  fs::create_directories(pso_dir);
  const auto pso_cfg = write_config(pso_dir, pso);
  ASSERT_EQ(cli("run --config " + pso_cfg.string() + " --out " + (dir / "c").string()), 0);
  ASSERT_EQ(cli("run --config " + pso_cfg.string() + " --out " + (dir / "d").string()), 0);
  ASSERT_EQ(cli("run --config " + pso_cfg.string() + " --out " + (dir / "e").string() + " --seed 6"), 0);
  EXPECT_EQ(read_file(dir / "c" / "traces" / "trace_000000.csv"), read_file(dir / "d" / "traces" / "trace_000000.csv"));
  EXPECT_NE(read_file(dir / "c" / "traces" / "trace_000000.csv"), read_file(dir / "e" / "traces" / "trace_000000.csv"));

  const auto bad = dir / "bad";
  fs::create_directories(bad);
  write_config(bad, std::string(kSmallConfig) + "[algorithm.hyperparameters]\nsigma0 = 1\n");
  EXPECT_EQ(cli("run --config " + (bad / "config.toml").string() + " --out " + (dir / "d").string()), kExitUsage);
  write_config(bad, "[algorithm]\nname = \"pso\"\n[algorithm.hyperparameters]\nr = 1.5\n");
  EXPECT_EQ(cli("run --config " + (bad / "config.toml").string() + " --out " + (dir / "d").string()), kExitUsage);
  EXPECT_EQ(cli("run --config " + (dir / "none.toml").string()), kExitUsage);
}

TEST(Tune, WritesBestInstanceAndResumes) {
  const auto dir = tbtest::temp_dir("tune");
  const auto cfg = write_config(dir, kTunedConfig);
  ASSERT_EQ(cli("tune --config " + cfg.string() + " --out " + (dir / "s").string()), 0);
  const std::string log = read_file(dir / "s" / "study_log.csv");
  const auto best = read_file(dir / "s" / "best_instance.toml");
  const auto parsed = parse_config(best);
  ASSERT_TRUE(parsed.instance.has_value());
  EXPECT_EQ(parsed.instance->algorithm, Algorithm::pso);

  ASSERT_EQ(cli("tune --config " + cfg.string() + " --out " + (dir / "s").string() + " --resume"), 0);
  EXPECT_EQ(read_file(dir / "s" / "study_log.csv"), log);
  EXPECT_EQ(read_file(dir / "s" / "best_instance.toml"), best);
}

TEST(Report, FilesAreDeterministicAndParse) {
  const auto dir = tbtest::temp_dir("report");
  const auto cfg = write_config(dir, kSmallConfig);
  ASSERT_EQ(cli("run --config " + cfg.string() + " --out " + (dir / "r").string()), 0);
  ASSERT_EQ(cli("report --results " + (dir / "r").string() + " --out " + (dir / "p1").string()), 0);
  ASSERT_EQ(cli("report --results " + (dir / "r").string() + " --out " + (dir / "p2").string()), 0);
  std::size_t count = 0;
  for (const auto& e : fs::directory_iterator(dir / "p1")) {
    ++count;
    EXPECT_EQ(read_file(e.path()), read_file(dir / "p2" / e.path().filename())) << e.path();
  }
  EXPECT_EQ(count, 10u);

  const auto curve = parse_csv(read_file(dir / "p1" / "ert_curve.csv"));
  ASSERT_GT(curve.rows.size(), 2u);
  EXPECT_EQ(curve.header, (std::vector<std::string>{"target", "ert"}));
  double prev = 0.0;
  for (const auto& row : curve.rows) {
    const double e = parse_double(row[1]);
    EXPECT_GE(e, prev);
    prev = e;
  }
  const auto conv = parse_csv(read_file(dir / "p1" / "convergence.csv"));
  EXPECT_EQ(conv.rows.size(), 6u * 500u);
  EXPECT_EQ(cli("report --results " + (dir / "nothing").string() + " --out " + (dir / "p3").string()), kExitUsage);
}

TEST(Patch, ShippedFileParses) {
  const auto path = fs::path(TERRABENCH_SOURCE_DIR) / "data" / "os_terrain50_patch.txt";
  const auto edits = parse_patch(read_file(path), path.string());
  ASSERT_EQ(edits.size(), 8u);
  for (const auto& e : edits) {
    EXPECT_EQ(e.kind, PatchEdit::Kind::lower_tile);
    EXPECT_LT(e.height, 0.0f);
  }
}
