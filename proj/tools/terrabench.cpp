// terrabench: command-line driver for the terrain benchmark pipeline.
//
//   terrabench synth      --out DIR [--seed N --nrows N --ncols N --tiles-x N --tiles-y N]
//   terrabench preprocess --asc-dir DIR [--patch FILE] --out CACHE
//   terrabench optima     (--cache FILE | --config FILE) --out DIR [--gate-full-dataset]
//   terrabench run        --config FILE [--out DIR] [--jobs N] [--seed N]
//   terrabench tune       --config FILE [--out DIR] [--jobs N] [--seed N] [--resume]
//   terrabench report     --results DIR --out DIR
//   terrabench verify     --manifest FILE [--root DIR]
//
// Exit codes: 0 success, 2 configuration or usage error, 3 data error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <openssl/evp.h>

#include <CLI11.hpp>

#include "terrabench/commands.hpp"

namespace {

using namespace terrabench;

std::string sha256_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256 unavailable");
  }
  std::vector<char> buf(1 << 20);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char b[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(b, sizeof b, "%02x", md[i]);
    hex += b;
  }
  return hex;
}

// Manifest lines follow sha256sum: "<hex digest>  <relative path>".
void verify_manifest(const std::filesystem::path& manifest, std::filesystem::path root) {
  if (!std::filesystem::exists(manifest)) throw ConfigError("manifest " + manifest.string() + " does not exist");
  if (root.empty()) root = manifest.parent_path();
  std::istringstream lines(read_file(manifest));
  std::string line;
  std::size_t n = 0;
  std::size_t bad = 0;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto sep = line.find_first_of(" \t");
    if (sep != 64) throw ParseError(manifest.string(), line_no, "expected '<sha256>  <path>'");
    std::size_t start = line.find_first_not_of(" \t*", sep);
    if (start == std::string::npos) throw ParseError(manifest.string(), line_no, "missing path");
    const std::string want = line.substr(0, 64);
    const std::string rel = line.substr(start);
    ++n;
    const auto path = root / rel;
    if (!std::filesystem::exists(path)) {
      std::cerr << "missing " << rel << "\n";
      ++bad;
    } else if (sha256_hex(path) != want) {
      std::cerr << "mismatch " << rel << "\n";
      ++bad;
    }
  }
  std::cout << "files " << n << "\nfailed " << bad << "\n";
  if (bad > 0) throw DataError(std::to_string(bad) + " of " + std::to_string(n) + " files failed verification");
}

struct Overrides {
  std::string out;
  std::optional<std::size_t> jobs;
  std::optional<std::uint64_t> seed;
};

BenchConfig load_with(const std::string& path, const Overrides& o) {
  BenchConfig c = load_config(path);
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.seed) {
    c.seed = *o.seed;
    c.tune.seed = *o.seed;
  }
  return c;
}

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--out", o.out, "Output directory (overrides output.dir)");
  cmd->add_option("--jobs", o.jobs, "Concurrent runs; 0 uses every core");
  cmd->add_option("--seed", o.seed, "Base seed (overrides seed)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Terrain benchmark for black-box optimizers"};
  app.require_subcommand(1);

  SyntheticSpec synth;
  std::size_t tiles_x = 2;
  std::size_t tiles_y = 1;
  std::string synth_out;
  auto* c_synth = app.add_subcommand("synth", "Write a synthetic terrain as ASC tiles");
  c_synth->add_option("--out", synth_out, "Directory for the tiles")->required();
  c_synth->add_option("--seed", synth.seed, "Terrain seed");
  c_synth->add_option("--nrows", synth.nrows, "Rows");
  c_synth->add_option("--ncols", synth.ncols, "Columns");
  c_synth->add_option("--ruggedness", synth.ruggedness, "Ruggedness in [0, 1]");
  c_synth->add_option("--cell-size", synth.cell_size, "Cell size in meters");
  c_synth->add_option("--tiles-x", tiles_x, "Tiles across");
  c_synth->add_option("--tiles-y", tiles_y, "Tiles down");

  std::string asc_dir;
  std::string patch;
  std::string cache_out;
  auto* c_pre = app.add_subcommand("preprocess", "Assemble ASC tiles into a cache");
  c_pre->add_option("--asc-dir", asc_dir, "Directory of .asc tiles")->required();
  c_pre->add_option("--patch", patch, "Patch file of manual corrections");
  c_pre->add_option("--out", cache_out, "Cache file to write")->required();

  std::string cache_in;
  std::string config_path;
  std::string optima_out;
  bool gate = false;
  auto* c_opt = app.add_subcommand("optima", "Find local optima, basins and band statistics");
  auto* o_cache = c_opt->add_option("--cache", cache_in, "Preprocessed cache");
  c_opt->add_option("--config", config_path, "Config file (data and bands)")->excludes(o_cache);
  c_opt->add_option("--out", optima_out, "Output directory")->required();
  c_opt->add_flag("--gate-full-dataset", gate, "Compare against the full-dataset reference figures");

  Overrides run_o;
  auto* c_run = app.add_subcommand("run", "Run an optimizer instance");
  c_run->add_option("--config", config_path, "Config file")->required();
  add_overrides(c_run, run_o);

  Overrides tune_o;
  bool resume = false;
  auto* c_tune = app.add_subcommand("tune", "Tune hyperparameters by GERT");
  c_tune->add_option("--config", config_path, "Config file")->required();
  c_tune->add_flag("--resume", resume, "Continue an existing study log");
  add_overrides(c_tune, tune_o);

  std::string results_dir;
  std::string report_out;
  auto* c_rep = app.add_subcommand("report", "Write plot CSVs and SVGs for a run directory");
  c_rep->add_option("--results", results_dir, "Directory written by run")->required();
  c_rep->add_option("--out", report_out, "Output directory")->required();

  std::string manifest;
  std::string root;
  auto* c_ver = app.add_subcommand("verify", "Check dataset files against a sha256 manifest");
  c_ver->add_option("--manifest", manifest, "Manifest file")->required();
  c_ver->add_option("--root", root, "Directory the manifest paths are relative to");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  return guarded(
      [&] {
        if (*c_synth) {
          cmd_synth(synth, tiles_x, tiles_y, synth_out, std::cout);
        } else if (*c_pre) {
          cmd_preprocess(asc_dir, patch, cache_out, std::cout);
        } else if (*c_opt) {
          ScoreSchedule bands = default_schedule();
          ElevationGrid grid;
          if (!config_path.empty()) {
            const BenchConfig c = load_config(config_path);
            bands = c.bands;
            grid = load_grid(c.data);
          } else {
            if (cache_in.empty()) {
              if (const char* env = std::getenv(kCacheEnvVar); env && *env) cache_in = env;
            }
            if (cache_in.empty()) throw ConfigError("optima needs --cache, --config or " + std::string(kCacheEnvVar));
            if (!std::filesystem::exists(cache_in)) throw ConfigError("cache file " + cache_in + " does not exist");
            grid = read_cache(cache_in);
          }
          cmd_optima(grid, bands, optima_out, gate, std::cout);
        } else if (*c_run) {
          const BenchConfig c = load_with(config_path, run_o);
          cmd_run(c, read_file(config_path), c.output_dir, std::cout);
        } else if (*c_tune) {
          const BenchConfig c = load_with(config_path, tune_o);
          cmd_tune(c, c.output_dir, resume, std::cout);
        } else if (*c_rep) {
          cmd_report(results_dir, report_out, std::cout);
        } else if (*c_ver) {
          verify_manifest(manifest, root);
        }
      },
      std::cerr);
}
