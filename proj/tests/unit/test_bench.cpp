#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "geopatch/bench.hpp"
#include "geopatch/dataset.hpp"
#include "geopatch/error.hpp"
#include "geopatch/synth.hpp"
#include "test_util.hpp"

using namespace geopatch;
using geopatch::test::TempDir;

namespace {

DeskFixture small_fixture(const std::filesystem::path& root) {
  DeskFixtureSpec spec;
  spec.grid_cols = 2;
  spec.grid_rows = 1;
  spec.zones = {15};
  spec.scene_px = 160;
  spec.tile_size = 32;
  return make_desk_fixture(root, spec);
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST(BenchConfigTest, LoadsListsAndDefaults) {
  TempDir dir("bench");
  write_file(dir / "b.ini", R"(
[bench]
dataset = data/intersection.ini
samplers = grid, random
batch_sizes = 2, 8
epoch_size = 64
modes = warped, preprocessed
seeds = 3, 4
workers = 2
)");
  const BenchConfig b = BenchConfig::load(dir / "b.ini");
  EXPECT_EQ(b.dataset_config, dir / "data/intersection.ini");
  EXPECT_EQ(b.samplers, (std::vector<SamplerKind>{SamplerKind::Grid, SamplerKind::Random}));
  EXPECT_EQ(b.batch_sizes, (std::vector<std::int64_t>{2, 8}));
  EXPECT_EQ(b.epoch_size, 64);
  EXPECT_EQ(b.modes.size(), 2u);
  EXPECT_EQ(b.seeds, (std::vector<std::uint64_t>{3, 4}));
  EXPECT_EQ(b.workers, 2);
  EXPECT_EQ(b.patch_px, 224.0);
  EXPECT_EQ(b.preprocessed_dir, dir / "data/preprocessed");
  EXPECT_EQ(b.extent_mode, ExtentMode::SceneFootprints);
}

TEST(BenchConfigTest, EnvOverridesCacheBytes) {
  TempDir dir("bench");
  write_file(dir / "b.ini", "[bench]\ndataset = d.ini\ncache_bytes = 1000\n");
  ::unsetenv("GEOPATCH_CACHE_BYTES");
  EXPECT_EQ(BenchConfig::load(dir / "b.ini").cache_bytes, 1000u);
  ::setenv("GEOPATCH_CACHE_BYTES", "4096", 1);
  EXPECT_EQ(BenchConfig::load(dir / "b.ini").cache_bytes, 4096u);
  ::unsetenv("GEOPATCH_CACHE_BYTES");
}

TEST(BenchConfigTest, RejectsInvalidSettings) {
  TempDir dir("bench");
  write_file(dir / "b.ini", "[bench]\ndataset = d.ini\nbatch_sizes = 0\n");
  EXPECT_THROW(BenchConfig::load(dir / "b.ini"), Error);
  write_file(dir / "c.ini", "[bench]\nsamplers = random\n");
  EXPECT_THROW(BenchConfig::load(dir / "c.ini"), Error);
  EXPECT_THROW(parse_bench_mode("cached"), Error);
}

TEST(BenchReportTest, CsvLayout) {
  BenchReport r;
  BenchRow row;
  row.sampler = SamplerKind::RandomBatch;
  row.batch_size = 16;
  row.mode = BenchMode::Preprocessed;
  row.epoch_size = 256;
  row.patches_per_sec = 128;
  row.wall_s = 2;
  r.rows.push_back(row);
  std::ostringstream out;
  r.write_csv(out);
  std::istringstream in(out.str());
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  EXPECT_EQ(header, BenchReport::kCsvHeader);
  EXPECT_EQ(line, "random-batch,16,preprocessed,0,256,128,0,0,0,0,0,0,2");
}

TEST(EpochBatchesTest, ExactEpochLength) {
  SamplerInput in{{BoundingBox::from_xy(0, 0, 1000, 1000)}, BoundingBox::from_xy(0, 0, 1000, 1000),
                  Resolution(1.0)};
  SamplerConfig c;
  c.patch_width = c.patch_height = 100;
  c.stride_x = c.stride_y = 100;
  c.batch_size = 7;
  for (auto kind : {SamplerKind::Random, SamplerKind::RandomBatch, SamplerKind::Grid}) {
    const auto batches = epoch_batches(kind, in, c, 250);
    std::size_t total = 0;
    for (const auto& b : batches) {
      ASSERT_LE(b.size(), 7u);
      total += b.size();
    }
    EXPECT_EQ(total, 250u) << to_string(kind);
    EXPECT_EQ(batches.size(), 36u) << to_string(kind);
  }
  // grid of 100 boxes cycles
  const auto grid = epoch_batches(SamplerKind::Grid, in, c, 250);
  EXPECT_EQ(grid[0][0], grid[14][2]);
}

TEST(RunBenchmarkTest, RowsCountersAndDeterminism) {
  TempDir dir("bench");
  const DeskFixture f = small_fixture(dir / "data");
  write_file(dir / "b.ini", "[bench]\ndataset = " + f.intersection_config.string() + R"(
samplers = random, random-batch, grid
batch_sizes = 1, 4
epoch_size = 32
patch_px = 32
stride_px = 16
workers = 2
seeds = 5
modes = warped, preprocessed
cache_bytes = 67108864
)");
  const BenchConfig cfg = BenchConfig::load(dir / "b.ini");
  int seen = 0;
  const BenchReport a = run_benchmark(cfg, [&](const BenchRow&) { ++seen; });
  ASSERT_EQ(a.rows.size(), 2u * 3u * 2u);
  EXPECT_EQ(seen, 12);
  for (const auto& r : a.rows) {
    EXPECT_GT(r.wall_s, 0.0);
    EXPECT_NEAR(r.patches_per_sec, r.epoch_size / r.wall_s, 1e-9 * r.patches_per_sec);
    EXPECT_GT(r.cache_hits + r.cache_misses, 0u);
    EXPECT_LE(r.min_rate, r.patches_per_sec);
    EXPECT_GE(r.max_rate, r.patches_per_sec);
  }
  const BenchReport b = run_benchmark(cfg);
  ASSERT_EQ(b.rows.size(), a.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].sequence_hash, b.rows[i].sequence_hash);
  }
  // warped and preprocessed draw the same boxes
  EXPECT_EQ(a.rows[0].sequence_hash, a.rows[6].sequence_hash);
}

TEST(RunBenchmarkTest, GridSecondEpochHitsCache) {
  TempDir dir("bench");
  const DeskFixture f = small_fixture(dir / "data");
  BenchConfig cfg;
  cfg.dataset_config = f.intersection_config;
  cfg.samplers = {SamplerKind::Grid};
  cfg.batch_sizes = {8};
  cfg.patch_px = 32;
  cfg.stride_px = 32;
  cfg.workers = 1;
  cfg.cache_bytes = std::size_t{256} << 20;
  const auto dataset = open_dataset(cfg.dataset_config, std::make_shared<BlockCache>(cfg.cache_bytes));
  SamplerConfig sc;
  sc.patch_width = sc.patch_height = 32;
  sc.stride_x = sc.stride_y = 32;
  cfg.epoch_size = static_cast<std::int64_t>(grid_sampler(SamplerInput::from(*dataset), sc).size());
  const BenchReport r = run_benchmark(cfg);
  ASSERT_EQ(r.rows.size(), 1u);
  const auto& row = r.rows[0];
  const double hit_rate =
      static_cast<double>(row.cache_hits) / static_cast<double>(row.cache_hits + row.cache_misses);
  EXPECT_GT(hit_rate, 0.9);
}
