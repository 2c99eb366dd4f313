#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "geopatch/block_cache.hpp"
#include "geopatch/sampler.hpp"

namespace geopatch {

enum class BenchMode { Warped, Preprocessed };

BenchMode parse_bench_mode(std::string_view text);
std::string_view to_string(BenchMode m) noexcept;

/// Loaded from the [bench] section of an INI file:
///
///   [bench]
///   dataset = fixture/intersection.ini
///   samplers = random, random-batch, grid
///   batch_sizes = 1, 4, 16, 64
///   epoch_size = 4096
///   patch_px = 224
///   stride_px = 112
///   workers = 6
///   cache_bytes = 134217728
///   modes = warped, preprocessed
///   seeds = 0, 1, 2
///   warmup_epochs = 1
///   timed_epochs = 1
///   preprocessed_dir = preprocessed
///   extent_mode = scene-footprints
struct BenchConfig {
  std::filesystem::path dataset_config;
  std::vector<SamplerKind> samplers = {SamplerKind::Random, SamplerKind::RandomBatch,
                                       SamplerKind::Grid};
  std::vector<std::int64_t> batch_sizes = {1, 2, 4, 8, 16, 32, 64};
  std::int64_t epoch_size = 4096;
  double patch_px = 224.0;
  double stride_px = 112.0;
  int workers = 6;
  std::size_t cache_bytes = kDefaultCacheBytes;
  std::vector<BenchMode> modes = {BenchMode::Warped};
  std::vector<std::uint64_t> seeds = {0};
  int warmup_epochs = 1;
  int timed_epochs = 1;
  /// Defaults to <dataset config dir>/preprocessed.
  std::filesystem::path preprocessed_dir;
  /// Reuse an existing preprocessed dataset instead of regenerating it.
  bool reuse_preprocessed = true;
  ExtentMode extent_mode = ExtentMode::SceneFootprints;
  /// Synth config used to generate the dataset directory when
  /// `dataset_config` does not exist yet.
  std::filesystem::path fixture_spec;

  /// Applies the GEOPATCH_CACHE_BYTES override after reading the file.
  static BenchConfig load(const std::filesystem::path& path);
  void validate() const;
};

struct BenchRow {
  SamplerKind sampler = SamplerKind::Random;
  std::int64_t batch_size = 1;
  BenchMode mode = BenchMode::Warped;
  std::uint64_t seed = 0;
  std::int64_t epoch_size = 0;
  /// epoch_size / wall_s.
  double patches_per_sec = 0.0;
  /// Extremes over the timed epochs.
  double min_rate = 0.0;
  double max_rate = 0.0;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;
  std::uint64_t evictions = 0;
  std::uint64_t bytes_decoded = 0;
  /// Mean wall time of one timed epoch.
  double wall_s = 0.0;
  /// Hash of the boxes served in the timed epochs.
  std::uint64_t sequence_hash = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;

  static constexpr std::string_view kCsvHeader =
      "sampler,batch_size,mode,seed,epoch_size,patches_per_sec,min_rate,max_rate,cache_hits,"
      "cache_misses,evictions,bytes_decoded,wall_s";
  static void write_csv_row(std::ostream& out, const BenchRow& row);
  void write_csv(std::ostream& out) const;
  void write_csv(const std::filesystem::path& path) const;
};

struct EpochStats {
  std::int64_t patches = 0;
  double wall_s = 0.0;
  std::uint64_t sequence_hash = 0;
};

class GeoDataset;

/// Serves `batches` with `workers` threads draining a bounded queue; each
/// worker queries every box of its batch and stacks the patches.
EpochStats run_epoch(const GeoDataset& dataset,
                     const std::vector<std::vector<BoundingBox>>& batches, int workers);

/// Box sequence of one epoch: batches holding exactly `epoch_size` boxes
/// (grid sequences are cycled or truncated to that length).
std::vector<std::vector<BoundingBox>> epoch_batches(SamplerKind kind, const SamplerInput& in,
                                                    const SamplerConfig& cfg,
                                                    std::int64_t epoch_size);

/// Runs every (mode, sampler, batch size, seed) cell; `on_row` sees each row
/// as soon as it is measured.
BenchReport run_benchmark(const BenchConfig& cfg,
                          const std::function<void(const BenchRow&)>& on_row = {});

}  // namespace geopatch
