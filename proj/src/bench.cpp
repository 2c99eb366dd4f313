#include "geopatch/bench.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>

#include "geopatch/config.hpp"
#include "geopatch/dataset.hpp"
#include "geopatch/error.hpp"
#include "geopatch/synth.hpp"

namespace geopatch {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kEpochSeedStep = 0x9E3779B97F4A7C15ULL;

template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(std::max<std::size_t>(capacity, 1)) {}

  void push(T item) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return items_.size() < capacity_ || closed_; });
    if (closed_) {
      return;
    }
    items_.push_back(std::move(item));
    not_empty_.notify_one();
  }

  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) {
      return std::nullopt;
    }
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

 private:
  std::size_t capacity_;
  std::deque<T> items_;
  bool closed_ = false;
  std::mutex mu_;
  std::condition_variable not_empty_;
  std::condition_variable not_full_;
};

// Stacks one sample per box into a B x C x H x W buffer per role.
void assemble(const std::vector<Sample>& samples, std::vector<std::vector<float>>& buffers) {
  const auto& first = samples.front().patches;
  buffers.resize(first.size());
  std::size_t k = 0;
  for (const auto& [role, patch] : first) {
    auto& buf = buffers[k++];
    buf.clear();
    buf.reserve(patch.samples.size() * samples.size());
    for (const Sample& s : samples) {
      const auto& p = s.patches.at(role).samples;
      buf.insert(buf.end(), p.begin(), p.end());
    }
  }
}

std::vector<std::vector<BoundingBox>> chunk(const std::vector<BoundingBox>& boxes,
                                            std::int64_t batch_size) {
  std::vector<std::vector<BoundingBox>> out;
  const auto bs = static_cast<std::size_t>(batch_size);
  for (std::size_t i = 0; i < boxes.size(); i += bs) {
    out.emplace_back(boxes.begin() + static_cast<std::ptrdiff_t>(i),
                     boxes.begin() + static_cast<std::ptrdiff_t>(std::min(i + bs, boxes.size())));
  }
  return out;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const Config& c, const std::string& key, std::vector<T> fallback,
                          Parse parse) {
  const auto items = c.get_list("bench", key);
  if (items.empty()) {
    return fallback;
  }
  std::vector<T> out;
  for (const auto& s : items) {
    out.push_back(parse(s));
  }
  return out;
}

}  // namespace

BenchMode parse_bench_mode(std::string_view text) {
  if (text == "warped") return BenchMode::Warped;
  if (text == "preprocessed") return BenchMode::Preprocessed;
  throw Error(ErrorCode::ParseError, "unknown bench mode '" + std::string(text) + "'");
}

std::string_view to_string(BenchMode m) noexcept {
  return m == BenchMode::Warped ? "warped" : "preprocessed";
}

BenchConfig BenchConfig::load(const fs::path& path) {
  const Config c = Config::load(path);
  BenchConfig b;
  b.dataset_config = c.resolve(c.require("bench", "dataset"));
  b.samplers = parse_list<SamplerKind>(c, "samplers", b.samplers,
                                       [](const std::string& s) { return parse_sampler_kind(s); });
  if (const auto v = c.get("bench", "batch_sizes")) {
    b.batch_sizes = parse_int_list(*v);
  }
  b.epoch_size = c.get_int("bench", "epoch_size", b.epoch_size);
  b.patch_px = c.get_double("bench", "patch_px", b.patch_px);
  b.stride_px = c.get_double("bench", "stride_px", b.stride_px);
  b.workers = static_cast<int>(c.get_int("bench", "workers", b.workers));
  b.cache_bytes = static_cast<std::size_t>(
      c.get_int("bench", "cache_bytes", static_cast<std::int64_t>(b.cache_bytes)));
  b.cache_bytes = BlockCache::capacity_from_env(b.cache_bytes);
  b.modes = parse_list<BenchMode>(c, "modes", b.modes,
                                  [](const std::string& s) { return parse_bench_mode(s); });
  if (const auto v = c.get("bench", "seeds")) {
    b.seeds.clear();
    for (const auto s : parse_int_list(*v)) {
      b.seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }
  b.warmup_epochs = static_cast<int>(c.get_int("bench", "warmup_epochs", b.warmup_epochs));
  b.timed_epochs = static_cast<int>(c.get_int("bench", "timed_epochs", b.timed_epochs));
  b.preprocessed_dir = c.has("bench", "preprocessed_dir")
                           ? c.resolve(c.require("bench", "preprocessed_dir"))
                           : b.dataset_config.parent_path() / "preprocessed";
  b.reuse_preprocessed = c.get_bool("bench", "reuse_preprocessed", b.reuse_preprocessed);
  b.extent_mode = parse_extent_mode(c.get_string("bench", "extent_mode", "scene-footprints"));
  if (const auto v = c.get("bench", "fixture")) {
    b.fixture_spec = c.resolve(*v);
  }
  b.validate();
  return b;
}

void BenchConfig::validate() const {
  if (samplers.empty() || batch_sizes.empty() || modes.empty() || seeds.empty()) {
    throw Error(ErrorCode::InvalidArgument, "bench lists must be non-empty");
  }
  for (const auto bs : batch_sizes) {
    if (bs < 1) throw Error(ErrorCode::InvalidArgument, "batch sizes must be positive");
  }
  if (epoch_size < 1 || workers < 1 || timed_epochs < 1 || warmup_epochs < 0) {
    throw Error(ErrorCode::InvalidArgument, "invalid bench epoch or worker settings");
  }
  if (!(patch_px > 0.0) || !(stride_px > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "patch and stride must be positive");
  }
}

void BenchReport::write_csv_row(std::ostream& out, const BenchRow& r) {
  out << to_string(r.sampler) << ',' << r.batch_size << ',' << to_string(r.mode) << ','
      << r.seed << ',' << r.epoch_size << ',' << std::setprecision(10) << r.patches_per_sec << ','
      << r.min_rate << ',' << r.max_rate << ',' << r.cache_hits << ',' << r.cache_misses << ','
      << r.evictions << ',' << r.bytes_decoded << ',' << r.wall_s << '\n';
}

void BenchReport::write_csv(std::ostream& out) const {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    write_csv_row(out, r);
  }
}

void BenchReport::write_csv(const fs::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write " + path.string());
  }
  write_csv(out);
}

EpochStats run_epoch(const GeoDataset& dataset,
                     const std::vector<std::vector<BoundingBox>>& batches, int workers) {
  BoundedQueue<const std::vector<BoundingBox>*> queue(static_cast<std::size_t>(2 * workers));
  std::mutex err_mu;
  std::exception_ptr error;
  std::int64_t served = 0;

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      std::vector<Sample> samples;
      std::vector<std::vector<float>> buffers;
      std::int64_t local = 0;
      while (auto batch = queue.pop()) {
        try {
          samples.clear();
          for (const auto& box : **batch) {
            samples.push_back(dataset.query(box));
          }
          assemble(samples, buffers);
          local += static_cast<std::int64_t>(samples.size());
        } catch (...) {
          std::lock_guard lock(err_mu);
          if (!error) error = std::current_exception();
          queue.close();
        }
      }
      std::lock_guard lock(err_mu);
      served += local;
    });
  }
  for (const auto& b : batches) {
    queue.push(&b);
  }
  queue.close();
  for (auto& t : pool) {
    t.join();
  }
  const auto t1 = std::chrono::steady_clock::now();
  if (error) {
    std::rethrow_exception(error);
  }
  return {served, std::chrono::duration<double>(t1 - t0).count(), sequence_hash(batches)};
}

std::vector<std::vector<BoundingBox>> epoch_batches(SamplerKind kind, const SamplerInput& in,
                                                    const SamplerConfig& cfg,
                                                    std::int64_t epoch_size) {
  SamplerConfig c = cfg;
  c.length = epoch_size;
  switch (kind) {
    case SamplerKind::Random:
      return chunk(random_sampler(in, c), c.batch_size);
    case SamplerKind::RandomBatch: {
      auto batches = random_batch_sampler(in, c);
      const std::int64_t excess = static_cast<std::int64_t>(batches.size()) * c.batch_size -
                                  epoch_size;
      if (excess > 0) {
        batches.back().resize(static_cast<std::size_t>(c.batch_size - excess));
      }
      return batches;
    }
    case SamplerKind::Grid: {
      const auto grid = grid_sampler(in, c);
      std::vector<BoundingBox> boxes;
      boxes.reserve(static_cast<std::size_t>(epoch_size));
      for (std::int64_t i = 0; i < epoch_size; ++i) {
        boxes.push_back(grid[static_cast<std::size_t>(i) % grid.size()]);
      }
      return chunk(boxes, c.batch_size);
    }
  }
  return {};
}

BenchReport run_benchmark(const BenchConfig& cfg,
                          const std::function<void(const BenchRow&)>& on_row) {
  cfg.validate();
  if (!fs::exists(cfg.dataset_config) && !cfg.fixture_spec.empty()) {
    synth_from_config(Config::load(cfg.fixture_spec), cfg.dataset_config.parent_path());
  }
  auto cache = std::make_shared<BlockCache>(cfg.cache_bytes);
  const DatasetPtr warped = open_dataset(cfg.dataset_config, cache);
  warped->set_exec_policy(ExecPolicy::Serial);
  // Both modes draw the same boxes.
  const SamplerInput input = SamplerInput::from(*warped);

  BenchReport report;
  for (const BenchMode mode : cfg.modes) {
    DatasetPtr dataset = warped;
    if (mode == BenchMode::Preprocessed) {
      const fs::path pre = cfg.preprocessed_dir / "dataset.ini";
      const fs::path ready = pre.parent_path() / ".complete";
      if (!cfg.reuse_preprocessed || !fs::exists(ready)) {
        fs::remove(ready);
        preprocess_dataset(cfg.dataset_config, cfg.preprocessed_dir);
        std::ofstream(ready) << "ok\n";
      }
      dataset = open_dataset(pre, cache);
      dataset->set_exec_policy(ExecPolicy::Serial);
    }
    for (const SamplerKind sampler : cfg.samplers) {
      for (const std::int64_t bs : cfg.batch_sizes) {
        for (const std::uint64_t seed : cfg.seeds) {
          SamplerConfig sc;
          sc.patch_width = sc.patch_height = cfg.patch_px;
          sc.stride_x = sc.stride_y = cfg.stride_px;
          sc.unit = PatchUnit::Pixels;
          sc.batch_size = bs;
          sc.extent_mode = cfg.extent_mode;

          cache->clear();
          cache->reset_stats();
          std::uint64_t epoch = 0;
          for (int w = 0; w < cfg.warmup_epochs; ++w, ++epoch) {
            sc.seed = seed + epoch * kEpochSeedStep;
            run_epoch(*dataset, epoch_batches(sampler, input, sc, cfg.epoch_size), cfg.workers);
          }
          cache->reset_stats();

          BenchRow row;
          row.sampler = sampler;
          row.batch_size = bs;
          row.mode = mode;
          row.seed = seed;
          row.epoch_size = cfg.epoch_size;
          row.min_rate = std::numeric_limits<double>::infinity();
          double wall = 0.0;
          std::vector<std::vector<BoundingBox>> served;
          for (int e = 0; e < cfg.timed_epochs; ++e, ++epoch) {
            sc.seed = seed + epoch * kEpochSeedStep;
            auto batches = epoch_batches(sampler, input, sc, cfg.epoch_size);
            const EpochStats st = run_epoch(*dataset, batches, cfg.workers);
            const double rate = static_cast<double>(st.patches) / st.wall_s;
            row.min_rate = std::min(row.min_rate, rate);
            row.max_rate = std::max(row.max_rate, rate);
            wall += st.wall_s;
            for (auto& b : batches) served.push_back(std::move(b));
          }
          row.wall_s = wall / cfg.timed_epochs;
          row.patches_per_sec = static_cast<double>(cfg.epoch_size) / row.wall_s;
          row.min_rate = std::min(row.min_rate, row.patches_per_sec);
          row.max_rate = std::max(row.max_rate, row.patches_per_sec);
          const CacheStats stats = cache->stats();
          row.cache_hits = stats.hits;
          row.cache_misses = stats.misses;
          row.evictions = stats.evictions;
          row.bytes_decoded = stats.bytes_decoded;
          row.sequence_hash = sequence_hash(served);
          report.rows.push_back(row);
          if (on_row) {
            on_row(row);
          }
        }
      }
    }
  }
  return report;
}

}  // namespace geopatch
