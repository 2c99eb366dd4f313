#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

namespace geopatch {

struct Block;

struct BlockKey {
  std::uint64_t file_id = 0;
  int band = 0;
  std::int64_t block_row = 0;
  std::int64_t block_col = 0;

  bool operator==(const BlockKey&) const = default;
};

struct BlockKeyHash {
  std::size_t operator()(const BlockKey& k) const noexcept;
};

struct CacheStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t evictions = 0;
  std::uint64_t bytes_decoded = 0;

  std::uint64_t accesses() const noexcept { return hits + misses; }
  double hit_rate() const noexcept {
    return accesses() == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(accesses());
  }
};

inline constexpr std::size_t kDefaultCacheBytes = std::size_t{128} << 20;

/// Thread-safe LRU cache of decoded raster blocks, bounded by resident bytes.
/// Loads run outside the lock, so two workers missing on the same key may
/// both decode it; both count as misses and the first insert wins.
class BlockCache {
 public:
  using BlockPtr = std::shared_ptr<const Block>;
  using Loader = std::function<BlockPtr()>;

  explicit BlockCache(std::size_t capacity_bytes = kDefaultCacheBytes);

  /// Capacity from GEOPATCH_CACHE_BYTES when set, otherwise `fallback`.
  static std::size_t capacity_from_env(std::size_t fallback = kDefaultCacheBytes);

  BlockPtr get_or_load(const BlockKey& key, const Loader& loader);

  std::size_t capacity_bytes() const noexcept { return capacity_; }
  std::size_t resident_bytes() const;
  std::size_t size() const;
  bool contains(const BlockKey& key) const;
  /// Resident keys from most to least recently used.
  std::vector<BlockKey> keys_mru() const;

  CacheStats stats() const;
  void reset_stats();
  void clear();

 private:
  struct Entry {
    BlockKey key;
    BlockPtr block;
    std::size_t bytes;
  };

  void evict_until_fits_locked();

  std::size_t capacity_;
  mutable std::mutex mu_;
  std::list<Entry> lru_;  // front = most recent
  std::unordered_map<BlockKey, std::list<Entry>::iterator, BlockKeyHash> index_;
  std::size_t resident_ = 0;
  CacheStats stats_;
};

}  // namespace geopatch
