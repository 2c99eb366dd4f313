#include "geopatch/block_cache.hpp"

#include <cstdlib>
#include <string>

#include "geopatch/error.hpp"
#include "geopatch/raster_io.hpp"

namespace geopatch {

std::size_t BlockKeyHash::operator()(const BlockKey& k) const noexcept {
  std::uint64_t h = k.file_id * 0x9E3779B97F4A7C15ull;
  h ^= static_cast<std::uint64_t>(k.band) + 0x632BE59BD9B4E019ull + (h << 6) + (h >> 2);
  h ^= static_cast<std::uint64_t>(k.block_row) * 0xC2B2AE3D27D4EB4Full + (h << 6) + (h >> 2);
  h ^= static_cast<std::uint64_t>(k.block_col) * 0x165667B19E3779F9ull + (h << 6) + (h >> 2);
  return static_cast<std::size_t>(h);
}

BlockCache::BlockCache(std::size_t capacity_bytes) : capacity_(capacity_bytes) {}

std::size_t BlockCache::capacity_from_env(std::size_t fallback) {
  const char* env = std::getenv("GEOPATCH_CACHE_BYTES");
  if (env == nullptr || *env == '\0') {
    return fallback;
  }
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') {
    throw Error(ErrorCode::InvalidArgument,
                std::string("GEOPATCH_CACHE_BYTES is not an integer: ") + env);
  }
  return static_cast<std::size_t>(v);
}

BlockCache::BlockPtr BlockCache::get_or_load(const BlockKey& key, const Loader& loader) {
  {
    std::lock_guard lock(mu_);
    if (auto it = index_.find(key); it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      ++stats_.hits;
      return it->second->block;
    }
    ++stats_.misses;
  }
  BlockPtr block = loader();
  const std::size_t bytes = block->byte_size();
  std::lock_guard lock(mu_);
  stats_.bytes_decoded += bytes;
  if (auto it = index_.find(key); it != index_.end()) {
    lru_.splice(lru_.begin(), lru_, it->second);
    return it->second->block;
  }
  if (bytes > capacity_) {
    return block;
  }
  lru_.push_front(Entry{key, block, bytes});
  index_.emplace(key, lru_.begin());
  resident_ += bytes;
  evict_until_fits_locked();
  return block;
}

void BlockCache::evict_until_fits_locked() {
  while (resident_ > capacity_ && !lru_.empty()) {
    const Entry& victim = lru_.back();
    resident_ -= victim.bytes;
    index_.erase(victim.key);
    lru_.pop_back();
    ++stats_.evictions;
  }
}

std::size_t BlockCache::resident_bytes() const {
  std::lock_guard lock(mu_);
  return resident_;
}

std::size_t BlockCache::size() const {
  std::lock_guard lock(mu_);
  return lru_.size();
}

bool BlockCache::contains(const BlockKey& key) const {
  std::lock_guard lock(mu_);
  return index_.contains(key);
}

std::vector<BlockKey> BlockCache::keys_mru() const {
  std::lock_guard lock(mu_);
  std::vector<BlockKey> out;
  out.reserve(lru_.size());
  for (const auto& e : lru_) {
    out.push_back(e.key);
  }
  return out;
}

CacheStats BlockCache::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

void BlockCache::reset_stats() {
  std::lock_guard lock(mu_);
  stats_ = {};
}

void BlockCache::clear() {
  std::lock_guard lock(mu_);
  lru_.clear();
  index_.clear();
  resident_ = 0;
}

}  // namespace geopatch
