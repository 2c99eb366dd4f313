#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "geopatch/geo_core.hpp"

namespace geopatch {

/// Bulk-loaded R-tree over (box, id) entries. Queries return the ids of all
/// entries that intersect the query under closed-open semantics, including
/// the time interval, in ascending id order.
class SpatialIndex {
 public:
  SpatialIndex();
  explicit SpatialIndex(const std::vector<BoundingBox>& boxes);
  ~SpatialIndex();
  SpatialIndex(SpatialIndex&&) noexcept;
  SpatialIndex& operator=(SpatialIndex&&) noexcept;

  std::vector<std::size_t> query(const BoundingBox& b) const;
  std::size_t size() const noexcept { return boxes_.size(); }
  const BoundingBox& box(std::size_t id) const { return boxes_.at(id); }

 private:
  struct Tree;
  std::vector<BoundingBox> boxes_;
  std::unique_ptr<Tree> tree_;
};

}  // namespace geopatch
