#include "geopatch/spatial_index.hpp"

#include <algorithm>
#include <utility>

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>

namespace geopatch {

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

using Point2 = bg::model::point<double, 2, bg::cs::cartesian>;
using Box2 = bg::model::box<Point2>;
using Value = std::pair<Box2, std::size_t>;

struct SpatialIndex::Tree {
  bgi::rtree<Value, bgi::rstar<16>> rtree;
};

namespace {

Box2 to_box(const BoundingBox& b) { return {{b.minx, b.miny}, {b.maxx, b.maxy}}; }

}  // namespace

SpatialIndex::SpatialIndex() : tree_(std::make_unique<Tree>()) {}

SpatialIndex::SpatialIndex(const std::vector<BoundingBox>& boxes)
    : boxes_(boxes), tree_(std::make_unique<Tree>()) {
  std::vector<Value> values;
  values.reserve(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    values.emplace_back(to_box(boxes[i]), i);
  }
  // The range constructor uses the packing algorithm.
  tree_->rtree = bgi::rtree<Value, bgi::rstar<16>>(values.begin(), values.end());
}

SpatialIndex::~SpatialIndex() = default;
SpatialIndex::SpatialIndex(SpatialIndex&&) noexcept = default;
SpatialIndex& SpatialIndex::operator=(SpatialIndex&&) noexcept = default;

std::vector<std::size_t> SpatialIndex::query(const BoundingBox& b) const {
  std::vector<Value> hits;
  // Boost treats boxes as closed; the exact closed-open test filters below.
  tree_->rtree.query(bgi::intersects(to_box(b)), std::back_inserter(hits));
  std::vector<std::size_t> ids;
  ids.reserve(hits.size());
  for (const auto& [box, id] : hits) {
    if (boxes_[id].intersects(b)) {
      ids.push_back(id);
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace geopatch
