#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "geopatch/spatial_index.hpp"
#include "oracles.hpp"

using namespace geopatch;

using geopatch::test::linear_scan;
using geopatch::test::random_query_box;

TEST(SpatialIndexTest, WholeBoundsAndDisjointQueries) {
  std::vector<BoundingBox> boxes;
  for (int i = 0; i < 12; ++i) {
    const double x = (i % 4) * 90.0, y = (i / 4) * 90.0;
    boxes.push_back(BoundingBox::from_xy(x, y, x + 100, y + 100));
  }
  const SpatialIndex ix(boxes);
  EXPECT_EQ(ix.size(), 12u);
  EXPECT_EQ(ix.query(BoundingBox::from_xy(0, 0, 370, 280)).size(), 12u);
  EXPECT_TRUE(ix.query(BoundingBox::from_xy(1000, 1000, 1100, 1100)).empty());
  // abutting the far edge of the grid does not intersect
  EXPECT_TRUE(ix.query(BoundingBox::from_xy(370, 0, 400, 10)).empty());
}

TEST(SpatialIndexTest, EmptyIndex) {
  const SpatialIndex ix;
  EXPECT_EQ(ix.size(), 0u);
  EXPECT_TRUE(ix.query(BoundingBox::from_xy(0, 0, 1, 1)).empty());
}

TEST(SpatialIndexTest, MatchesLinearScan) {
  std::mt19937_64 rng(1);
  std::vector<BoundingBox> boxes;
  for (int i = 0; i < 200; ++i) boxes.push_back(random_query_box(rng, 1000, 150, false));
  const SpatialIndex ix(boxes);
  for (int q = 0; q < 1000; ++q) {
    const BoundingBox query = random_query_box(rng, 1000, 200, false);
    ASSERT_EQ(ix.query(query), linear_scan(boxes, query));
  }
}

TEST(SpatialIndexTest, MatchesLinearScanWithTimeAndSharedEdges) {
  std::mt19937_64 rng(2);
  std::vector<BoundingBox> boxes;
  // integer-aligned boxes produce many exactly abutting pairs
  for (int i = 0; i < 300; ++i) {
    const double x = static_cast<double>(rng() % 20), y = static_cast<double>(rng() % 20);
    const double t = static_cast<double>(rng() % 10);
    boxes.push_back(BoundingBox::from_xy(x, y, x + 1 + rng() % 4, y + 1 + rng() % 4, t,
                                         t + static_cast<double>(rng() % 3)));
  }
  boxes.push_back(BoundingBox::from_xy(5, 5, 6, 6));  // unbounded time
  const SpatialIndex ix(boxes);
  for (int q = 0; q < 1000; ++q) {
    const double x = static_cast<double>(rng() % 22), y = static_cast<double>(rng() % 22);
    const double t = static_cast<double>(rng() % 12);
    const BoundingBox query =
        q % 5 == 0 ? BoundingBox::from_xy(x, y, x + 1 + rng() % 3, y + 1 + rng() % 3)
                   : BoundingBox::from_xy(x, y, x + 1 + rng() % 3, y + 1 + rng() % 3, t,
                                          t + static_cast<double>(rng() % 3));
    ASSERT_EQ(ix.query(query), linear_scan(boxes, query)) << query.to_string();
  }
}
