#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geopatch/geo_core.hpp"
#include "geopatch/kernels.hpp"
#include "geopatch/patch.hpp"
#include "geopatch/projection.hpp"

namespace geopatch {

/// Closed ring: at least 4 points, first == last.
struct Ring {
  std::vector<WorldPoint> points;
};

/// rings[0] is the exterior, the rest are holes.
struct Polygon {
  std::vector<Ring> rings;
  std::int64_t burn_value = 1;
};

struct PolygonSet {
  std::vector<Polygon> polygons;
  CrsDef crs = CrsDef::from_epsg(4326);

  bool empty() const noexcept { return polygons.empty(); }
  /// Hull of all vertices; throws InvalidArgument on an empty set.
  BoundingBox bounds() const;
};

struct VectorParseOptions {
  /// Integer feature property used as the burn value.
  std::string burn_property = "class";
  /// Used when a feature lacks the property; nullopt makes it mandatory.
  std::optional<std::int64_t> default_burn = 1;
  /// CRS assumed when the document names none.
  CrsDef crs = CrsDef::from_epsg(4326);
};

/// GeoJSON subset: a FeatureCollection, a single Feature, or a bare
/// Polygon/MultiPolygon geometry. An optional top-level "crs" member of the
/// form {"type": "name", "properties": {"name": "EPSG:nnnn"}} overrides
/// options.crs.
/// Errors: ParseError (malformed document or ring), UnsupportedGeometry.
PolygonSet parse_polygons(std::string_view text, const VectorParseOptions& options = {});
PolygonSet load_polygons(const std::filesystem::path& path, const VectorParseOptions& options = {});

/// Throws ParseError when the ring is not closed, has fewer than 4 points or
/// has two non-adjacent edges that touch.
void validate_ring(const Ring& ring, bool check_simple);

/// Burns polygons onto the grid (b, r) in polygon order. A pixel is burned
/// when its center is inside under the even-odd rule or lies exactly on an
/// edge. Background is 0 and every pixel is valid.
Patch rasterize(const PolygonSet& polys, const BoundingBox& b, const Resolution& r,
                ExecPolicy policy = ExecPolicy::Parallel);

/// Exact sign of (b - a) x (p - a): +1 when p is left of a->b, 0 when collinear.
int orient_sign(const WorldPoint& a, const WorldPoint& b, const WorldPoint& p);

}  // namespace geopatch
