#pragma once

#include <cstdint>
#include <limits>
#include <string>

namespace geopatch {

inline constexpr double kUnboundedTimeMin = -std::numeric_limits<double>::infinity();
inline constexpr double kUnboundedTimeMax = std::numeric_limits<double>::infinity();

/// Spatiotemporal extent. x/y are in the units of the associated CRS, t in
/// seconds since the epoch. Intervals are closed on the min edge and open on
/// the max edge, so boxes that merely abut share no area.
struct BoundingBox {
  double minx = 0.0;
  double maxx = 0.0;
  double miny = 0.0;
  double maxy = 0.0;
  double mint = kUnboundedTimeMin;
  double maxt = kUnboundedTimeMax;

  /// Builds a box from GDAL-style (xmin, ymin, xmax, ymax) ordering.
  /// Throws InvalidArgument when min > max on any axis.
  static BoundingBox from_xy(double xmin, double ymin, double xmax, double ymax,
                             double tmin = kUnboundedTimeMin, double tmax = kUnboundedTimeMax);

  double width() const noexcept { return maxx - minx; }
  double height() const noexcept { return maxy - miny; }
  double area() const noexcept { return width() * height(); }

  bool is_valid() const noexcept;
  /// Spatial + temporal overlap under closed-open semantics.
  bool intersects(const BoundingBox& other) const noexcept;
  /// True when `other` lies inside this box (inclusive of the max edge).
  bool contains(const BoundingBox& other) const noexcept;
  bool contains_point(double x, double y) const noexcept;

  bool operator==(const BoundingBox&) const = default;

  std::string to_string() const;
};

struct Resolution {
  double xres = 1.0;
  double yres = 1.0;

  Resolution() = default;
  explicit Resolution(double res);
  Resolution(double x, double y);

  bool operator==(const Resolution&) const = default;
};

struct GridShape {
  std::int64_t rows = 1;
  std::int64_t cols = 1;

  std::int64_t size() const noexcept { return rows * cols; }
  bool operator==(const GridShape&) const = default;
};

struct PixelCoord {
  double row = 0.0;
  double col = 0.0;
};

struct WorldPoint {
  double x = 0.0;
  double y = 0.0;
};

/// North-up affine georeferencing. The origin is the outer corner of pixel
/// (0, 0); the center of pixel (i, j) sits at fractional (i + 0.5, j + 0.5).
struct GeoTransform {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double dx = 1.0;
  double dy = -1.0;

  /// Grid whose outer corner is (b.minx, b.maxy) with pixel size r.
  static GeoTransform from_bounds(const BoundingBox& b, const Resolution& r) noexcept;

  PixelCoord world_to_pixel(double x, double y) const noexcept {
    return {(y - origin_y) / dy, (x - origin_x) / dx};
  }
  WorldPoint pixel_to_world(double row, double col) const noexcept {
    return {origin_x + col * dx, origin_y + row * dy};
  }

  Resolution resolution() const { return Resolution(dx < 0 ? -dx : dx, dy < 0 ? -dy : dy); }
  /// Spatial footprint of a grid of the given shape; time is unbounded.
  BoundingBox bounds(const GridShape& shape) const noexcept;

  bool operator==(const GeoTransform&) const = default;
};

/// Componentwise interval intersection. Throws EmptyIntersection when any
/// axis has no overlap (abutting intervals of positive length count as empty).
BoundingBox bbox_intersection(const BoundingBox& a, const BoundingBox& b);

/// Componentwise interval hull.
BoundingBox bbox_union(const BoundingBox& a, const BoundingBox& b) noexcept;

/// Pixel grid implied by bounds and resolution, rounding half away from zero,
/// each axis clamped to at least one pixel.
GridShape grid_shape(const BoundingBox& b, const Resolution& r);

}  // namespace geopatch
