#include "geopatch/geo_core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "geopatch/error.hpp"

namespace geopatch {

namespace {

// [lo, hi) intervals; zero-length intervals behave as points.
bool intervals_overlap(double alo, double ahi, double blo, double bhi) noexcept {
  const double lo = std::max(alo, blo);
  const double hi = std::min(ahi, bhi);
  if (lo > hi) {
    return false;
  }
  if (lo == hi) {
    return alo == ahi || blo == bhi;
  }
  return true;
}

}  // namespace

BoundingBox BoundingBox::from_xy(double xmin, double ymin, double xmax, double ymax, double tmin,
                                 double tmax) {
  BoundingBox b{xmin, xmax, ymin, ymax, tmin, tmax};
  if (!b.is_valid()) {
    throw Error(ErrorCode::InvalidArgument, "invalid bounding box " + b.to_string());
  }
  return b;
}

bool BoundingBox::is_valid() const noexcept {
  return minx <= maxx && miny <= maxy && mint <= maxt && std::isfinite(minx) &&
         std::isfinite(maxx) && std::isfinite(miny) && std::isfinite(maxy);
}

bool BoundingBox::intersects(const BoundingBox& o) const noexcept {
  return intervals_overlap(minx, maxx, o.minx, o.maxx) &&
         intervals_overlap(miny, maxy, o.miny, o.maxy) &&
         intervals_overlap(mint, maxt, o.mint, o.maxt);
}

bool BoundingBox::contains(const BoundingBox& o) const noexcept {
  return o.minx >= minx && o.maxx <= maxx && o.miny >= miny && o.maxy <= maxy &&
         o.mint >= mint && o.maxt <= maxt;
}

bool BoundingBox::contains_point(double x, double y) const noexcept {
  return x >= minx && x < maxx && y >= miny && y < maxy;
}

std::string BoundingBox::to_string() const {
  std::ostringstream os;
  os.precision(12);
  os << "(" << minx << ", " << miny << ", " << maxx << ", " << maxy << ")";
  if (std::isfinite(mint) || std::isfinite(maxt)) {
    os << " t[" << mint << ", " << maxt << "]";
  }
  return os.str();
}

Resolution::Resolution(double res) : Resolution(res, res) {}

Resolution::Resolution(double x, double y) : xres(x), yres(y) {
  if (!(x > 0.0) || !(y > 0.0) || !std::isfinite(x) || !std::isfinite(y)) {
    throw Error(ErrorCode::InvalidArgument, "resolution must be positive");
  }
}

GeoTransform GeoTransform::from_bounds(const BoundingBox& b, const Resolution& r) noexcept {
  return {b.minx, b.maxy, r.xres, -r.yres};
}

BoundingBox GeoTransform::bounds(const GridShape& shape) const noexcept {
  const double x0 = origin_x;
  const double x1 = origin_x + static_cast<double>(shape.cols) * dx;
  const double y0 = origin_y;
  const double y1 = origin_y + static_cast<double>(shape.rows) * dy;
  return {std::min(x0, x1), std::max(x0, x1), std::min(y0, y1), std::max(y0, y1)};
}

BoundingBox bbox_intersection(const BoundingBox& a, const BoundingBox& b) {
  if (!a.intersects(b)) {
    throw Error(ErrorCode::EmptyIntersection, a.to_string() + " and " + b.to_string());
  }
  return {std::max(a.minx, b.minx), std::min(a.maxx, b.maxx), std::max(a.miny, b.miny),
          std::min(a.maxy, b.maxy), std::max(a.mint, b.mint), std::min(a.maxt, b.maxt)};
}

BoundingBox bbox_union(const BoundingBox& a, const BoundingBox& b) noexcept {
  return {std::min(a.minx, b.minx), std::max(a.maxx, b.maxx), std::min(a.miny, b.miny),
          std::max(a.maxy, b.maxy), std::min(a.mint, b.mint), std::max(a.maxt, b.maxt)};
}

GridShape grid_shape(const BoundingBox& b, const Resolution& r) {
  if (!b.is_valid()) {
    throw Error(ErrorCode::InvalidArgument, "grid_shape of invalid box " + b.to_string());
  }
  // std::round rounds half away from zero.
  const auto cols = static_cast<std::int64_t>(std::round(b.width() / r.xres));
  const auto rows = static_cast<std::int64_t>(std::round(b.height() / r.yres));
  return {std::max<std::int64_t>(rows, 1), std::max<std::int64_t>(cols, 1)};
}

}  // namespace geopatch
