#include "geopatch/patch.hpp"

#include <algorithm>

namespace geopatch {

Patch Patch::empty(int bands, const BoundingBox& bbox, const CrsDef& crs, const Resolution& res,
                   float fill) {
  Patch p;
  p.bands = bands;
  p.shape = grid_shape(bbox, res);
  p.bbox = bbox;
  p.crs = crs;
  p.res = res;
  p.fill = fill;
  p.samples.assign(static_cast<std::size_t>(bands) * p.plane_size(), fill);
  p.valid.assign(p.plane_size(), 0);
  return p;
}

std::size_t Patch::valid_count() const noexcept {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

}  // namespace geopatch
