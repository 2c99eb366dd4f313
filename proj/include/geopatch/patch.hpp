#pragma once

#include <cstdint>
#include <vector>

#include "geopatch/geo_core.hpp"
#include "geopatch/projection.hpp"
#include "geopatch/sample_type.hpp"

namespace geopatch {

/// A georeferenced C x H x W scene tensor with a per-pixel validity mask.
/// Samples are band-major; invalid cells hold `fill` in every band.
struct Patch {
  int bands = 1;
  GridShape shape;
  std::vector<float> samples;
  std::vector<std::uint8_t> valid;
  BoundingBox bbox;
  CrsDef crs;
  Resolution res;
  float fill = 0.0f;
  /// Sample type of the data this patch was converted from.
  SampleType sample_type = SampleType::F32;

  /// All-invalid patch sized by grid_shape(bbox, res).
  static Patch empty(int bands, const BoundingBox& bbox, const CrsDef& crs, const Resolution& res,
                     float fill = 0.0f);

  std::int64_t rows() const noexcept { return shape.rows; }
  std::int64_t cols() const noexcept { return shape.cols; }
  std::size_t plane_size() const noexcept { return static_cast<std::size_t>(shape.size()); }

  GeoTransform transform() const noexcept { return GeoTransform::from_bounds(bbox, res); }

  float& at(int band, std::int64_t row, std::int64_t col) noexcept {
    return samples[static_cast<std::size_t>(band) * plane_size() +
                   static_cast<std::size_t>(row * shape.cols + col)];
  }
  float at(int band, std::int64_t row, std::int64_t col) const noexcept {
    return samples[static_cast<std::size_t>(band) * plane_size() +
                   static_cast<std::size_t>(row * shape.cols + col)];
  }
  bool is_valid(std::int64_t row, std::int64_t col) const noexcept {
    return valid[static_cast<std::size_t>(row * shape.cols + col)] != 0;
  }
  std::size_t valid_count() const noexcept;
};

}  // namespace geopatch
