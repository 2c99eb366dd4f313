#pragma once

#include <filesystem>
#include <optional>
#include <string_view>

#include "geopatch/block_cache.hpp"
#include "geopatch/kernels.hpp"
#include "geopatch/patch.hpp"
#include "geopatch/raster_io.hpp"

namespace geopatch {

enum class ResampleMethod { Nearest, Bilinear };

ResampleMethod parse_resample_method(std::string_view text);
std::string_view to_string(ResampleMethod m) noexcept;

/// Reads the scene pixels covering `window` (scene CRS) at native resolution.
/// The window is snapped outward to the scene grid and then grown by
/// `pad_pixels` on every side. Cells outside the scene, or whose bands all
/// equal the scene nodata value, are invalid. A window that misses the scene
/// returns an all-invalid patch.
Patch read_window(const SceneMetadata& scene, const BoundingBox& window, BlockCache& cache,
                  int pad_pixels = 0, float fill = 0.0f);

struct ResampleOptions {
  ResampleMethod method = ResampleMethod::Nearest;
  float fill = 0.0f;
  /// Row-wise linear interpolation of the coordinate transform is accepted
  /// while its error stays below this many source pixels; 0 = exact.
  double max_error_px = 0.125;
  ExecPolicy policy = ExecPolicy::Parallel;
};

/// Inverse-mapped resampling of `src` onto the grid (dst_crs, dst_bbox,
/// dst_res). Destination pixels whose center cannot be transformed into the
/// source CRS are invalid.
Patch resample(const Patch& src, const CrsDef& dst_crs, const BoundingBox& dst_bbox,
               const Resolution& dst_res, const ResampleOptions& options = {});

namespace kernels {

/// Straightforward serial resampler: one exact coordinate transform per
/// destination pixel. Kept as the oracle for `resample`.
Patch resample_reference(const Patch& src, const CrsDef& dst_crs, const BoundingBox& dst_bbox,
                         const Resolution& dst_res, ResampleMethod method, float fill = 0.0f);

}  // namespace kernels

/// Source window (in the scene CRS) needed to resample onto `dst_bbox`.
BoundingBox source_window(const CrsDef& scene_crs, const CrsDef& dst_crs,
                          const BoundingBox& dst_bbox);

/// read_window + resample for one scene.
Patch warp_scene(const SceneMetadata& scene, const CrsDef& dst_crs, const BoundingBox& dst_bbox,
                 const Resolution& dst_res, BlockCache& cache, const ResampleOptions& options = {});

struct WarpFileOptions {
  ResampleOptions resample;
  std::int64_t tile_size = 512;
  Compression compression = Compression::None;
  /// Defaults to the source sample type.
  std::optional<SampleType> sample_type;
  /// Defaults to the source nodata value.
  std::optional<double> nodata;
};

/// Warps a whole scene onto the grid (dst_crs, dst_bbox, shape) and streams
/// the result to a tiled GeoTIFF one tile row at a time.
void warp_to_file(const SceneMetadata& scene, const std::filesystem::path& dst,
                  const CrsDef& dst_crs, const BoundingBox& dst_bbox, const GridShape& shape,
                  BlockCache& cache, const WarpFileOptions& options = {});

}  // namespace geopatch
