#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "geopatch/block_cache.hpp"
#include "geopatch/config.hpp"
#include "geopatch/geo_core.hpp"
#include "geopatch/patch.hpp"
#include "geopatch/projection.hpp"
#include "geopatch/raster_io.hpp"
#include "geopatch/spatial_index.hpp"
#include "geopatch/vector_io.hpp"
#include "geopatch/warp.hpp"

namespace geopatch {

/// Pixel-aligned patches keyed by layer role, all on the grid (crs, bbox, res).
struct Sample {
  std::map<std::string, Patch> patches;
  BoundingBox bbox;
  CrsDef crs;
  Resolution res;
  /// Set when no patch has a single valid pixel.
  bool all_invalid = false;

  const Patch& at(const std::string& role) const;
};

class GeoDataset {
 public:
  virtual ~GeoDataset() = default;

  /// Extent in `crs()`.
  virtual BoundingBox bounds() const = 0;
  virtual const CrsDef& crs() const = 0;
  virtual Resolution res() const = 0;
  /// Scene footprints in `crs()` in discovery order.
  virtual std::vector<BoundingBox> footprints() const = 0;
  virtual std::vector<std::string> roles() const = 0;
  /// Throws QueryOutsideBounds when `b` misses bounds().
  virtual Sample query(const BoundingBox& b) const = 0;
  /// Kernel policy used inside one query.
  virtual void set_exec_policy(ExecPolicy policy) = 0;
};

using DatasetPtr = std::shared_ptr<GeoDataset>;

struct RasterLayerConfig {
  std::filesystem::path root;
  std::string glob = "*.tif";
  std::string role = "image";
  /// Defaults to nearest for labels and integer samples, bilinear for f32.
  std::optional<ResampleMethod> resampling;
  bool is_label = false;
  FilenameTimePattern time_pattern;
  float fill = 0.0f;
  double max_error_px = 0.125;
  /// Lenient mode skips files that fail to parse and records a warning.
  bool strict = true;
};

class RasterLayerDataset final : public GeoDataset {
 public:
  /// Errors: NoScenesFound, parse errors of individual files in strict mode.
  static std::shared_ptr<RasterLayerDataset> open(const RasterLayerConfig& config,
                                                  const CrsDef& crs, const Resolution& res,
                                                  std::shared_ptr<BlockCache> cache);

  BoundingBox bounds() const override { return bounds_; }
  const CrsDef& crs() const override { return crs_; }
  Resolution res() const override { return res_; }
  std::vector<BoundingBox> footprints() const override { return footprints_; }
  std::vector<std::string> roles() const override { return {config_.role}; }
  Sample query(const BoundingBox& b) const override;
  void set_exec_policy(ExecPolicy policy) override { policy_ = policy; }

  /// Later scenes overwrite earlier ones on their valid pixels.
  Patch query_patch(const BoundingBox& b) const;

  const RasterLayerConfig& config() const noexcept { return config_; }
  const std::vector<SceneMetadata>& scenes() const noexcept { return scenes_; }
  const SpatialIndex& index() const noexcept { return index_; }
  ResampleMethod method() const noexcept { return method_; }
  int bands() const noexcept { return scenes_.front().bands; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  BlockCache& cache() const noexcept { return *cache_; }

 private:
  RasterLayerDataset() = default;

  RasterLayerConfig config_;
  CrsDef crs_;
  Resolution res_;
  std::shared_ptr<BlockCache> cache_;
  std::vector<SceneMetadata> scenes_;
  std::vector<BoundingBox> footprints_;
  SpatialIndex index_;
  BoundingBox bounds_;
  ResampleMethod method_ = ResampleMethod::Nearest;
  ExecPolicy policy_ = ExecPolicy::Serial;
  std::vector<std::string> warnings_;
};

struct VectorLayerConfig {
  /// A single file or a directory combined with `glob`.
  std::filesystem::path root;
  std::string glob = "*.geojson";
  std::string role = "mask";
  VectorParseOptions parse;
};

/// Polygons are reprojected vertex by vertex into the dataset CRS at open
/// time and rasterized directly on the query grid.
class VectorLayerDataset final : public GeoDataset {
 public:
  static std::shared_ptr<VectorLayerDataset> open(const VectorLayerConfig& config,
                                                  const CrsDef& crs, const Resolution& res);
  static std::shared_ptr<VectorLayerDataset> from_polygons(PolygonSet polys, std::string role,
                                                           const CrsDef& crs,
                                                           const Resolution& res);

  BoundingBox bounds() const override { return bounds_; }
  const CrsDef& crs() const override { return crs_; }
  Resolution res() const override { return res_; }
  std::vector<BoundingBox> footprints() const override { return {bounds_}; }
  std::vector<std::string> roles() const override { return {role_}; }
  Sample query(const BoundingBox& b) const override;
  void set_exec_policy(ExecPolicy policy) override { policy_ = policy; }

  const PolygonSet& polygons() const noexcept { return polys_; }

 private:
  VectorLayerDataset() = default;

  std::string role_;
  CrsDef crs_;
  Resolution res_;
  PolygonSet polys_;
  SpatialIndex index_;
  BoundingBox bounds_;
  ExecPolicy policy_ = ExecPolicy::Serial;
};

/// Both constituents answer every query; roles must be distinct.
class IntersectionDataset final : public GeoDataset {
 public:
  /// Errors: EmptyIntersection, InvalidArgument (crs/res mismatch, role clash).
  IntersectionDataset(DatasetPtr a, DatasetPtr b);

  BoundingBox bounds() const override { return bounds_; }
  const CrsDef& crs() const override { return a_->crs(); }
  Resolution res() const override { return a_->res(); }
  /// Non-empty pairwise intersections of constituent footprints.
  std::vector<BoundingBox> footprints() const override { return footprints_; }
  std::vector<std::string> roles() const override;
  Sample query(const BoundingBox& b) const override;
  void set_exec_policy(ExecPolicy policy) override;

  const DatasetPtr& first() const noexcept { return a_; }
  const DatasetPtr& second() const noexcept { return b_; }

 private:
  DatasetPtr a_;
  DatasetPtr b_;
  BoundingBox bounds_;
  std::vector<BoundingBox> footprints_;
};

/// Mosaic of both constituents under the first constituent's role; the first
/// valid pixel in constituent order wins.
class UnionDataset final : public GeoDataset {
 public:
  UnionDataset(DatasetPtr a, DatasetPtr b);

  BoundingBox bounds() const override { return bounds_; }
  const CrsDef& crs() const override { return a_->crs(); }
  Resolution res() const override { return a_->res(); }
  std::vector<BoundingBox> footprints() const override;
  std::vector<std::string> roles() const override { return {role_}; }
  Sample query(const BoundingBox& b) const override;
  void set_exec_policy(ExecPolicy policy) override;

  const DatasetPtr& first() const noexcept { return a_; }
  const DatasetPtr& second() const noexcept { return b_; }

 private:
  DatasetPtr a_;
  DatasetPtr b_;
  BoundingBox bounds_;
  std::string role_;
};

DatasetPtr intersect(DatasetPtr a, DatasetPtr b);
DatasetPtr unite(DatasetPtr a, DatasetPtr b);

/// Opens the dataset described by an INI file:
///
///   [dataset]
///   crs = EPSG:5070
///   res = 30
///   layers = image, mask          ; section names, combined left to right
///   compose = intersection        ; or union (only with several layers)
///
///   [image]
///   type = raster                 ; or vector
///   root = images                 ; relative to the config file
///   glob = *.tif
///   role = image                  ; defaults to the section name
///   is_label = false
///   resampling = nearest          ; or bilinear
///   time_regex = _([0-9]{8})\.tif$
///   time_format = %Y%m%d
///   fill = 0
///   strict = true
///   burn_property = class         ; vector only
///   source_crs = EPSG:4326        ; vector only, when the file names none
DatasetPtr open_dataset(const std::filesystem::path& config_path,
                        std::shared_ptr<BlockCache> cache);
DatasetPtr open_dataset(const Config& config, std::shared_ptr<BlockCache> cache);

/// Free-function form of GeoDataset::query.
Sample dataset_query(const GeoDataset& d, const BoundingBox& b);

/// Collects every raster layer reachable from `d`.
std::vector<const RasterLayerDataset*> raster_layers(const GeoDataset& d);

/// Warps every raster scene of the dataset described by `config_path` onto
/// the dataset grid and writes a config pointing at the results to
/// `out_dir/dataset.ini`, which is returned. Layers already on the grid are
/// referenced in place.
std::filesystem::path preprocess_dataset(const std::filesystem::path& config_path,
                                         const std::filesystem::path& out_dir,
                                         ExecPolicy policy = ExecPolicy::Parallel);

}  // namespace geopatch
