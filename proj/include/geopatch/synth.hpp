#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geopatch/config.hpp"
#include "geopatch/geo_core.hpp"
#include "geopatch/kernels.hpp"
#include "geopatch/projection.hpp"
#include "geopatch/raster_io.hpp"
#include "geopatch/sample_type.hpp"

namespace geopatch {

/// How a synthetic pixel value is derived from the pixel-center coordinate
/// (x, y) expressed in the reference CRS.
///   Constant: every sample equals `constant`.
///   Checker:  (floor(x / res) + floor(y / res) + band) mod 2^bits, where
///             bits = 8 for u8, 15 for i16 and 16 otherwise.
///   Coords:   band 0 holds x, band 1 holds y, further bands hold 0.
enum class SynthEncoding { Constant, Checker, Coords };

SynthEncoding parse_synth_encoding(std::string_view text);
std::string_view to_string(SynthEncoding e) noexcept;

struct SynthSpec {
  CrsDef crs;
  BoundingBox bounds;
  Resolution res;
  int bands = 1;
  SampleType sample_type = SampleType::U16;
  SynthEncoding encoding = SynthEncoding::Checker;
  double constant = 0.0;
  /// Defaults to `crs`.
  std::optional<CrsDef> reference_crs;
  /// Cell size used by the checker encoding; defaults to res.xres.
  std::optional<double> checker_res;
  std::optional<double> nodata;
  std::int64_t tile_size = 512;
  Compression compression = Compression::None;

  void validate() const;
};

/// Value of band `band` at reference coordinate (x, y), before quantization.
double synth_value(const SynthSpec& spec, int band, double x, double y) noexcept;

/// Writes the raster described by `spec`. Pixels whose center cannot be
/// transformed into the reference CRS receive the nodata value (or 0).
void synth_raster(const SynthSpec& spec, const std::filesystem::path& path,
                  ExecPolicy policy = ExecPolicy::Parallel);

/// Desk-scale stand-in for a multi-zone UTM image collection plus one Albers
/// label raster. Scenes sit on a grid_cols x grid_rows layout of overlapping
/// footprints centered on (center_lon, center_lat); each grid column is
/// written in the UTM zone listed in `zones` (cycled).
struct DeskFixtureSpec {
  int grid_cols = 4;
  int grid_rows = 3;
  std::vector<int> zones = {14, 15, 15, 16};
  std::int64_t scene_px = 2048;
  double res = 30.0;
  /// Fraction of a scene width shared by grid neighbours.
  double overlap = 0.25;
  double center_lon = -95.5;
  double center_lat = 40.0;

  int image_bands = 4;
  SampleType image_type = SampleType::U16;
  SynthEncoding image_encoding = SynthEncoding::Checker;

  double label_res = 30.0;
  int label_bands = 1;
  SampleType label_type = SampleType::U16;
  SynthEncoding label_encoding = SynthEncoding::Checker;
  CrsDef label_crs = CrsDef::from_epsg(5070);

  /// Reference CRS for coordinate encodings; shared by images and labels.
  CrsDef reference_crs = CrsDef::from_epsg(5070);
  /// Dataset CRS and resolution written to the generated configs.
  CrsDef dataset_crs = CrsDef::from_epsg(5070);
  double dataset_res = 30.0;

  std::int64_t tile_size = 512;
  Compression compression = Compression::None;
};

struct DeskFixture {
  std::filesystem::path root;
  std::vector<std::filesystem::path> images;
  std::filesystem::path label;
  /// Dataset configs: images only, labels only, images ∩ labels.
  std::filesystem::path images_config;
  std::filesystem::path labels_config;
  std::filesystem::path intersection_config;
};

/// Generates the fixture under `root` (created if needed). Existing files
/// are overwritten.
DeskFixture make_desk_fixture(const std::filesystem::path& root, const DeskFixtureSpec& spec,
                              ExecPolicy policy = ExecPolicy::Parallel);

/// Scene footprints of the fixture in their own CRS, without writing files.
std::vector<SynthSpec> desk_fixture_scenes(const DeskFixtureSpec& spec);
SynthSpec desk_fixture_label(const DeskFixtureSpec& spec);

/// Reads a raster spec from `section`: crs, bounds (xmin, ymin, xmax, ymax),
/// res, bands, sample_type, encoding, constant, reference_crs, checker_res,
/// nodata, tile_size, compression (none | deflate).
SynthSpec synth_spec_from_config(const Config& cfg, const std::string& section);

/// Reads fixture overrides from `section`; absent keys keep their defaults.
DeskFixtureSpec desk_fixture_spec_from_config(const Config& cfg,
                                              const std::string& section = "fixture");

/// Generates everything a synth config describes into `out_dir`: the desk
/// fixture for a [fixture] section and `<name>.tif` for every other section.
std::vector<std::filesystem::path> synth_from_config(const Config& cfg,
                                                     const std::filesystem::path& out_dir,
                                                     ExecPolicy policy = ExecPolicy::Parallel);

}  // namespace geopatch
