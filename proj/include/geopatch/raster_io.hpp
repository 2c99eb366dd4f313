#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geopatch/block_cache.hpp"
#include "geopatch/geo_core.hpp"
#include "geopatch/patch.hpp"
#include "geopatch/projection.hpp"
#include "geopatch/sample_type.hpp"

namespace geopatch {

enum class Compression { None, Deflate };

struct BlockLayout {
  bool tiled = true;
  std::int64_t block_width = 512;
  std::int64_t block_height = 512;  // rows per strip when stripped

  bool operator==(const BlockLayout&) const = default;
};

/// Capture group 1 of `regex`, applied to the file name, is parsed with the
/// strftime-style `format` (UTC) into a point timestamp.
struct FilenameTimePattern {
  std::string regex;
  std::string format = "%Y%m%d";

  std::optional<double> match(const std::string& filename) const;
};

/// Georeferencing and on-disk layout of one GeoTIFF scene.
struct SceneMetadata {
  std::filesystem::path path;
  std::uint64_t file_id = 0;
  CrsDef crs;
  GeoTransform transform;
  GridShape shape;
  int bands = 1;
  SampleType sample_type = SampleType::U8;
  std::optional<double> nodata;
  BlockLayout block_layout;
  double mint = kUnboundedTimeMin;
  double maxt = kUnboundedTimeMax;

  // File layout.
  bool little_endian = true;
  Compression compression = Compression::None;
  std::vector<std::uint64_t> chunk_offsets;
  std::vector<std::uint64_t> chunk_byte_counts;

  Resolution res() const { return transform.resolution(); }
  BoundingBox bounds() const;
  std::int64_t blocks_across() const noexcept;
  std::int64_t blocks_down() const noexcept;
};

/// One band of one decoded block, always block_width x block_height samples;
/// cells beyond the image edge hold the nodata value (0 without nodata).
struct Block {
  int band = 0;
  std::int64_t block_row = 0;
  std::int64_t block_col = 0;
  std::int64_t width = 0;
  std::int64_t height = 0;
  SampleType sample_type = SampleType::U8;
  std::vector<std::byte> data;  // native byte order, row-major

  std::size_t byte_size() const noexcept { return data.size(); }
  float value(std::int64_t row, std::int64_t col) const noexcept;
  /// Converts `out.size()` samples starting at (row, col0) to float.
  void read_row(std::int64_t row, std::int64_t col0, std::span<float> out) const noexcept;
};

/// Parses the first IFD of a classic TIFF carrying GeoTIFF keys.
/// Errors: CorruptFile, UnsupportedFormat, IoError.
SceneMetadata parse_geotiff_header(const std::filesystem::path& path,
                                   const FilenameTimePattern* time_pattern = nullptr);

/// Reads and decodes one band of one block without caching.
std::shared_ptr<const Block> decode_block(const SceneMetadata& scene, int band,
                                          std::int64_t block_row, std::int64_t block_col);

/// Cached block read; key = (file_id, band, block_row, block_col).
std::shared_ptr<const Block> read_block(const SceneMetadata& scene, int band,
                                        std::int64_t block_row, std::int64_t block_col,
                                        BlockCache& cache);

struct WriteOptions {
  std::optional<SampleType> sample_type;  // defaults to patch.sample_type
  std::optional<double> nodata;           // defaults to patch.fill when cells are invalid
  std::int64_t tile_size = 512;
  Compression compression = Compression::None;
};

/// Streams a tiled GeoTIFF: tile rows must be supplied top to bottom.
class TiledTiffWriter {
 public:
  struct Spec {
    GridShape shape;
    int bands = 1;
    SampleType sample_type = SampleType::F32;
    GeoTransform transform;
    CrsDef crs;
    std::optional<double> nodata;
    std::int64_t tile_size = 512;
    Compression compression = Compression::None;
  };

  TiledTiffWriter(const std::filesystem::path& path, Spec spec);
  ~TiledTiffWriter();
  TiledTiffWriter(const TiledTiffWriter&) = delete;
  TiledTiffWriter& operator=(const TiledTiffWriter&) = delete;

  std::int64_t tile_rows() const noexcept;
  /// Rows covered by tile row `tile_row` (the last one may be short).
  std::int64_t rows_in_tile_row(std::int64_t tile_row) const noexcept;
  /// `strip` holds bands x rows_in_tile_row x cols floats, band-major.
  void write_tile_row(std::int64_t tile_row, std::span<const float> strip);
  /// Writes the IFD; called by the destructor if omitted (errors swallowed).
  void finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

void write_geotiff(const std::filesystem::path& path, const Patch& patch,
                   const WriteOptions& options = {});

}  // namespace geopatch
