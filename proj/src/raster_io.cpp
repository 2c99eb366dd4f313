#include "geopatch/raster_io.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <regex>
#include <sstream>

#include "geopatch/error.hpp"

namespace geopatch {

namespace {

// TIFF tags.
constexpr std::uint16_t kImageWidth = 256;
constexpr std::uint16_t kImageLength = 257;
constexpr std::uint16_t kBitsPerSample = 258;
constexpr std::uint16_t kCompression = 259;
constexpr std::uint16_t kPhotometric = 262;
constexpr std::uint16_t kStripOffsets = 273;
constexpr std::uint16_t kSamplesPerPixel = 277;
constexpr std::uint16_t kRowsPerStrip = 278;
constexpr std::uint16_t kStripByteCounts = 279;
constexpr std::uint16_t kPlanarConfig = 284;
constexpr std::uint16_t kPredictor = 317;
constexpr std::uint16_t kTileWidth = 322;
constexpr std::uint16_t kTileLength = 323;
constexpr std::uint16_t kTileOffsets = 324;
constexpr std::uint16_t kTileByteCounts = 325;
constexpr std::uint16_t kExtraSamples = 338;
constexpr std::uint16_t kSampleFormat = 339;
constexpr std::uint16_t kModelPixelScale = 33550;
constexpr std::uint16_t kModelTiepoint = 33922;
constexpr std::uint16_t kModelTransformation = 34264;
constexpr std::uint16_t kGeoKeyDirectory = 34735;
constexpr std::uint16_t kGdalNodata = 42113;

// GeoKeys.
constexpr std::uint16_t kGTModelType = 1024;
constexpr std::uint16_t kGTRasterType = 1025;
constexpr std::uint16_t kGeographicType = 2048;
constexpr std::uint16_t kProjectedCSType = 3072;

// Field types.
constexpr std::uint16_t kTypeByte = 1;
constexpr std::uint16_t kTypeAscii = 2;
constexpr std::uint16_t kTypeShort = 3;
constexpr std::uint16_t kTypeLong = 4;
constexpr std::uint16_t kTypeDouble = 12;

std::size_t field_size(std::uint16_t type) {
  switch (type) {
    case 1: case 2: case 6: case 7: return 1;
    case 3: case 8: return 2;
    case 4: case 9: case 11: return 4;
    case 5: case 10: case 12: return 8;
    default: return 0;
  }
}

class FileHandle {
 public:
  explicit FileHandle(const std::filesystem::path& path) : fd_(::open(path.c_str(), O_RDONLY)) {
    if (fd_ < 0) {
      throw Error(ErrorCode::IoError, "cannot open " + path.string() + ": " + std::strerror(errno));
    }
    const off_t end = ::lseek(fd_, 0, SEEK_END);
    size_ = end < 0 ? 0 : static_cast<std::uint64_t>(end);
  }
  ~FileHandle() { ::close(fd_); }
  FileHandle(const FileHandle&) = delete;
  FileHandle& operator=(const FileHandle&) = delete;

  std::uint64_t size() const noexcept { return size_; }

  void read_at(std::uint64_t offset, std::span<std::byte> out, const std::string& what) const {
    if (offset + out.size() > size_) {
      throw Error(ErrorCode::CorruptFile, what + " extends past end of file");
    }
    std::size_t done = 0;
    while (done < out.size()) {
      const ssize_t n = ::pread(fd_, out.data() + done, out.size() - done,
                                static_cast<off_t>(offset + done));
      if (n < 0 && errno == EINTR) {
        continue;
      }
      if (n <= 0) {
        throw Error(ErrorCode::IoError, "read failed for " + what);
      }
      done += static_cast<std::size_t>(n);
    }
  }

 private:
  int fd_;
  std::uint64_t size_ = 0;
};

void byteswap_inplace(std::byte* p, std::size_t width) noexcept { std::reverse(p, p + width); }

struct IfdEntry {
  std::uint16_t type = 0;
  std::uint32_t count = 0;
  std::vector<std::byte> raw;  // file byte order
};

class TiffReader {
 public:
  TiffReader(const FileHandle& file, bool little) : file_(file), little_(little) {}

  template <typename T>
  T decode(const std::byte* p) const noexcept {
    T v;
    std::memcpy(&v, p, sizeof(T));
    if (little_ != (std::endian::native == std::endian::little)) {
      v = swap(v);
    }
    return v;
  }

  std::map<std::uint16_t, IfdEntry> read_ifd(std::uint32_t offset) const {
    std::byte countbuf[2];
    file_.read_at(offset, countbuf, "IFD header");
    const auto count = decode<std::uint16_t>(countbuf);
    std::vector<std::byte> entries(static_cast<std::size_t>(count) * 12);
    file_.read_at(offset + 2, entries, "IFD entries");
    std::map<std::uint16_t, IfdEntry> out;
    for (std::size_t i = 0; i < count; ++i) {
      const std::byte* e = entries.data() + i * 12;
      IfdEntry entry;
      const auto tag = decode<std::uint16_t>(e);
      entry.type = decode<std::uint16_t>(e + 2);
      entry.count = decode<std::uint32_t>(e + 4);
      const std::size_t fsize = field_size(entry.type);
      if (fsize == 0) {
        continue;  // unknown field types are skipped per TIFF 6.0
      }
      const std::size_t bytes = fsize * entry.count;
      entry.raw.resize(bytes);
      if (bytes <= 4) {
        std::memcpy(entry.raw.data(), e + 8, bytes);
      } else {
        file_.read_at(decode<std::uint32_t>(e + 8), entry.raw, "tag " + std::to_string(tag));
      }
      out.emplace(tag, std::move(entry));
    }
    return out;
  }

  std::vector<std::uint64_t> integers(const IfdEntry& e) const {
    std::vector<std::uint64_t> out(e.count);
    const std::size_t w = field_size(e.type);
    for (std::size_t i = 0; i < e.count; ++i) {
      const std::byte* p = e.raw.data() + i * w;
      switch (e.type) {
        case 1: case 7: out[i] = std::to_integer<std::uint8_t>(*p); break;
        case 3: out[i] = decode<std::uint16_t>(p); break;
        case 4: out[i] = decode<std::uint32_t>(p); break;
        default: throw Error(ErrorCode::CorruptFile, "expected integer tag");
      }
    }
    return out;
  }

  std::vector<double> doubles(const IfdEntry& e) const {
    if (e.type != kTypeDouble) {
      throw Error(ErrorCode::CorruptFile, "expected DOUBLE tag");
    }
    std::vector<double> out(e.count);
    for (std::size_t i = 0; i < e.count; ++i) {
      out[i] = std::bit_cast<double>(decode<std::uint64_t>(e.raw.data() + i * 8));
    }
    return out;
  }

 private:
  template <typename T>
  static T swap(T v) noexcept {
    auto bytes = std::bit_cast<std::array<std::byte, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }

  const FileHandle& file_;
  bool little_;
};

const IfdEntry& require(const std::map<std::uint16_t, IfdEntry>& ifd, std::uint16_t tag,
                        const char* name) {
  auto it = ifd.find(tag);
  if (it == ifd.end()) {
    throw Error(ErrorCode::UnsupportedFormat, std::string("missing required tag ") + name);
  }
  return it->second;
}

std::uint64_t single(const TiffReader& r, const std::map<std::uint16_t, IfdEntry>& ifd,
                     std::uint16_t tag, std::uint64_t fallback) {
  auto it = ifd.find(tag);
  if (it == ifd.end()) {
    return fallback;
  }
  const auto v = r.integers(it->second);
  if (v.empty()) {
    throw Error(ErrorCode::CorruptFile, "empty tag " + std::to_string(tag));
  }
  return v.front();
}

SampleType sample_type_from(std::uint64_t bits, std::uint64_t format) {
  if (bits == 8 && format == 1) return SampleType::U8;
  if (bits == 16 && format == 1) return SampleType::U16;
  if (bits == 16 && format == 2) return SampleType::I16;
  if (bits == 32 && format == 3) return SampleType::F32;
  throw Error(ErrorCode::UnsupportedFormat, "unsupported sample type: " + std::to_string(bits) +
                                                " bits, format " + std::to_string(format));
}

std::uint64_t file_id_for(const std::filesystem::path& path) {
  std::error_code ec;
  auto abs = std::filesystem::weakly_canonical(path, ec);
  if (ec) {
    abs = std::filesystem::absolute(path);
  }
  return std::hash<std::string>{}(abs.string());
}

void store_sample(std::byte* dst, SampleType t, float v) noexcept {
  switch (t) {
    case SampleType::U8: {
      const auto x = static_cast<std::uint8_t>(quantize(v, t));
      std::memcpy(dst, &x, 1);
      break;
    }
    case SampleType::U16: {
      const auto x = static_cast<std::uint16_t>(quantize(v, t));
      std::memcpy(dst, &x, 2);
      break;
    }
    case SampleType::I16: {
      const auto x = static_cast<std::int16_t>(quantize(v, t));
      std::memcpy(dst, &x, 2);
      break;
    }
    case SampleType::F32: std::memcpy(dst, &v, 4); break;
  }
}

template <typename T>
void convert_row(const std::byte* src, std::span<float> out) noexcept {
  for (std::size_t i = 0; i < out.size(); ++i) {
    T v;
    std::memcpy(&v, src + i * sizeof(T), sizeof(T));
    out[i] = static_cast<float>(v);
  }
}

std::string format_nodata(double v, SampleType t) {
  std::ostringstream os;
  if (t == SampleType::F32) {
    os << std::setprecision(9) << v;
  } else {
    os << static_cast<long long>(std::llround(v));
  }
  return os.str();
}

}  // namespace

// --- FilenameTimePattern ------------------------------------------------------

std::optional<double> FilenameTimePattern::match(const std::string& filename) const {
  if (regex.empty()) {
    return std::nullopt;
  }
  std::smatch m;
  const std::regex re(regex);
  if (!std::regex_search(filename, m, re) || m.size() < 2) {
    return std::nullopt;
  }
  std::tm tm{};
  std::istringstream is(m[1].str());
  is >> std::get_time(&tm, format.c_str());
  if (is.fail()) {
    return std::nullopt;
  }
  return static_cast<double>(timegm(&tm));
}

// --- SceneMetadata / Block ------------------------------------------------------

BoundingBox SceneMetadata::bounds() const {
  BoundingBox b = transform.bounds(shape);
  b.mint = mint;
  b.maxt = maxt;
  return b;
}

std::int64_t SceneMetadata::blocks_across() const noexcept {
  return (shape.cols + block_layout.block_width - 1) / block_layout.block_width;
}

std::int64_t SceneMetadata::blocks_down() const noexcept {
  return (shape.rows + block_layout.block_height - 1) / block_layout.block_height;
}

float Block::value(std::int64_t row, std::int64_t col) const noexcept {
  float v = 0.0f;
  read_row(row, col, std::span<float>(&v, 1));
  return v;
}

void Block::read_row(std::int64_t row, std::int64_t col0, std::span<float> out) const noexcept {
  const std::size_t ss = sample_size(sample_type);
  const std::byte* src = data.data() + static_cast<std::size_t>(row * width + col0) * ss;
  switch (sample_type) {
    case SampleType::U8: convert_row<std::uint8_t>(src, out); break;
    case SampleType::U16: convert_row<std::uint16_t>(src, out); break;
    case SampleType::I16: convert_row<std::int16_t>(src, out); break;
    case SampleType::F32: convert_row<float>(src, out); break;
  }
}

// --- parsing ----------------------------------------------------------------------

SceneMetadata parse_geotiff_header(const std::filesystem::path& path,
                                   const FilenameTimePattern* time_pattern) {
  const FileHandle file(path);
  std::byte header[8];
  if (file.size() < 8) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": too short for a TIFF header");
  }
  file.read_at(0, header, "TIFF header");
  const auto b0 = std::to_integer<unsigned char>(header[0]);
  const auto b1 = std::to_integer<unsigned char>(header[1]);
  bool little = false;
  if (b0 == 0x49 && b1 == 0x49) {
    little = true;
  } else if (!(b0 == 0x4D && b1 == 0x4D)) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": bad TIFF byte-order mark");
  }
  const TiffReader r(file, little);
  const auto version = r.decode<std::uint16_t>(header + 2);
  if (version == 43) {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": BigTIFF is not supported");
  }
  if (version != 42) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": bad TIFF magic");
  }
  const auto ifd_offset = r.decode<std::uint32_t>(header + 4);
  const auto ifd = r.read_ifd(ifd_offset);

  SceneMetadata m;
  m.path = path;
  m.file_id = file_id_for(path);
  m.little_endian = little;

  if (ifd.contains(kModelTransformation)) {
    throw Error(ErrorCode::UnsupportedFormat,
                path.string() + ": ModelTransformation (rotated/sheared) georeferencing");
  }

  const auto width = single(r, ifd, kImageWidth, 0);
  const auto height = single(r, ifd, kImageLength, 0);
  require(ifd, kImageWidth, "ImageWidth");
  require(ifd, kImageLength, "ImageLength");
  if (width == 0 || height == 0) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": zero image size");
  }
  m.shape = {static_cast<std::int64_t>(height), static_cast<std::int64_t>(width)};
  m.bands = static_cast<int>(single(r, ifd, kSamplesPerPixel, 1));

  const auto bits = r.integers(require(ifd, kBitsPerSample, "BitsPerSample"));
  std::vector<std::uint64_t> formats(bits.size(), 1);
  if (auto it = ifd.find(kSampleFormat); it != ifd.end()) {
    formats = r.integers(it->second);
  }
  if (bits.empty() || formats.empty()) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": empty BitsPerSample/SampleFormat");
  }
  m.sample_type = sample_type_from(bits.front(), formats.front());
  for (std::size_t i = 1; i < bits.size(); ++i) {
    const auto fmt = i < formats.size() ? formats[i] : formats.front();
    if (sample_type_from(bits[i], fmt) != m.sample_type) {
      throw Error(ErrorCode::UnsupportedFormat, path.string() + ": mixed band sample types");
    }
  }

  const auto compression = single(r, ifd, kCompression, 1);
  if (compression == 1) {
    m.compression = Compression::None;
  } else if (compression == 8 || compression == 32946) {
    m.compression = Compression::Deflate;
  } else {
    throw Error(ErrorCode::UnsupportedFormat,
                path.string() + ": compression " + std::to_string(compression));
  }
  if (single(r, ifd, kPredictor, 1) != 1) {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": predictor not supported");
  }
  if (single(r, ifd, kPlanarConfig, 1) != 1 && m.bands > 1) {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": band-interleaved planar layout");
  }

  if (ifd.contains(kTileWidth)) {
    m.block_layout.tiled = true;
    m.block_layout.block_width = static_cast<std::int64_t>(single(r, ifd, kTileWidth, 0));
    m.block_layout.block_height =
        static_cast<std::int64_t>(r.integers(require(ifd, kTileLength, "TileLength")).at(0));
    if (m.block_layout.block_width <= 0 || m.block_layout.block_height <= 0 ||
        m.block_layout.block_width % 16 != 0 || m.block_layout.block_height % 16 != 0) {
      throw Error(ErrorCode::CorruptFile, path.string() + ": tile size not a multiple of 16");
    }
    m.chunk_offsets = r.integers(require(ifd, kTileOffsets, "TileOffsets"));
    m.chunk_byte_counts = r.integers(require(ifd, kTileByteCounts, "TileByteCounts"));
  } else {
    m.block_layout.tiled = false;
    m.block_layout.block_width = m.shape.cols;
    m.block_layout.block_height = std::min<std::int64_t>(
        static_cast<std::int64_t>(single(r, ifd, kRowsPerStrip, height)), m.shape.rows);
    if (m.block_layout.block_height <= 0) {
      throw Error(ErrorCode::CorruptFile, path.string() + ": RowsPerStrip is zero");
    }
    m.chunk_offsets = r.integers(require(ifd, kStripOffsets, "StripOffsets"));
    m.chunk_byte_counts = r.integers(require(ifd, kStripByteCounts, "StripByteCounts"));
  }
  const auto expected_chunks = static_cast<std::size_t>(m.blocks_across() * m.blocks_down());
  if (m.chunk_offsets.size() != expected_chunks || m.chunk_byte_counts.size() != expected_chunks) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": chunk table size mismatch");
  }

  // Georeferencing.
  auto scale_it = ifd.find(kModelPixelScale);
  auto tie_it = ifd.find(kModelTiepoint);
  if (scale_it == ifd.end() || tie_it == ifd.end()) {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": missing pixel scale/tiepoint");
  }
  const auto scale = r.doubles(scale_it->second);
  const auto tie = r.doubles(tie_it->second);
  if (scale.size() < 2 || tie.size() < 6 || !(scale[0] > 0.0) || !(scale[1] > 0.0)) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": malformed pixel scale/tiepoint");
  }
  if (tie.size() > 6) {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": multiple tiepoints");
  }

  auto geo_it = ifd.find(kGeoKeyDirectory);
  if (geo_it == ifd.end()) {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": missing GeoKeyDirectory");
  }
  const auto keys = r.integers(geo_it->second);
  if (keys.size() < 4 || keys.size() < 4 + 4 * keys[3]) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": truncated GeoKeyDirectory");
  }
  std::map<std::uint64_t, std::uint64_t> geokeys;
  for (std::size_t i = 0; i < keys[3]; ++i) {
    const std::size_t e = 4 + 4 * i;
    if (keys[e + 1] == 0) {
      geokeys[keys[e]] = keys[e + 3];
    }
  }
  std::optional<int> code;
  const auto model = geokeys.count(kGTModelType) ? geokeys[kGTModelType] : 0;
  if (model == 1 && geokeys.count(kProjectedCSType)) {
    code = static_cast<int>(geokeys[kProjectedCSType]);
  } else if (model == 2 && geokeys.count(kGeographicType)) {
    code = static_cast<int>(geokeys[kGeographicType]);
  } else if (geokeys.count(kProjectedCSType)) {
    code = static_cast<int>(geokeys[kProjectedCSType]);
  } else if (geokeys.count(kGeographicType)) {
    code = static_cast<int>(geokeys[kGeographicType]);
  }
  if (!code || *code == 32767) {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": no EPSG-coded CRS geokey");
  }
  m.crs = CrsDef::from_epsg(*code);

  m.transform.dx = scale[0];
  m.transform.dy = -scale[1];
  m.transform.origin_x = tie[3] - tie[0] * scale[0];
  m.transform.origin_y = tie[4] + tie[1] * scale[1];
  if (geokeys.count(kGTRasterType) && geokeys[kGTRasterType] == 2) {
    // PixelIsPoint: the tiepoint addresses the pixel center.
    m.transform.origin_x -= 0.5 * scale[0];
    m.transform.origin_y += 0.5 * scale[1];
  }

  if (auto it = ifd.find(kGdalNodata); it != ifd.end() && it->second.type == kTypeAscii) {
    std::string text(reinterpret_cast<const char*>(it->second.raw.data()), it->second.raw.size());
    text = text.c_str();
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str()) {
      m.nodata = v;
    }
  }

  if (time_pattern != nullptr) {
    if (auto t = time_pattern->match(path.filename().string())) {
      m.mint = *t;
      m.maxt = *t;
    }
  }
  if (!m.bounds().is_valid() || m.bounds().area() <= 0.0) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": empty georeferenced bounds");
  }
  return m;
}

// --- block decoding -----------------------------------------------------------------

std::shared_ptr<const Block> decode_block(const SceneMetadata& scene, int band,
                                          std::int64_t block_row, std::int64_t block_col) {
  if (band < 0 || band >= scene.bands || block_row < 0 || block_row >= scene.blocks_down() ||
      block_col < 0 || block_col >= scene.blocks_across()) {
    throw Error(ErrorCode::InvalidArgument, "block index out of range");
  }
  const auto& layout = scene.block_layout;
  const std::size_t ss = sample_size(scene.sample_type);
  const std::int64_t bw = layout.block_width;
  const std::int64_t bh = layout.block_height;
  const std::int64_t valid_rows = std::min(bh, scene.shape.rows - block_row * bh);
  const std::int64_t valid_cols = std::min(bw, scene.shape.cols - block_col * bw);
  // Strips store only the rows that exist; tiles are always full size.
  const std::int64_t chunk_rows = layout.tiled ? bh : valid_rows;
  const std::size_t pixel_bytes = ss * static_cast<std::size_t>(scene.bands);
  const std::size_t expected = static_cast<std::size_t>(chunk_rows * bw) * pixel_bytes;

  const auto chunk = static_cast<std::size_t>(block_row * scene.blocks_across() + block_col);
  const std::uint64_t offset = scene.chunk_offsets[chunk];
  const std::uint64_t count = scene.chunk_byte_counts[chunk];
  const std::string what = scene.path.string() + " block (" + std::to_string(block_row) + ", " +
                           std::to_string(block_col) + ")";

  std::vector<std::byte> raw;
  {
    const FileHandle file(scene.path);
    std::vector<std::byte> stored(count);
    file.read_at(offset, stored, what);
    if (scene.compression == Compression::Deflate) {
      raw.resize(expected);
      uLongf out_len = static_cast<uLongf>(expected);
      const int rc = ::uncompress(reinterpret_cast<Bytef*>(raw.data()), &out_len,
                                  reinterpret_cast<const Bytef*>(stored.data()),
                                  static_cast<uLong>(stored.size()));
      if (rc != Z_OK || out_len != expected) {
        throw Error(ErrorCode::CorruptFile, what + ": deflate stream error");
      }
    } else {
      if (stored.size() < expected) {
        throw Error(ErrorCode::CorruptFile, what + ": byte count " + std::to_string(count) +
                                                " < expected " + std::to_string(expected));
      }
      stored.resize(expected);
      raw = std::move(stored);
    }
  }

  auto block = std::make_shared<Block>();
  block->band = band;
  block->block_row = block_row;
  block->block_col = block_col;
  block->width = bw;
  block->height = bh;
  block->sample_type = scene.sample_type;
  block->data.resize(static_cast<std::size_t>(bw * bh) * ss);

  std::byte fill_bytes[4] = {};
  store_sample(fill_bytes, scene.sample_type, static_cast<float>(scene.nodata.value_or(0.0)));
  const bool swap = scene.little_endian != (std::endian::native == std::endian::little);
  for (std::int64_t row = 0; row < bh; ++row) {
    std::byte* dst = block->data.data() + static_cast<std::size_t>(row * bw) * ss;
    for (std::int64_t col = 0; col < bw; ++col, dst += ss) {
      if (row >= valid_rows || col >= valid_cols) {
        std::memcpy(dst, fill_bytes, ss);
        continue;
      }
      const std::byte* src = raw.data() + static_cast<std::size_t>(row * bw + col) * pixel_bytes +
                             static_cast<std::size_t>(band) * ss;
      std::memcpy(dst, src, ss);
      if (swap && ss > 1) {
        byteswap_inplace(dst, ss);
      }
    }
  }
  return block;
}

std::shared_ptr<const Block> read_block(const SceneMetadata& scene, int band,
                                        std::int64_t block_row, std::int64_t block_col,
                                        BlockCache& cache) {
  const BlockKey key{scene.file_id, band, block_row, block_col};
  return cache.get_or_load(key, [&] { return decode_block(scene, band, block_row, block_col); });
}

// --- writing --------------------------------------------------------------------------

struct TiledTiffWriter::Impl {
  std::filesystem::path path;
  Spec spec;
  std::ofstream out;
  std::int64_t tiles_across = 0;
  std::int64_t tiles_down = 0;
  std::int64_t next_tile_row = 0;
  std::vector<std::uint32_t> offsets;
  std::vector<std::uint32_t> byte_counts;
  bool finished = false;

  std::uint32_t position() {
    const auto pos = static_cast<std::uint64_t>(out.tellp());
    if (pos > 0xFFFFFFFFull) {
      throw Error(ErrorCode::IoError, path.string() + ": exceeds classic TIFF 4 GiB limit");
    }
    return static_cast<std::uint32_t>(pos);
  }

  void write_bytes(const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out) {
      throw Error(ErrorCode::IoError, "write failed: " + path.string());
    }
  }
};

TiledTiffWriter::TiledTiffWriter(const std::filesystem::path& path, Spec spec)
    : impl_(std::make_unique<Impl>()) {
  if (spec.tile_size <= 0 || spec.tile_size % 16 != 0) {
    throw Error(ErrorCode::InvalidArgument, "tile size must be a positive multiple of 16");
  }
  if (spec.bands < 1) {
    throw Error(ErrorCode::InvalidArgument, "at least one band required");
  }
  if (!spec.crs.lookup_epsg()) {
    throw Error(ErrorCode::UnsupportedFormat, "CRS has no EPSG code: " + spec.crs.to_string());
  }
  impl_->path = path;
  impl_->spec = std::move(spec);
  impl_->tiles_across = (impl_->spec.shape.cols + impl_->spec.tile_size - 1) / impl_->spec.tile_size;
  impl_->tiles_down = (impl_->spec.shape.rows + impl_->spec.tile_size - 1) / impl_->spec.tile_size;
  impl_->out.open(path, std::ios::binary | std::ios::trunc);
  if (!impl_->out) {
    throw Error(ErrorCode::IoError, "cannot create " + path.string());
  }
  const std::uint8_t header[8] = {0x49, 0x49, 0x2A, 0x00, 0, 0, 0, 0};
  impl_->write_bytes(header, sizeof header);
}

TiledTiffWriter::~TiledTiffWriter() {
  if (impl_ && !impl_->finished) {
    try {
      finish();
    } catch (...) {
    }
  }
}

std::int64_t TiledTiffWriter::tile_rows() const noexcept { return impl_->tiles_down; }

std::int64_t TiledTiffWriter::rows_in_tile_row(std::int64_t tile_row) const noexcept {
  const auto ts = impl_->spec.tile_size;
  return std::min(ts, impl_->spec.shape.rows - tile_row * ts);
}

void TiledTiffWriter::write_tile_row(std::int64_t tile_row, std::span<const float> strip) {
  auto& im = *impl_;
  const auto& s = im.spec;
  if (tile_row != im.next_tile_row) {
    throw Error(ErrorCode::InvalidArgument, "tile rows must be written in order");
  }
  const std::int64_t rows = rows_in_tile_row(tile_row);
  const std::int64_t cols = s.shape.cols;
  if (strip.size() != static_cast<std::size_t>(s.bands * rows * cols)) {
    throw Error(ErrorCode::InvalidArgument, "strip size mismatch");
  }
  const std::size_t ss = sample_size(s.sample_type);
  const std::int64_t ts = s.tile_size;
  const std::size_t pixel_bytes = ss * static_cast<std::size_t>(s.bands);
  std::vector<std::byte> tile(static_cast<std::size_t>(ts * ts) * pixel_bytes);
  std::vector<std::byte> packed;
  const float pad = static_cast<float>(s.nodata.value_or(0.0));
  const std::size_t plane = static_cast<std::size_t>(rows * cols);

  for (std::int64_t tc = 0; tc < im.tiles_across; ++tc) {
    for (std::int64_t r = 0; r < ts; ++r) {
      for (std::int64_t c = 0; c < ts; ++c) {
        const std::int64_t col = tc * ts + c;
        std::byte* dst = tile.data() + static_cast<std::size_t>(r * ts + c) * pixel_bytes;
        const bool inside = r < rows && col < cols;
        for (int b = 0; b < s.bands; ++b) {
          const float v = inside ? strip[b * plane + static_cast<std::size_t>(r * cols + col)] : pad;
          store_sample(dst + static_cast<std::size_t>(b) * ss, s.sample_type, v);
        }
      }
    }
    const std::uint32_t offset = im.position();
    if (s.compression == Compression::Deflate) {
      uLongf len = ::compressBound(static_cast<uLong>(tile.size()));
      packed.resize(len);
      if (::compress2(reinterpret_cast<Bytef*>(packed.data()), &len,
                      reinterpret_cast<const Bytef*>(tile.data()), static_cast<uLong>(tile.size()),
                      Z_DEFAULT_COMPRESSION) != Z_OK) {
        throw Error(ErrorCode::IoError, "deflate failed");
      }
      im.write_bytes(packed.data(), len);
      im.byte_counts.push_back(static_cast<std::uint32_t>(len));
    } else {
      im.write_bytes(tile.data(), tile.size());
      im.byte_counts.push_back(static_cast<std::uint32_t>(tile.size()));
    }
    im.offsets.push_back(offset);
  }
  ++im.next_tile_row;
}

void TiledTiffWriter::finish() {
  auto& im = *impl_;
  if (im.finished) {
    return;
  }
  im.finished = true;
  const auto& s = im.spec;
  if (im.next_tile_row != im.tiles_down) {
    throw Error(ErrorCode::InvalidArgument, "finish() before all tile rows were written");
  }

  struct Entry {
    std::uint16_t tag;
    std::uint16_t type;
    std::uint32_t count;
    std::vector<std::byte> payload;
  };
  auto shorts = [](std::uint16_t tag, std::vector<std::uint16_t> v) {
    Entry e{tag, kTypeShort, static_cast<std::uint32_t>(v.size()), {}};
    e.payload.resize(v.size() * 2);
    std::memcpy(e.payload.data(), v.data(), e.payload.size());
    return e;
  };
  auto longs = [](std::uint16_t tag, const std::vector<std::uint32_t>& v) {
    Entry e{tag, kTypeLong, static_cast<std::uint32_t>(v.size()), {}};
    e.payload.resize(v.size() * 4);
    std::memcpy(e.payload.data(), v.data(), e.payload.size());
    return e;
  };
  auto doubles = [](std::uint16_t tag, const std::vector<double>& v) {
    Entry e{tag, kTypeDouble, static_cast<std::uint32_t>(v.size()), {}};
    e.payload.resize(v.size() * 8);
    std::memcpy(e.payload.data(), v.data(), e.payload.size());
    return e;
  };

  const auto bands = static_cast<std::uint16_t>(s.bands);
  const auto bits = static_cast<std::uint16_t>(sample_size(s.sample_type) * 8);
  const std::uint16_t format = s.sample_type == SampleType::F32   ? 3
                               : s.sample_type == SampleType::I16 ? 2
                                                                  : 1;
  const int epsg = *s.crs.lookup_epsg();
  const bool geographic = s.crs.is_geographic();

  std::vector<Entry> entries;
  entries.push_back(longs(kImageWidth, {static_cast<std::uint32_t>(s.shape.cols)}));
  entries.push_back(longs(kImageLength, {static_cast<std::uint32_t>(s.shape.rows)}));
  entries.push_back(shorts(kBitsPerSample, std::vector<std::uint16_t>(bands, bits)));
  entries.push_back(
      shorts(kCompression, {static_cast<std::uint16_t>(s.compression == Compression::None ? 1 : 8)}));
  entries.push_back(shorts(kPhotometric, {1}));
  entries.push_back(shorts(kSamplesPerPixel, {bands}));
  entries.push_back(shorts(kPlanarConfig, {1}));
  entries.push_back(longs(kTileWidth, {static_cast<std::uint32_t>(s.tile_size)}));
  entries.push_back(longs(kTileLength, {static_cast<std::uint32_t>(s.tile_size)}));
  entries.push_back(longs(kTileOffsets, im.offsets));
  entries.push_back(longs(kTileByteCounts, im.byte_counts));
  if (bands > 1) {
    entries.push_back(shorts(kExtraSamples, std::vector<std::uint16_t>(bands - 1u, 0)));
  }
  entries.push_back(shorts(kSampleFormat, std::vector<std::uint16_t>(bands, format)));
  const Resolution res = s.transform.resolution();
  entries.push_back(doubles(kModelPixelScale, {res.xres, res.yres, 0.0}));
  entries.push_back(
      doubles(kModelTiepoint, {0.0, 0.0, 0.0, s.transform.origin_x, s.transform.origin_y, 0.0}));
  entries.push_back(shorts(kGeoKeyDirectory,
                           {1, 1, 0, 3,                                            //
                            kGTModelType, 0, 1, static_cast<std::uint16_t>(geographic ? 2 : 1),
                            kGTRasterType, 0, 1, 1,                                //
                            geographic ? kGeographicType : kProjectedCSType, 0, 1,
                            static_cast<std::uint16_t>(epsg)}));
  if (s.nodata) {
    const std::string text = format_nodata(*s.nodata, s.sample_type);
    Entry e{kGdalNodata, kTypeAscii, static_cast<std::uint32_t>(text.size() + 1), {}};
    e.payload.resize(text.size() + 1);
    std::memcpy(e.payload.data(), text.c_str(), text.size() + 1);
    entries.push_back(std::move(e));
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.tag < b.tag; });

  // Out-of-line payloads first (word aligned), then the IFD itself.
  std::vector<std::uint32_t> value_offsets(entries.size(), 0);
  const std::byte zero{0};
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].payload.size() > 4) {
      if (im.position() % 2 != 0) {
        im.write_bytes(&zero, 1);
      }
      value_offsets[i] = im.position();
      im.write_bytes(entries[i].payload.data(), entries[i].payload.size());
    }
  }
  if (im.position() % 2 != 0) {
    im.write_bytes(&zero, 1);
  }
  const std::uint32_t ifd_offset = im.position();
  const auto count = static_cast<std::uint16_t>(entries.size());
  im.write_bytes(&count, 2);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Entry& e = entries[i];
    std::byte rec[12] = {};
    std::memcpy(rec, &e.tag, 2);
    std::memcpy(rec + 2, &e.type, 2);
    std::memcpy(rec + 4, &e.count, 4);
    if (e.payload.size() <= 4) {
      std::memcpy(rec + 8, e.payload.data(), e.payload.size());
    } else {
      std::memcpy(rec + 8, &value_offsets[i], 4);
    }
    im.write_bytes(rec, sizeof rec);
  }
  const std::uint32_t next_ifd = 0;
  im.write_bytes(&next_ifd, 4);
  im.out.seekp(4);
  im.write_bytes(&ifd_offset, 4);
  im.out.close();
  if (!im.out) {
    throw Error(ErrorCode::IoError, "close failed: " + im.path.string());
  }
  (void)kTypeByte;
}

void write_geotiff(const std::filesystem::path& path, const Patch& patch,
                   const WriteOptions& options) {
  TiledTiffWriter::Spec spec;
  spec.shape = patch.shape;
  spec.bands = patch.bands;
  spec.sample_type = options.sample_type.value_or(patch.sample_type);
  spec.transform = patch.transform();
  spec.crs = patch.crs;
  spec.tile_size = options.tile_size;
  spec.compression = options.compression;
  spec.nodata = options.nodata;
  const bool any_invalid = patch.valid_count() != patch.plane_size();
  if (!spec.nodata && any_invalid) {
    spec.nodata = patch.fill;
  }
  TiledTiffWriter writer(path, spec);
  const std::int64_t cols = patch.cols();
  const float nodata = static_cast<float>(spec.nodata.value_or(0.0));
  std::vector<float> strip;
  for (std::int64_t tr = 0; tr < writer.tile_rows(); ++tr) {
    const std::int64_t rows = writer.rows_in_tile_row(tr);
    const std::int64_t row0 = tr * spec.tile_size;
    strip.assign(static_cast<std::size_t>(patch.bands * rows * cols), 0.0f);
    for (int b = 0; b < patch.bands; ++b) {
      for (std::int64_t r = 0; r < rows; ++r) {
        for (std::int64_t c = 0; c < cols; ++c) {
          strip[static_cast<std::size_t>((b * rows + r) * cols + c)] =
              patch.is_valid(row0 + r, c) ? patch.at(b, row0 + r, c) : nodata;
        }
      }
    }
    writer.write_tile_row(tr, strip);
  }
  writer.finish();
}

}  // namespace geopatch
