#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "geopatch/error.hpp"
#include "geopatch/raster_io.hpp"
#include "geopatch/warp.hpp"
#include "test_util.hpp"

using namespace geopatch;
using geopatch::test::TempDir;

namespace {

// Minimal classic TIFF encoder, independent of the library writer.
class TiffBuilder {
 public:
  explicit TiffBuilder(bool little = true) : little_(little) {}

  void shorts(std::uint16_t tag, std::vector<std::uint32_t> v) { add(tag, 3, v, {}); }
  void longs(std::uint16_t tag, std::vector<std::uint32_t> v) { add(tag, 4, v, {}); }
  void doubles(std::uint16_t tag, std::vector<double> v) { add(tag, 12, {}, v); }
  void ascii(std::uint16_t tag, const std::string& s) {
    Entry e{tag, 2, {}, {}, s};
    entries_.push_back(e);
  }
  void pixels(std::vector<std::uint8_t> data) { data_ = std::move(data); }
  void magic(std::uint16_t m) { magic_ = m; }

  /// Standard single-strip georeferenced layout; pixel data sits at offset 8.
  void georeferenced_strip(std::uint32_t w, std::uint32_t h, std::uint32_t bits,
                           std::uint32_t format, int epsg, double ox, double oy, double res) {
    longs(256, {w});
    longs(257, {h});
    shorts(258, {bits});
    shorts(259, {1});
    shorts(262, {1});
    longs(273, {8});
    shorts(277, {1});
    longs(278, {h});
    longs(279, {static_cast<std::uint32_t>(data_.size())});
    shorts(284, {1});
    shorts(339, {format});
    doubles(33550, {res, res, 0.0});
    doubles(33922, {0, 0, 0, ox, oy, 0});
    const bool geographic = epsg == 4326;
    shorts(34735, {1, 1, 0, 2, 1024, 0, 1, geographic ? 2u : 1u,
                   geographic ? 2048u : 3072u, 0, 1, static_cast<std::uint32_t>(epsg)});
  }

  void write(const std::filesystem::path& path) const {
    std::vector<std::uint8_t> out;
    out.push_back(little_ ? 0x49 : 0x4D);
    out.push_back(little_ ? 0x49 : 0x4D);
    put(out, magic_, 2);
    const std::uint32_t data_end = 8 + static_cast<std::uint32_t>(data_.size());
    const std::uint32_t ifd = data_end + (data_end & 1u);
    put(out, ifd, 4);
    out.insert(out.end(), data_.begin(), data_.end());
    out.resize(ifd, 0);

    auto sorted = entries_;
    std::sort(sorted.begin(), sorted.end(), [](auto& a, auto& b) { return a.tag < b.tag; });
    std::uint32_t extra = ifd + 2 + 12 * static_cast<std::uint32_t>(sorted.size()) + 4;
    std::vector<std::uint8_t> tail;
    put(out, sorted.size(), 2);
    for (const Entry& e : sorted) {
      std::vector<std::uint8_t> payload;
      std::uint32_t count = 0;
      if (e.type == 2) {
        payload.assign(e.text.begin(), e.text.end());
        payload.push_back(0);
        count = static_cast<std::uint32_t>(payload.size());
      } else if (e.type == 12) {
        for (double d : e.reals) {
          std::uint64_t bits;
          std::memcpy(&bits, &d, 8);
          put(payload, bits, 8);
        }
        count = static_cast<std::uint32_t>(e.reals.size());
      } else {
        const int size = e.type == 3 ? 2 : 4;
        for (auto v : e.ints) put(payload, v, size);
        count = static_cast<std::uint32_t>(e.ints.size());
      }
      put(out, e.tag, 2);
      put(out, e.type, 2);
      put(out, count, 4);
      if (payload.size() <= 4) {
        payload.resize(4, 0);
        out.insert(out.end(), payload.begin(), payload.end());
      } else {
        put(out, extra + tail.size(), 4);
        tail.insert(tail.end(), payload.begin(), payload.end());
        if (tail.size() & 1u) tail.push_back(0);
      }
    }
    put(out, 0, 4);
    out.insert(out.end(), tail.begin(), tail.end());
    std::ofstream f(path, std::ios::binary);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  }

 private:
  struct Entry {
    std::uint16_t tag;
    std::uint16_t type;
    std::vector<std::uint32_t> ints;
    std::vector<double> reals;
    std::string text;
  };

  void add(std::uint16_t tag, std::uint16_t type, std::vector<std::uint32_t> ints,
           std::vector<double> reals) {
    std::erase_if(entries_, [&](const Entry& e) { return e.tag == tag; });
    entries_.push_back({tag, type, std::move(ints), std::move(reals), {}});
  }

  void put(std::vector<std::uint8_t>& out, std::uint64_t v, int size) const {
    for (int i = 0; i < size; ++i) {
      const int shift = little_ ? 8 * i : 8 * (size - 1 - i);
      out.push_back(static_cast<std::uint8_t>((v >> shift) & 0xFF));
    }
  }

  bool little_;
  std::uint16_t magic_ = 42;
  std::vector<Entry> entries_;
  std::vector<std::uint8_t> data_;
};

ErrorCode parse_error_code(const std::filesystem::path& p) {
  try {
    parse_geotiff_header(p);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "parse succeeded unexpectedly";
  return ErrorCode::InvalidArgument;
}

const BoundingBox kA4 = BoundingBox::from_xy(186585, 4505085, 423315, 4745415);

}  // namespace

TEST(ParseGeotiffTest, LittleEndianSinglePixelStrip) {
  TempDir dir("rio");
  TiffBuilder t;
  t.pixels({7});
  t.georeferenced_strip(1, 1, 8, 1, 32619, 186585, 4745415, 30);
  t.write(dir / "one.tif");

  const SceneMetadata m = parse_geotiff_header(dir / "one.tif");
  EXPECT_TRUE(m.little_endian);
  EXPECT_FALSE(m.block_layout.tiled);
  EXPECT_EQ(m.shape, (GridShape{1, 1}));
  EXPECT_EQ(m.sample_type, SampleType::U8);
  EXPECT_EQ(m.crs, CrsDef::from_epsg(32619));
  EXPECT_EQ(m.transform, (GeoTransform{186585, 4745415, 30, -30}));

  BlockCache cache(1 << 20);
  const auto block = read_block(m, 0, 0, 0, cache);
  EXPECT_EQ(block->value(0, 0), 7.0f);
  EXPECT_EQ(cache.stats().misses, 1u);
  read_block(m, 0, 0, 0, cache);
  EXPECT_EQ(cache.stats().misses, 1u);
  EXPECT_EQ(cache.stats().hits, 1u);
}

TEST(ParseGeotiffTest, BigEndianU16Strip) {
  TempDir dir("rio");
  TiffBuilder t(false);
  t.pixels({0x01, 0x02, 0x03, 0x04});  // two big-endian u16 samples
  t.georeferenced_strip(2, 1, 16, 1, 5070, 0, 60, 30);
  t.write(dir / "be.tif");

  const SceneMetadata m = parse_geotiff_header(dir / "be.tif");
  EXPECT_FALSE(m.little_endian);
  EXPECT_EQ(m.sample_type, SampleType::U16);
  BlockCache cache(1 << 20);
  const auto block = read_block(m, 0, 0, 0, cache);
  EXPECT_EQ(block->value(0, 0), 258.0f);
  EXPECT_EQ(block->value(0, 1), 772.0f);
}

TEST(ParseGeotiffTest, SignedAndFloatSamples) {
  TempDir dir("rio");
  {
    TiffBuilder t;
    t.pixels({0xFE, 0xFF});  // -2
    t.georeferenced_strip(1, 1, 16, 2, 32619, 0, 30, 30);
    t.write(dir / "i16.tif");
  }
  {
    TiffBuilder t;
    const float v = -1.5f;
    std::vector<std::uint8_t> bytes(4);
    std::memcpy(bytes.data(), &v, 4);
    t.pixels(bytes);
    t.georeferenced_strip(1, 1, 32, 3, 4326, -70, 45, 0.5);
    t.write(dir / "f32.tif");
  }
  BlockCache cache(1 << 20);
  const SceneMetadata a = parse_geotiff_header(dir / "i16.tif");
  EXPECT_EQ(a.sample_type, SampleType::I16);
  EXPECT_EQ(read_block(a, 0, 0, 0, cache)->value(0, 0), -2.0f);
  const SceneMetadata b = parse_geotiff_header(dir / "f32.tif");
  EXPECT_EQ(b.sample_type, SampleType::F32);
  EXPECT_TRUE(b.crs.is_geographic());
  EXPECT_EQ(read_block(b, 0, 0, 0, cache)->value(0, 0), -1.5f);
}

TEST(ParseGeotiffTest, GdalNodataTag) {
  TempDir dir("rio");
  TiffBuilder t;
  t.pixels({0});
  t.georeferenced_strip(1, 1, 8, 1, 32619, 0, 30, 30);
  t.ascii(42113, "255");
  t.write(dir / "nd.tif");
  const SceneMetadata m = parse_geotiff_header(dir / "nd.tif");
  ASSERT_TRUE(m.nodata.has_value());
  EXPECT_EQ(*m.nodata, 255.0);
}

TEST(ParseGeotiffTest, RejectsUnsupportedAndCorruptFiles) {
  TempDir dir("rio");
  {
    TiffBuilder t;
    t.pixels({1});
    t.georeferenced_strip(1, 1, 8, 1, 32619, 0, 30, 30);
    t.doubles(34264, {30, 0, 0, 0, 0, -30, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1});
    t.write(dir / "rot.tif");
    EXPECT_EQ(parse_error_code(dir / "rot.tif"), ErrorCode::UnsupportedFormat);
  }
  {
    TiffBuilder t;
    t.pixels({1});
    t.georeferenced_strip(1, 1, 8, 1, 32619, 0, 30, 30);
    t.shorts(259, {5});  // LZW
    t.write(dir / "lzw.tif");
    EXPECT_EQ(parse_error_code(dir / "lzw.tif"), ErrorCode::UnsupportedFormat);
  }
  {
    TiffBuilder t;
    t.pixels({1});
    t.georeferenced_strip(1, 1, 8, 1, 32619, 0, 30, 30);
    t.shorts(34735, {1, 1, 0, 1, 1024, 0, 1, 1});
    t.write(dir / "nokeys.tif");
    EXPECT_EQ(parse_error_code(dir / "nokeys.tif"), ErrorCode::UnsupportedFormat);
  }
  {
    TiffBuilder t;
    t.pixels({1, 2, 3, 4, 5, 6, 7, 8});
    t.georeferenced_strip(1, 1, 64, 3, 32619, 0, 30, 30);
    t.write(dir / "f64.tif");
    EXPECT_EQ(parse_error_code(dir / "f64.tif"), ErrorCode::UnsupportedFormat);
  }
  {
    TiffBuilder t;
    t.magic(41);
    t.pixels({1});
    t.georeferenced_strip(1, 1, 8, 1, 32619, 0, 30, 30);
    t.write(dir / "magic.tif");
    EXPECT_EQ(parse_error_code(dir / "magic.tif"), ErrorCode::CorruptFile);
  }
  {
    std::ofstream(dir / "junk.tif") << "PK\x03\x04 not a tiff";
    EXPECT_EQ(parse_error_code(dir / "junk.tif"), ErrorCode::CorruptFile);
  }
  {
    TiffBuilder t;
    t.pixels({1});
    t.georeferenced_strip(1, 1, 8, 1, 32619, 0, 30, 30);
    t.write(dir / "trunc.tif");
    std::filesystem::resize_file(dir / "trunc.tif", 20);
    EXPECT_EQ(parse_error_code(dir / "trunc.tif"), ErrorCode::CorruptFile);
  }
  EXPECT_EQ(parse_error_code(dir / "missing.tif"), ErrorCode::IoError);
}

TEST(ParseGeotiffTest, ByteCountMismatchIsCorrupt) {
  TempDir dir("rio");
  TiffBuilder t;
  t.pixels({1, 2});
  t.georeferenced_strip(2, 1, 8, 1, 32619, 0, 30, 30);
  t.longs(279, {1});
  t.write(dir / "short.tif");
  const SceneMetadata m = parse_geotiff_header(dir / "short.tif");
  BlockCache cache(1 << 20);
  try {
    read_block(m, 0, 0, 0, cache);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CorruptFile);
  }
}

TEST(FilenameTimePatternTest, ParsesDateCapture) {
  FilenameTimePattern p{R"(_([0-9]{8})\.tif$)", "%Y%m%d"};
  const auto t = p.match("LC08_20190601.tif");
  ASSERT_TRUE(t.has_value());
  EXPECT_EQ(*t, 1559347200.0);
  EXPECT_FALSE(p.match("no_date.tif").has_value());
}

TEST(SceneMetadataTest, A4BoundsAndTileColumns) {
  SceneMetadata m;
  m.transform = {186585, 4745415, 30, -30};
  m.shape = {8011, 7891};
  m.block_layout = {true, 512, 512};
  EXPECT_EQ(m.bounds(), kA4);
  EXPECT_EQ(m.blocks_across(), 16);
  EXPECT_EQ(m.blocks_down(), 16);
}

TEST(WriteGeotiffTest, RoundTripRandomU16Patches) {
  TempDir dir("rio");
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> value(0, 65535);
  std::uniform_int_distribution<int> size(1, 700);
  for (int i = 0; i < 8; ++i) {
    const std::int64_t w = size(rng), h = size(rng);
    const BoundingBox bbox = BoundingBox::from_xy(300000, 4500000, 300000 + 30.0 * w,
                                                  4500000 + 30.0 * h);
    const Patch p = test::make_patch(2, bbox, CrsDef::from_epsg(32619), Resolution(30.0),
                                     SampleType::U16, [&](int, auto, auto) { return value(rng); });
    const auto path = dir / ("p" + std::to_string(i) + ".tif");
    write_geotiff(path, p);

    const SceneMetadata m = parse_geotiff_header(path);
    EXPECT_EQ(m.shape, p.shape);
    EXPECT_EQ(m.bounds(), bbox);
    EXPECT_EQ(m.crs, p.crs);
    EXPECT_EQ(m.bands, 2);
    EXPECT_EQ(m.sample_type, SampleType::U16);
    EXPECT_EQ(m.block_layout, (BlockLayout{true, 512, 512}));

    BlockCache cache(std::size_t{256} << 20);
    const Patch back = read_window(m, m.bounds(), cache);
    ASSERT_EQ(back.shape, p.shape);
    EXPECT_EQ(back.samples, p.samples);
  }
}

TEST(WriteGeotiffTest, MaskedCellsReceiveNodata) {
  TempDir dir("rio");
  Patch p = test::make_patch(1, BoundingBox::from_xy(0, 0, 4, 4), CrsDef::from_epsg(5070),
                             Resolution(1.0), SampleType::U8, [](int, auto r, auto c) {
                               return 10 + r * 4 + c;
                             });
  p.valid[5] = 0;
  p.fill = 0.0f;
  WriteOptions o;
  o.nodata = 255;
  write_geotiff(dir / "m.tif", p, o);
  const SceneMetadata m = parse_geotiff_header(dir / "m.tif");
  ASSERT_TRUE(m.nodata.has_value());
  EXPECT_EQ(*m.nodata, 255.0);
  BlockCache cache(1 << 20);
  const auto block = read_block(m, 0, 0, 0, cache);
  EXPECT_EQ(block->value(1, 1), 255.0f);
  EXPECT_EQ(block->value(1, 2), 16.0f);
  // beyond the image edge
  EXPECT_EQ(block->value(10, 10), 255.0f);
  const Patch back = read_window(m, m.bounds(), cache);
  EXPECT_FALSE(back.is_valid(1, 1));
  EXPECT_TRUE(back.is_valid(1, 2));
}

TEST(WriteGeotiffTest, DeflateRoundTrip) {
  TempDir dir("rio");
  const Patch p = test::make_patch(3, BoundingBox::from_xy(0, 0, 600, 40), CrsDef::from_epsg(3857),
                                   Resolution(1.0), SampleType::F32,
                                   [](int b, auto r, auto c) { return b * 0.25 + r - 0.5 * c; });
  WriteOptions o;
  o.compression = Compression::Deflate;
  o.tile_size = 256;
  write_geotiff(dir / "d.tif", p, o);
  const SceneMetadata m = parse_geotiff_header(dir / "d.tif");
  EXPECT_EQ(m.compression, Compression::Deflate);
  EXPECT_EQ(m.blocks_across(), 3);
  BlockCache cache(std::size_t{64} << 20);
  EXPECT_EQ(read_window(m, m.bounds(), cache).samples, p.samples);
}

TEST(ReadBlockTest, EdgeTilePaddedAndDeterministic) {
  TempDir dir("rio");
  const Patch p = test::make_patch(1, BoundingBox::from_xy(0, 0, 600, 20), CrsDef::from_epsg(5070),
                                   Resolution(1.0), SampleType::U16,
                                   [](int, auto r, auto c) { return 1 + r + c; });
  WriteOptions o;
  o.nodata = 0;
  write_geotiff(dir / "e.tif", p, o);
  const SceneMetadata m = parse_geotiff_header(dir / "e.tif");
  ASSERT_EQ(m.blocks_across(), 2);
  const auto a = decode_block(m, 0, 0, 1);
  const auto b = decode_block(m, 0, 0, 1);
  EXPECT_EQ(a->width, 512);
  EXPECT_EQ(a->height, 512);
  EXPECT_EQ(a->data.size(), 512u * 512u * 2u);
  EXPECT_EQ(a->data, b->data);
  EXPECT_EQ(a->value(0, 599 - 512), 600.0f);
  EXPECT_EQ(a->value(0, 600 - 512), 0.0f);
  EXPECT_EQ(a->value(19, 0), 1 + 19 + 512.0f);
  EXPECT_EQ(a->value(20, 0), 0.0f);
  BlockCache cache(1 << 20);
  EXPECT_THROW(read_block(m, 0, 0, 2, cache), Error);
}
