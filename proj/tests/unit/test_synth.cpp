#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "geopatch/error.hpp"
#include "geopatch/synth.hpp"
#include "geopatch/warp.hpp"
#include "test_util.hpp"

using namespace geopatch;
using geopatch::test::TempDir;

namespace {

Patch read_all(const std::filesystem::path& p) {
  const SceneMetadata m = parse_geotiff_header(p);
  BlockCache cache(std::size_t{256} << 20);
  return read_window(m, m.bounds(), cache);
}

}  // namespace

TEST(SynthRasterTest, ConstantEncoding) {
  TempDir dir("synth");
  SynthSpec s;
  s.crs = CrsDef::from_epsg(32619);
  s.bounds = BoundingBox::from_xy(0, 0, 300, 200);
  s.res = Resolution(10.0);
  s.bands = 2;
  s.encoding = SynthEncoding::Constant;
  s.constant = 5;
  synth_raster(s, dir / "c.tif");
  const Patch p = read_all(dir / "c.tif");
  EXPECT_EQ(p.shape, (GridShape{20, 30}));
  for (float v : p.samples) ASSERT_EQ(v, 5.0f);
}

TEST(SynthRasterTest, CoordinateEncodingAtOrigin) {
  TempDir dir("synth");
  SynthSpec s;
  s.crs = CrsDef::from_epsg(5070);
  s.bounds = BoundingBox::from_xy(0, 0, 100, 100);
  s.res = Resolution(10.0);
  s.bands = 2;
  s.sample_type = SampleType::F32;
  s.encoding = SynthEncoding::Coords;
  synth_raster(s, dir / "xy.tif");
  const Patch p = read_all(dir / "xy.tif");
  EXPECT_EQ(p.at(0, 0, 0), 5.0f);
  EXPECT_EQ(p.at(1, 0, 0), 95.0f);
  EXPECT_EQ(p.at(0, 9, 9), 95.0f);
  EXPECT_EQ(p.at(1, 9, 9), 5.0f);
}

TEST(SynthRasterTest, CheckerFormula) {
  SynthSpec s;
  s.crs = CrsDef::from_epsg(5070);
  s.res = Resolution(30.0);
  s.encoding = SynthEncoding::Checker;
  EXPECT_EQ(synth_value(s, 0, 45.0, 75.0), 1 + 2);
  EXPECT_EQ(synth_value(s, 1, 45.0, 75.0), 1 + 2 + 1);
  EXPECT_EQ(synth_value(s, 0, -15.0, 15.0), std::fmod(-1.0 + 65536.0, 65536.0));
  s.sample_type = SampleType::U8;
  EXPECT_EQ(synth_value(s, 0, 30.0 * 200, 30.0 * 100), (300 % 256));
}

TEST(SynthRasterTest, ValidateRejectsInconsistentSpecs) {
  SynthSpec s;
  s.bounds = BoundingBox::from_xy(0, 0, 10, 10);
  s.encoding = SynthEncoding::Coords;
  s.bands = 2;
  s.sample_type = SampleType::U16;
  EXPECT_THROW(s.validate(), Error);
  s.sample_type = SampleType::F32;
  s.bands = 1;
  EXPECT_THROW(s.validate(), Error);
  s.bands = 2;
  EXPECT_NO_THROW(s.validate());
}

TEST(SynthRasterTest, CrossCrsCheckerAgreesAtGroundPoints) {
  TempDir dir("synth");
  const CrsDef utm = CrsDef::from_epsg(32619);
  const CrsDef albers = CrsDef::from_epsg(5070);

  SynthSpec a;
  a.crs = utm;
  a.bounds = BoundingBox::from_xy(400000, 4600000, 400000 + 30 * 120, 4600000 + 30 * 120);
  a.res = Resolution(30.0);
  a.reference_crs = albers;
  a.checker_res = 30.0;
  synth_raster(a, dir / "utm.tif");

  const BoundingBox fp = transform_bbox(utm, albers, a.bounds);
  SynthSpec b;
  b.crs = albers;
  b.bounds = BoundingBox::from_xy(std::floor(fp.minx / 30) * 30, std::floor(fp.miny / 30) * 30,
                                  std::ceil(fp.maxx / 30) * 30, std::ceil(fp.maxy / 30) * 30);
  b.res = Resolution(30.0);
  synth_raster(b, dir / "albers.tif");

  const Patch pa = read_all(dir / "utm.tif");
  const Patch pb = read_all(dir / "albers.tif");
  const GeoTransform ga = pa.transform();
  const GeoTransform gb = pb.transform();
  const PointTransformer tr(utm, albers);
  for (std::int64_t r = 0; r < pa.rows(); r += 7) {
    for (std::int64_t c = 0; c < pa.cols(); c += 5) {
      const WorldPoint w = ga.pixel_to_world(r + 0.5, c + 0.5);
      const ProjXY q = tr({w.x, w.y});
      const PixelCoord pc = gb.world_to_pixel(q.x, q.y);
      const auto br = static_cast<std::int64_t>(std::floor(pc.row));
      const auto bc = static_cast<std::int64_t>(std::floor(pc.col));
      ASSERT_EQ(pa.at(0, r, c), pb.at(0, br, bc)) << r << "," << c;
    }
  }
}

TEST(SynthRasterTest, SerialAndParallelAreIdentical) {
  TempDir dir("synth");
  SynthSpec s;
  s.crs = CrsDef::from_epsg(32615);
  s.bounds = BoundingBox::from_xy(300000, 4400000, 300000 + 30 * 333, 4400000 + 30 * 77);
  s.res = Resolution(30.0);
  s.bands = 3;
  s.reference_crs = CrsDef::from_epsg(5070);
  synth_raster(s, dir / "s.tif", ExecPolicy::Serial);
  synth_raster(s, dir / "p.tif", ExecPolicy::Parallel);
  EXPECT_EQ(read_all(dir / "s.tif").samples, read_all(dir / "p.tif").samples);
}

TEST(DeskFixtureTest, LayoutAndConfigs) {
  TempDir dir("synth");
  DeskFixtureSpec spec;
  spec.grid_cols = 3;
  spec.grid_rows = 2;
  spec.zones = {14, 15, 16};
  spec.scene_px = 128;
  const DeskFixture f = make_desk_fixture(dir.path(), spec);
  ASSERT_EQ(f.images.size(), 6u);
  std::set<int> epsg;
  for (const auto& p : f.images) {
    const SceneMetadata m = parse_geotiff_header(p);
    EXPECT_EQ(m.shape, (GridShape{128, 128}));
    EXPECT_EQ(m.bands, 4);
    EXPECT_EQ(m.sample_type, SampleType::U16);
    epsg.insert(*m.crs.lookup_epsg());
  }
  EXPECT_EQ(epsg, (std::set<int>{32614, 32615, 32616}));
  const SceneMetadata label = parse_geotiff_header(f.label);
  EXPECT_EQ(label.crs, CrsDef::from_epsg(5070));
  for (const auto& p : f.images) {
    const SceneMetadata m = parse_geotiff_header(p);
    const BoundingBox fp = transform_bbox(m.crs, label.crs, m.bounds());
    EXPECT_TRUE(label.bounds().contains(fp));
  }
  EXPECT_TRUE(std::filesystem::exists(f.images_config));
  EXPECT_TRUE(std::filesystem::exists(f.labels_config));
  EXPECT_TRUE(std::filesystem::exists(f.intersection_config));
  EXPECT_EQ(desk_fixture_scenes(spec).size(), 6u);
}

TEST(SynthFromConfigTest, SectionsBecomeFiles) {
  TempDir dir("synth");
  const Config cfg = Config::parse(R"(
[dem]
crs = EPSG:32619
bounds = 0, 0, 640, 320
res = 10
bands = 1
sample_type = i16
encoding = constant
constant = -7
nodata = -9999
)");
  const auto written = synth_from_config(cfg, dir.path());
  ASSERT_EQ(written.size(), 1u);
  EXPECT_EQ(written[0].filename(), "dem.tif");
  const SceneMetadata m = parse_geotiff_header(written[0]);
  EXPECT_EQ(m.sample_type, SampleType::I16);
  EXPECT_EQ(m.shape, (GridShape{32, 64}));
  ASSERT_TRUE(m.nodata.has_value());
  EXPECT_EQ(*m.nodata, -9999.0);
  EXPECT_EQ(read_all(written[0]).samples.front(), -7.0f);
}
