#include <fstream>

#include <gtest/gtest.h>

#include "geopatch/config.hpp"
#include "geopatch/error.hpp"
#include "test_util.hpp"

using namespace geopatch;
using geopatch::test::TempDir;

TEST(ConfigTest, ParsesSectionsKeysAndComments) {
  const Config c = Config::parse(R"(
; leading comment
[dataset]
crs = EPSG:5070   ; trailing comment
res = 30
layers = image, mask,
strict = yes

# hash comment
[image]
root = images
)",
                                 "/data");
  EXPECT_EQ(c.sections(), (std::vector<std::string>{"dataset", "image"}));
  EXPECT_EQ(c.get("dataset", "crs"), "EPSG:5070");
  EXPECT_EQ(c.get_double("dataset", "res", 0), 30.0);
  EXPECT_EQ(c.get_list("dataset", "layers"), (std::vector<std::string>{"image", "mask"}));
  EXPECT_TRUE(c.get_bool("dataset", "strict", false));
  EXPECT_EQ(c.get_int("dataset", "missing", 4), 4);
  EXPECT_FALSE(c.get("image", "glob").has_value());
  EXPECT_EQ(c.resolve("images"), std::filesystem::path("/data/images"));
  EXPECT_EQ(c.resolve("/abs"), std::filesystem::path("/abs"));
}

TEST(ConfigTest, RequireAndTypeErrors) {
  const Config c = Config::parse("[a]\nx = abc\n");
  EXPECT_THROW(c.require("a", "y"), Error);
  EXPECT_THROW(c.get_double("a", "x", 0), Error);
  EXPECT_THROW(c.get_int("a", "x", 0), Error);
  EXPECT_THROW(c.get_bool("a", "x", false), Error);
  EXPECT_THROW(Config::parse("[a\nx = 1\n"), Error);
}

TEST(ConfigTest, SaveAndLoadRoundTrip) {
  TempDir dir("cfg");
  Config c = Config::parse("");
  c.set("dataset", "crs", "EPSG:32619");
  c.set("dataset", "res", "30");
  c.set("layer", "root", "scenes");
  c.set("dataset", "res", "10");
  c.save(dir / "out.ini");
  const Config back = Config::load(dir / "out.ini");
  EXPECT_EQ(back.get("dataset", "res"), "10");
  EXPECT_EQ(back.get("layer", "root"), "scenes");
  EXPECT_EQ(back.base_dir(), dir.path());
  EXPECT_THROW(Config::load(dir / "nope.ini"), Error);
}

TEST(ConfigTest, NumberLists) {
  EXPECT_EQ(parse_double_list("1, 2.5 ,-3"), (std::vector<double>{1, 2.5, -3}));
  EXPECT_EQ(parse_int_list("1,2,4"), (std::vector<std::int64_t>{1, 2, 4}));
  EXPECT_THROW(parse_int_list("1,x"), Error);
}
