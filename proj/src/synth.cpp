#include "geopatch/synth.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <numbers>
#include <string>

#include "geopatch/error.hpp"

namespace geopatch {

namespace {

double checker_modulus(SampleType t) noexcept {
  switch (t) {
    case SampleType::U8:
      return 256.0;
    case SampleType::I16:
      return 32768.0;
    default:
      return 65536.0;
  }
}

std::string date_tag(int index) {
  std::tm base{};
  base.tm_year = 2019 - 1900;
  base.tm_mon = 5;
  base.tm_mday = 1;
  const std::time_t t = timegm(&base) + static_cast<std::time_t>(index) * 16 * 86400;
  std::tm out{};
  gmtime_r(&t, &out);
  char buf[16];
  std::strftime(buf, sizeof buf, "%Y%m%d", &out);
  return buf;
}

double snap_down(double v, double step) { return std::floor(v / step) * step; }
double snap_up(double v, double step) { return std::ceil(v / step) * step; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write " + path.string());
  }
  out << text;
  if (!out) {
    throw Error(ErrorCode::IoError, "write failed for " + path.string());
  }
}

std::string layer_section(const std::string& name, const std::string& root, bool is_label,
                          const std::string& time_regex) {
  std::string s = "[" + name + "]\n";
  s += "type = raster\n";
  s += "root = " + root + "\n";
  s += "glob = *.tif\n";
  s += "role = " + name + "\n";
  s += std::string("is_label = ") + (is_label ? "true" : "false") + "\n";
  if (!time_regex.empty()) {
    s += "time_regex = " + time_regex + "\n";
    s += "time_format = %Y%m%d\n";
  }
  return s;
}

std::string dataset_header(const DeskFixtureSpec& spec, const std::string& layers,
                           const std::string& compose) {
  std::string s = "[dataset]\n";
  s += "crs = " + spec.dataset_crs.to_string() + "\n";
  char res[64];
  std::snprintf(res, sizeof res, "%.17g", spec.dataset_res);
  s += std::string("res = ") + res + "\n";
  s += "layers = " + layers + "\n";
  if (!compose.empty()) {
    s += "compose = " + compose + "\n";
  }
  return s + "\n";
}

}  // namespace

SynthEncoding parse_synth_encoding(std::string_view text) {
  if (text == "constant") return SynthEncoding::Constant;
  if (text == "checker") return SynthEncoding::Checker;
  if (text == "coords") return SynthEncoding::Coords;
  throw Error(ErrorCode::ParseError, "unknown encoding '" + std::string(text) + "'");
}

std::string_view to_string(SynthEncoding e) noexcept {
  switch (e) {
    case SynthEncoding::Constant:
      return "constant";
    case SynthEncoding::Checker:
      return "checker";
    case SynthEncoding::Coords:
      return "coords";
  }
  return "?";
}

void SynthSpec::validate() const {
  crs.validate();
  if (!bounds.is_valid() || bounds.width() <= 0.0 || bounds.height() <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "synthetic raster bounds are empty");
  }
  if (bands < 1) {
    throw Error(ErrorCode::InvalidArgument, "synthetic raster needs at least one band");
  }
  if (encoding == SynthEncoding::Coords) {
    if (bands < 2) {
      throw Error(ErrorCode::InvalidArgument, "coords encoding needs two bands");
    }
    if (sample_type != SampleType::F32) {
      throw Error(ErrorCode::InvalidArgument, "coords encoding needs f32 samples");
    }
  }
  if (checker_res && !(*checker_res > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "checker_res must be positive");
  }
  if (tile_size < 16 || tile_size % 16 != 0) {
    throw Error(ErrorCode::InvalidArgument, "tile size must be a positive multiple of 16");
  }
}

double synth_value(const SynthSpec& spec, int band, double x, double y) noexcept {
  switch (spec.encoding) {
    case SynthEncoding::Constant:
      return spec.constant;
    case SynthEncoding::Checker: {
      const double cell = spec.checker_res.value_or(spec.res.xres);
      const double m = checker_modulus(spec.sample_type);
      const double k = std::floor(x / cell) + std::floor(y / cell) + band;
      const double r = std::fmod(k, m);
      return r < 0.0 ? r + m : r;
    }
    case SynthEncoding::Coords:
      return band == 0 ? x : band == 1 ? y : 0.0;
  }
  return 0.0;
}

void synth_raster(const SynthSpec& spec, const std::filesystem::path& path, ExecPolicy policy) {
  spec.validate();
  const GridShape shape = grid_shape(spec.bounds, spec.res);
  const GeoTransform gt = GeoTransform::from_bounds(spec.bounds, spec.res);
  const CrsDef ref = spec.reference_crs.value_or(spec.crs);
  const PointTransformer to_ref(spec.crs, ref);
  const float miss = static_cast<float>(spec.nodata.value_or(0.0));

  TiledTiffWriter writer(path, {shape, spec.bands, spec.sample_type, gt, spec.crs, spec.nodata,
                                spec.tile_size, spec.compression});
  std::vector<float> strip;
  for (std::int64_t tr = 0; tr < writer.tile_rows(); ++tr) {
    const std::int64_t nrows = writer.rows_in_tile_row(tr);
    const std::size_t plane = static_cast<std::size_t>(nrows * shape.cols);
    strip.assign(plane * static_cast<std::size_t>(spec.bands), 0.0f);
    const std::int64_t row0 = tr * spec.tile_size;
    kernels::for_each_row(policy, nrows, [&](std::int64_t r) {
      for (std::int64_t c = 0; c < shape.cols; ++c) {
        const WorldPoint w = gt.pixel_to_world(static_cast<double>(row0 + r) + 0.5,
                                               static_cast<double>(c) + 0.5);
        const std::size_t idx = static_cast<std::size_t>(r * shape.cols + c);
        ProjXY p{w.x, w.y};
        bool ok = true;
        if (!to_ref.is_identity()) {
          try {
            p = to_ref(p);
          } catch (const Error&) {
            ok = false;
          }
        }
        for (int b = 0; b < spec.bands; ++b) {
          strip[static_cast<std::size_t>(b) * plane + idx] =
              ok ? static_cast<float>(synth_value(spec, b, p.x, p.y)) : miss;
        }
      }
    });
    writer.write_tile_row(tr, strip);
  }
  writer.finish();
}

std::vector<SynthSpec> desk_fixture_scenes(const DeskFixtureSpec& spec) {
  if (spec.grid_cols < 1 || spec.grid_rows < 1 || spec.zones.empty()) {
    throw Error(ErrorCode::InvalidArgument, "fixture grid must be non-empty");
  }
  if (spec.scene_px < 1 || !(spec.res > 0.0) || spec.overlap < 0.0 || spec.overlap >= 1.0) {
    throw Error(ErrorCode::InvalidArgument, "invalid fixture scene geometry");
  }
  const double size = static_cast<double>(spec.scene_px) * spec.res;
  const double spacing = size * (1.0 - spec.overlap);
  const double deg = std::numbers::pi / 180.0;
  const double m_per_deg_lat = 110574.0;
  const double m_per_deg_lon = 111320.0 * std::cos(spec.center_lat * deg);

  std::vector<SynthSpec> scenes;
  for (int r = 0; r < spec.grid_rows; ++r) {
    for (int c = 0; c < spec.grid_cols; ++c) {
      const double ox = (c - (spec.grid_cols - 1) / 2.0) * spacing;
      const double oy = ((spec.grid_rows - 1) / 2.0 - r) * spacing;
      const double lon = spec.center_lon + ox / m_per_deg_lon;
      const double lat = spec.center_lat + oy / m_per_deg_lat;
      const int zone = spec.zones[static_cast<std::size_t>(c) % spec.zones.size()];
      const CrsDef crs = CrsDef::from_epsg(32600 + zone);
      const ProjXY center = project_forward(crs, {lon, lat});
      const double minx = std::round((center.x - size / 2.0) / spec.res) * spec.res;
      const double maxy = std::round((center.y + size / 2.0) / spec.res) * spec.res;

      SynthSpec s;
      s.crs = crs;
      s.bounds = BoundingBox::from_xy(minx, maxy - size, minx + size, maxy);
      s.res = Resolution(spec.res);
      s.bands = spec.image_bands;
      s.sample_type = spec.image_type;
      s.encoding = spec.image_encoding;
      s.constant = static_cast<double>(r * spec.grid_cols + c + 1);
      if (spec.image_encoding == SynthEncoding::Coords) {
        s.reference_crs = spec.reference_crs;
      }
      s.tile_size = spec.tile_size;
      s.compression = spec.compression;
      scenes.push_back(s);
    }
  }
  return scenes;
}

SynthSpec desk_fixture_label(const DeskFixtureSpec& spec) {
  BoundingBox hull;
  bool first = true;
  for (const SynthSpec& s : desk_fixture_scenes(spec)) {
    const BoundingBox b = transform_bbox(s.crs, spec.label_crs, s.bounds);
    hull = first ? b : bbox_union(hull, b);
    first = false;
  }
  const double pad = 2.0 * spec.label_res;
  SynthSpec label;
  label.crs = spec.label_crs;
  label.bounds = BoundingBox::from_xy(
      snap_down(hull.minx - pad, spec.label_res), snap_down(hull.miny - pad, spec.label_res),
      snap_up(hull.maxx + pad, spec.label_res), snap_up(hull.maxy + pad, spec.label_res));
  label.res = Resolution(spec.label_res);
  label.bands = spec.label_bands;
  label.sample_type = spec.label_type;
  label.encoding = spec.label_encoding;
  label.constant = 1.0;
  if (spec.label_encoding == SynthEncoding::Coords) {
    label.reference_crs = spec.reference_crs;
  } else if (spec.label_encoding == SynthEncoding::Checker) {
    label.checker_res = spec.dataset_res;
  }
  label.tile_size = spec.tile_size;
  label.compression = spec.compression;
  return label;
}

DeskFixture make_desk_fixture(const std::filesystem::path& root, const DeskFixtureSpec& spec,
                              ExecPolicy policy) {
  namespace fs = std::filesystem;
  DeskFixture out;
  out.root = root;
  const fs::path image_dir = root / "images";
  const fs::path label_dir = root / "labels";
  fs::create_directories(image_dir);
  fs::create_directories(label_dir);

  const auto scenes = desk_fixture_scenes(spec);
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const int r = static_cast<int>(i) / spec.grid_cols;
    const int c = static_cast<int>(i) % spec.grid_cols;
    const int zone = *scenes[i].crs.epsg - 32600;
    const std::string name = "scene_z" + std::to_string(zone) + "_r" + std::to_string(r) + "c" +
                             std::to_string(c) + "_" + date_tag(static_cast<int>(i)) + ".tif";
    const fs::path p = image_dir / name;
    synth_raster(scenes[i], p, policy);
    out.images.push_back(p);
  }
  out.label = label_dir / "labels_albers.tif";
  synth_raster(desk_fixture_label(spec), out.label, policy);

  const std::string time_regex = "_([0-9]{8})\\.tif$";
  const std::string image = layer_section("image", "images", false, time_regex);
  const std::string mask = layer_section("mask", "labels", true, "");
  out.images_config = root / "images.ini";
  out.labels_config = root / "labels.ini";
  out.intersection_config = root / "intersection.ini";
  write_text(out.images_config, dataset_header(spec, "image", "") + image);
  write_text(out.labels_config, dataset_header(spec, "mask", "") + mask);
  write_text(out.intersection_config,
             dataset_header(spec, "image, mask", "intersection") + image + "\n" + mask);
  return out;
}

namespace {

Compression parse_compression(const std::string& text) {
  if (text == "none") return Compression::None;
  if (text == "deflate") return Compression::Deflate;
  throw Error(ErrorCode::ParseError, "unknown compression '" + text + "'");
}

}  // namespace

SynthSpec synth_spec_from_config(const Config& cfg, const std::string& section) {
  SynthSpec s;
  s.crs = CrsDef::parse(cfg.require(section, "crs"));
  const auto b = parse_double_list(cfg.require(section, "bounds"));
  if (b.size() != 4) {
    throw Error(ErrorCode::ParseError, "[" + section + "] bounds needs four numbers");
  }
  s.bounds = BoundingBox::from_xy(b[0], b[1], b[2], b[3]);
  const auto r = parse_double_list(cfg.require(section, "res"));
  if (r.size() == 1) {
    s.res = Resolution(r[0]);
  } else if (r.size() == 2) {
    s.res = Resolution(r[0], r[1]);
  } else {
    throw Error(ErrorCode::ParseError, "[" + section + "] res needs one or two numbers");
  }
  s.bands = static_cast<int>(cfg.get_int(section, "bands", s.bands));
  s.sample_type = parse_sample_type(cfg.get_string(section, "sample_type", "u16"));
  s.encoding = parse_synth_encoding(cfg.get_string(section, "encoding", "checker"));
  s.constant = cfg.get_double(section, "constant", s.constant);
  if (const auto v = cfg.get(section, "reference_crs")) s.reference_crs = CrsDef::parse(*v);
  if (cfg.has(section, "checker_res")) s.checker_res = cfg.get_double(section, "checker_res", 0.0);
  if (cfg.has(section, "nodata")) s.nodata = cfg.get_double(section, "nodata", 0.0);
  s.tile_size = cfg.get_int(section, "tile_size", s.tile_size);
  s.compression = parse_compression(cfg.get_string(section, "compression", "none"));
  s.validate();
  return s;
}

DeskFixtureSpec desk_fixture_spec_from_config(const Config& cfg, const std::string& section) {
  DeskFixtureSpec f;
  f.grid_cols = static_cast<int>(cfg.get_int(section, "grid_cols", f.grid_cols));
  f.grid_rows = static_cast<int>(cfg.get_int(section, "grid_rows", f.grid_rows));
  if (const auto v = cfg.get(section, "zones")) {
    f.zones.clear();
    for (const auto z : parse_int_list(*v)) f.zones.push_back(static_cast<int>(z));
  }
  f.scene_px = cfg.get_int(section, "scene_px", f.scene_px);
  f.res = cfg.get_double(section, "res", f.res);
  f.overlap = cfg.get_double(section, "overlap", f.overlap);
  f.center_lon = cfg.get_double(section, "center_lon", f.center_lon);
  f.center_lat = cfg.get_double(section, "center_lat", f.center_lat);
  f.image_bands = static_cast<int>(cfg.get_int(section, "image_bands", f.image_bands));
  if (const auto v = cfg.get(section, "image_type")) f.image_type = parse_sample_type(*v);
  if (const auto v = cfg.get(section, "image_encoding")) f.image_encoding = parse_synth_encoding(*v);
  f.label_res = cfg.get_double(section, "label_res", f.label_res);
  f.label_bands = static_cast<int>(cfg.get_int(section, "label_bands", f.label_bands));
  if (const auto v = cfg.get(section, "label_type")) f.label_type = parse_sample_type(*v);
  if (const auto v = cfg.get(section, "label_encoding")) f.label_encoding = parse_synth_encoding(*v);
  if (const auto v = cfg.get(section, "label_crs")) f.label_crs = CrsDef::parse(*v);
  if (const auto v = cfg.get(section, "reference_crs")) f.reference_crs = CrsDef::parse(*v);
  if (const auto v = cfg.get(section, "dataset_crs")) f.dataset_crs = CrsDef::parse(*v);
  f.dataset_res = cfg.get_double(section, "dataset_res", f.dataset_res);
  f.tile_size = cfg.get_int(section, "tile_size", f.tile_size);
  f.compression = parse_compression(cfg.get_string(section, "compression", "none"));
  return f;
}

std::vector<std::filesystem::path> synth_from_config(const Config& cfg,
                                                     const std::filesystem::path& out_dir,
                                                     ExecPolicy policy) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  for (const std::string& section : cfg.sections()) {
    if (section == "fixture") {
      const DeskFixture f = make_desk_fixture(out_dir, desk_fixture_spec_from_config(cfg), policy);
      written.insert(written.end(), f.images.begin(), f.images.end());
      written.push_back(f.label);
      written.push_back(f.images_config);
      written.push_back(f.labels_config);
      written.push_back(f.intersection_config);
    } else {
      const auto path = out_dir / (section + ".tif");
      synth_raster(synth_spec_from_config(cfg, section), path, policy);
      written.push_back(path);
    }
  }
  if (written.empty()) {
    throw Error(ErrorCode::ParseError, "synth config describes nothing to generate");
  }
  return written;
}

}  // namespace geopatch
