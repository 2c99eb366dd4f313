#include "geopatch/dataset.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <utility>

#include "geopatch/error.hpp"

namespace geopatch {

namespace fs = std::filesystem;

namespace {

std::vector<fs::path> discover(const fs::path& root, const std::string& glob) {
  std::vector<fs::path> files;
  std::error_code ec;
  if (fs::is_regular_file(root, ec)) {
    files.push_back(root);
    return files;
  }
  if (!fs::is_directory(root, ec)) {
    return files;
  }
  for (const auto& entry : fs::directory_iterator(root, ec)) {
    if (entry.is_regular_file() &&
        fnmatch(glob.c_str(), entry.path().filename().c_str(), 0) == 0) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

// Copies valid pixels of `src` onto `dst`; with `only_empty` already valid
// pixels of `dst` are kept.
void overlay(Patch& dst, const Patch& src, bool only_empty) {
  if (dst.bands != src.bands || dst.shape != src.shape) {
    throw Error(ErrorCode::InvalidArgument, "cannot mosaic patches of different layout");
  }
  const std::size_t plane = dst.plane_size();
  for (std::size_t i = 0; i < plane; ++i) {
    if (!src.valid[i] || (only_empty && dst.valid[i])) {
      continue;
    }
    dst.valid[i] = 1;
    for (int b = 0; b < dst.bands; ++b) {
      dst.samples[b * plane + i] = src.samples[b * plane + i];
    }
  }
}

Sample single(std::string role, Patch patch, const BoundingBox& b, const CrsDef& crs,
              const Resolution& res) {
  Sample s;
  s.bbox = b;
  s.crs = crs;
  s.res = res;
  s.all_invalid = patch.valid_count() == 0;
  s.patches.emplace(std::move(role), std::move(patch));
  return s;
}

void require_inside(const GeoDataset& d, const BoundingBox& b) {
  if (!b.is_valid() || !b.intersects(d.bounds())) {
    throw Error(ErrorCode::QueryOutsideBounds,
                b.to_string() + " misses dataset bounds " + d.bounds().to_string());
  }
}

void require_same_grid(const GeoDataset& a, const GeoDataset& b) {
  if (!(a.crs() == b.crs()) || !(a.res() == b.res())) {
    throw Error(ErrorCode::InvalidArgument,
                "composed datasets must share crs and resolution (" + a.crs().to_string() +
                    " vs " + b.crs().to_string() + ")");
  }
}

Resolution parse_res(const std::string& text) {
  const auto v = parse_double_list(text);
  if (v.size() == 1) return Resolution(v[0]);
  if (v.size() == 2) return Resolution(v[0], v[1]);
  throw Error(ErrorCode::ParseError, "res must be one or two numbers");
}

bool on_grid(const SceneMetadata& s, const CrsDef& crs, const Resolution& res) {
  if (!(s.crs == crs)) {
    return false;
  }
  const Resolution r = s.res();
  auto near = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); };
  auto aligned = [&](double v, double step) {
    const double k = v / step;
    return std::abs(k - std::round(k)) <= 1e-6;
  };
  return near(r.xres, res.xres) && near(r.yres, res.yres) &&
         aligned(s.transform.origin_x, res.xres) && aligned(s.transform.origin_y, res.yres);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const Patch& Sample::at(const std::string& role) const {
  const auto it = patches.find(role);
  if (it == patches.end()) {
    throw Error(ErrorCode::InvalidArgument, "sample has no layer '" + role + "'");
  }
  return it->second;
}

// --- RasterLayerDataset ------------------------------------------------------

std::shared_ptr<RasterLayerDataset> RasterLayerDataset::open(const RasterLayerConfig& config,
                                                             const CrsDef& crs,
                                                             const Resolution& res,
                                                             std::shared_ptr<BlockCache> cache) {
  crs.validate();
  std::shared_ptr<RasterLayerDataset> d(new RasterLayerDataset());
  d->config_ = config;
  d->crs_ = crs;
  d->res_ = res;
  d->cache_ = cache ? std::move(cache) : std::make_shared<BlockCache>();

  const FilenameTimePattern* tp = config.time_pattern.regex.empty() ? nullptr : &config.time_pattern;
  for (const fs::path& path : discover(config.root, config.glob)) {
    try {
      SceneMetadata scene = parse_geotiff_header(path, tp);
      const BoundingBox fp = transform_bbox(scene.crs, crs, scene.bounds());
      if (!d->scenes_.empty() && scene.bands != d->scenes_.front().bands) {
        throw Error(ErrorCode::InvalidArgument,
                    path.string() + ": band count differs from earlier scenes");
      }
      d->scenes_.push_back(std::move(scene));
      d->footprints_.push_back(fp);
    } catch (const Error& e) {
      if (config.strict) {
        throw;
      }
      d->warnings_.push_back(path.string() + ": " + e.what());
    }
  }
  if (d->scenes_.empty()) {
    throw Error(ErrorCode::NoScenesFound,
                "no readable scenes match " + (config.root / config.glob).string());
  }
  d->index_ = SpatialIndex(d->footprints_);
  d->bounds_ = d->footprints_.front();
  for (const auto& fp : d->footprints_) {
    d->bounds_ = bbox_union(d->bounds_, fp);
  }

  if (config.is_label && config.resampling == ResampleMethod::Bilinear) {
    throw Error(ErrorCode::InvalidArgument, "label layers must use nearest resampling");
  }
  if (config.resampling) {
    d->method_ = *config.resampling;
  } else {
    d->method_ = !config.is_label && d->scenes_.front().sample_type == SampleType::F32
                     ? ResampleMethod::Bilinear
                     : ResampleMethod::Nearest;
  }
  return d;
}

Patch RasterLayerDataset::query_patch(const BoundingBox& b) const {
  Patch out = Patch::empty(bands(), b, crs_, res_, config_.fill);
  out.sample_type = scenes_.front().sample_type;
  ResampleOptions opts;
  opts.method = method_;
  opts.fill = config_.fill;
  opts.max_error_px = config_.max_error_px;
  opts.policy = policy_;
  for (const std::size_t id : index_.query(b)) {
    const Patch p = warp_scene(scenes_[id], crs_, b, res_, *cache_, opts);
    overlay(out, p, false);
  }
  return out;
}

Sample RasterLayerDataset::query(const BoundingBox& b) const {
  require_inside(*this, b);
  return single(config_.role, query_patch(b), b, crs_, res_);
}

// --- VectorLayerDataset ------------------------------------------------------

std::shared_ptr<VectorLayerDataset> VectorLayerDataset::from_polygons(PolygonSet polys,
                                                                      std::string role,
                                                                      const CrsDef& crs,
                                                                      const Resolution& res) {
  crs.validate();
  if (polys.empty()) {
    throw Error(ErrorCode::NoScenesFound, "vector layer has no polygons");
  }
  std::shared_ptr<VectorLayerDataset> d(new VectorLayerDataset());
  d->role_ = std::move(role);
  d->crs_ = crs;
  d->res_ = res;
  if (!(polys.crs == crs)) {
    const PointTransformer tr(polys.crs, crs);
    for (auto& poly : polys.polygons) {
      for (auto& ring : poly.rings) {
        for (auto& p : ring.points) {
          const ProjXY q = tr({p.x, p.y});
          p = {q.x, q.y};
        }
      }
    }
    polys.crs = crs;
  }
  std::vector<BoundingBox> boxes;
  for (const auto& poly : polys.polygons) {
    PolygonSet one;
    one.polygons.push_back(poly);
    boxes.push_back(one.bounds());
  }
  d->bounds_ = polys.bounds();
  d->index_ = SpatialIndex(boxes);
  d->polys_ = std::move(polys);
  return d;
}

std::shared_ptr<VectorLayerDataset> VectorLayerDataset::open(const VectorLayerConfig& config,
                                                             const CrsDef& crs,
                                                             const Resolution& res) {
  PolygonSet merged;
  merged.crs = crs;
  bool first = true;
  for (const fs::path& path : discover(config.root, config.glob)) {
    PolygonSet part = load_polygons(path, config.parse);
    if (!(part.crs == crs)) {
      const PointTransformer tr(part.crs, crs);
      for (auto& poly : part.polygons) {
        for (auto& ring : poly.rings) {
          for (auto& p : ring.points) {
            const ProjXY q = tr({p.x, p.y});
            p = {q.x, q.y};
          }
        }
      }
    }
    if (first) {
      merged.crs = crs;
      first = false;
    }
    for (auto& poly : part.polygons) {
      merged.polygons.push_back(std::move(poly));
    }
  }
  if (merged.empty()) {
    throw Error(ErrorCode::NoScenesFound,
                "no polygons found under " + (config.root / config.glob).string());
  }
  return from_polygons(std::move(merged), config.role, crs, res);
}

Sample VectorLayerDataset::query(const BoundingBox& b) const {
  require_inside(*this, b);
  PolygonSet subset;
  subset.crs = crs_;
  for (const std::size_t id : index_.query(b)) {
    subset.polygons.push_back(polys_.polygons[id]);
  }
  return single(role_, rasterize(subset, b, res_, policy_), b, crs_, res_);
}

// --- Composition -----------------------------------------------------------------

IntersectionDataset::IntersectionDataset(DatasetPtr a, DatasetPtr b)
    : a_(std::move(a)), b_(std::move(b)) {
  require_same_grid(*a_, *b_);
  for (const auto& ra : a_->roles()) {
    for (const auto& rb : b_->roles()) {
      if (ra == rb) {
        throw Error(ErrorCode::InvalidArgument, "both layers use the role '" + ra + "'");
      }
    }
  }
  bounds_ = bbox_intersection(a_->bounds(), b_->bounds());
  for (const auto& fa : a_->footprints()) {
    for (const auto& fb : b_->footprints()) {
      if (fa.intersects(fb)) {
        footprints_.push_back(bbox_intersection(fa, fb));
      }
    }
  }
}

std::vector<std::string> IntersectionDataset::roles() const {
  auto r = a_->roles();
  for (auto& x : b_->roles()) {
    r.push_back(std::move(x));
  }
  return r;
}

Sample IntersectionDataset::query(const BoundingBox& b) const {
  require_inside(*this, b);
  Sample s = a_->query(b);
  Sample t = b_->query(b);
  s.all_invalid = s.all_invalid && t.all_invalid;
  for (auto& [role, patch] : t.patches) {
    s.patches.emplace(role, std::move(patch));
  }
  return s;
}

void IntersectionDataset::set_exec_policy(ExecPolicy policy) {
  a_->set_exec_policy(policy);
  b_->set_exec_policy(policy);
}

UnionDataset::UnionDataset(DatasetPtr a, DatasetPtr b) : a_(std::move(a)), b_(std::move(b)) {
  require_same_grid(*a_, *b_);
  if (a_->roles().size() != 1 || b_->roles().size() != 1) {
    throw Error(ErrorCode::InvalidArgument, "union needs single-layer constituents");
  }
  role_ = a_->roles().front();
  bounds_ = bbox_union(a_->bounds(), b_->bounds());
}

std::vector<BoundingBox> UnionDataset::footprints() const {
  auto f = a_->footprints();
  for (const auto& x : b_->footprints()) {
    f.push_back(x);
  }
  return f;
}

Sample UnionDataset::query(const BoundingBox& b) const {
  require_inside(*this, b);
  std::optional<Patch> out;
  for (const DatasetPtr& d : {a_, b_}) {
    if (!b.intersects(d->bounds())) {
      continue;
    }
    Sample part = d->query(b);
    Patch& p = part.patches.begin()->second;
    if (!out) {
      out = std::move(p);
    } else {
      overlay(*out, p, true);
    }
  }
  return single(role_, std::move(*out), b, crs(), res());
}

void UnionDataset::set_exec_policy(ExecPolicy policy) {
  a_->set_exec_policy(policy);
  b_->set_exec_policy(policy);
}

DatasetPtr intersect(DatasetPtr a, DatasetPtr b) {
  return std::make_shared<IntersectionDataset>(std::move(a), std::move(b));
}

DatasetPtr unite(DatasetPtr a, DatasetPtr b) {
  return std::make_shared<UnionDataset>(std::move(a), std::move(b));
}

Sample dataset_query(const GeoDataset& d, const BoundingBox& b) { return d.query(b); }

std::vector<const RasterLayerDataset*> raster_layers(const GeoDataset& d) {
  if (const auto* r = dynamic_cast<const RasterLayerDataset*>(&d)) {
    return {r};
  }
  std::vector<const RasterLayerDataset*> out;
  auto add = [&](const DatasetPtr& x) {
    for (const auto* r : raster_layers(*x)) out.push_back(r);
  };
  if (const auto* i = dynamic_cast<const IntersectionDataset*>(&d)) {
    add(i->first());
    add(i->second());
  } else if (const auto* u = dynamic_cast<const UnionDataset*>(&d)) {
    add(u->first());
    add(u->second());
  }
  return out;
}

// --- Config ------------------------------------------------------------------------

namespace {

DatasetPtr open_layer(const Config& cfg, const std::string& section, const CrsDef& crs,
                      const Resolution& res, const std::shared_ptr<BlockCache>& cache) {
  if (!cfg.has_section(section)) {
    throw Error(ErrorCode::ParseError, "missing layer section [" + section + "]");
  }
  const std::string type = cfg.get_string(section, "type", "raster");
  if (type == "raster") {
    RasterLayerConfig rc;
    rc.root = cfg.resolve(cfg.require(section, "root"));
    rc.glob = cfg.get_string(section, "glob", rc.glob);
    rc.role = cfg.get_string(section, "role", section);
    rc.is_label = cfg.get_bool(section, "is_label", false);
    if (const auto m = cfg.get(section, "resampling")) {
      rc.resampling = parse_resample_method(*m);
    }
    rc.time_pattern.regex = cfg.get_string(section, "time_regex", "");
    rc.time_pattern.format = cfg.get_string(section, "time_format", rc.time_pattern.format);
    rc.fill = static_cast<float>(cfg.get_double(section, "fill", 0.0));
    rc.max_error_px = cfg.get_double(section, "max_error_px", rc.max_error_px);
    rc.strict = cfg.get_bool(section, "strict", true);
    return RasterLayerDataset::open(rc, crs, res, cache);
  }
  if (type == "vector") {
    VectorLayerConfig vc;
    vc.root = cfg.resolve(cfg.require(section, "root"));
    vc.glob = cfg.get_string(section, "glob", vc.glob);
    vc.role = cfg.get_string(section, "role", section);
    vc.parse.burn_property = cfg.get_string(section, "burn_property", vc.parse.burn_property);
    if (const auto c = cfg.get(section, "source_crs")) {
      vc.parse.crs = CrsDef::parse(*c);
    }
    return VectorLayerDataset::open(vc, crs, res);
  }
  throw Error(ErrorCode::ParseError, "unknown layer type '" + type + "'");
}

}  // namespace

DatasetPtr open_dataset(const Config& cfg, std::shared_ptr<BlockCache> cache) {
  if (!cache) {
    cache = std::make_shared<BlockCache>(BlockCache::capacity_from_env());
  }
  const CrsDef crs = CrsDef::parse(cfg.require("dataset", "crs"));
  const Resolution res = parse_res(cfg.require("dataset", "res"));
  const auto layers = cfg.get_list("dataset", "layers");
  if (layers.empty()) {
    throw Error(ErrorCode::ParseError, "[dataset] layers is empty");
  }
  const auto compose = cfg.get("dataset", "compose");
  if (layers.size() > 1 && !compose) {
    throw Error(ErrorCode::ParseError, "[dataset] compose is required with several layers");
  }
  if (compose && *compose != "intersection" && *compose != "union") {
    throw Error(ErrorCode::ParseError, "unknown compose '" + *compose + "'");
  }
  DatasetPtr d = open_layer(cfg, layers.front(), crs, res, cache);
  for (std::size_t i = 1; i < layers.size(); ++i) {
    DatasetPtr next = open_layer(cfg, layers[i], crs, res, cache);
    d = *compose == "intersection" ? intersect(d, next) : unite(d, next);
  }
  return d;
}

DatasetPtr open_dataset(const fs::path& config_path, std::shared_ptr<BlockCache> cache) {
  return open_dataset(Config::load(config_path), std::move(cache));
}

fs::path preprocess_dataset(const fs::path& config_path, const fs::path& out_dir,
                            ExecPolicy policy) {
  Config cfg = Config::load(config_path);
  const CrsDef crs = CrsDef::parse(cfg.require("dataset", "crs"));
  const Resolution res = parse_res(cfg.require("dataset", "res"));
  fs::create_directories(out_dir);
  auto cache = std::make_shared<BlockCache>(BlockCache::capacity_from_env());

  for (const std::string& section : cfg.get_list("dataset", "layers")) {
    const fs::path root = fs::absolute(cfg.resolve(cfg.require(section, "root")));
    cfg.set(section, "root", root.string());
    if (cfg.get_string(section, "type", "raster") != "raster") {
      continue;
    }
    Config single_layer = cfg;
    single_layer.set("dataset", "layers", section);
    const auto layer = std::dynamic_pointer_cast<RasterLayerDataset>(
        open_dataset(single_layer, cache));
    const auto& scenes = layer->scenes();
    const bool aligned = std::all_of(scenes.begin(), scenes.end(),
                                     [&](const SceneMetadata& s) { return on_grid(s, crs, res); });
    if (aligned) {
      continue;
    }
    const fs::path dir = fs::absolute(out_dir / section);
    fs::create_directories(dir);
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      const SceneMetadata& s = scenes[i];
      const BoundingBox fp = layer->footprints()[i];
      const BoundingBox snapped = BoundingBox::from_xy(
          std::floor(fp.minx / res.xres) * res.xres, std::floor(fp.miny / res.yres) * res.yres,
          std::ceil(fp.maxx / res.xres) * res.xres, std::ceil(fp.maxy / res.yres) * res.yres);
      WarpFileOptions wo;
      wo.resample.method = layer->method();
      wo.resample.max_error_px = layer->config().max_error_px;
      wo.resample.policy = policy;
      wo.nodata = s.nodata.value_or(0.0);
      warp_to_file(s, dir / s.path.filename(), crs, snapped, grid_shape(snapped, res), *cache, wo);
    }
    cfg.set(section, "root", dir.string());
  }
  cfg.set("dataset", "res", format_double(res.xres) + ", " + format_double(res.yres));
  const fs::path out = out_dir / "dataset.ini";
  cfg.save(out);
  return out;
}

}  // namespace geopatch
