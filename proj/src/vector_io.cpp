#include "geopatch/vector_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json.hpp>

#include "geopatch/error.hpp"

namespace geopatch {

namespace {

using json = nlohmann::json;
using Rational = boost::multiprecision::cpp_rational;

WorldPoint parse_position(const json& p) {
  if (!p.is_array() || p.size() < 2 || !p[0].is_number() || !p[1].is_number()) {
    throw Error(ErrorCode::ParseError, "position must be [x, y]");
  }
  return {p[0].get<double>(), p[1].get<double>()};
}

Polygon parse_polygon_coords(const json& coords, std::int64_t burn) {
  if (!coords.is_array() || coords.empty()) {
    throw Error(ErrorCode::ParseError, "polygon needs at least one ring");
  }
  Polygon poly;
  poly.burn_value = burn;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (!coords[i].is_array()) {
      throw Error(ErrorCode::ParseError, "ring must be an array of positions");
    }
    Ring ring;
    for (const auto& p : coords[i]) {
      ring.points.push_back(parse_position(p));
    }
    validate_ring(ring, i == 0);
    poly.rings.push_back(std::move(ring));
  }
  return poly;
}

void append_geometry(const json& geom, std::int64_t burn, std::vector<Polygon>& out) {
  if (!geom.is_object() || !geom.contains("type") || !geom["type"].is_string()) {
    throw Error(ErrorCode::ParseError, "geometry must be an object with a type");
  }
  const std::string type = geom["type"].get<std::string>();
  if (type == "Polygon") {
    out.push_back(parse_polygon_coords(geom.at("coordinates"), burn));
  } else if (type == "MultiPolygon") {
    const json& parts = geom.at("coordinates");
    if (!parts.is_array()) {
      throw Error(ErrorCode::ParseError, "MultiPolygon coordinates must be an array");
    }
    for (const auto& part : parts) {
      out.push_back(parse_polygon_coords(part, burn));
    }
  } else {
    throw Error(ErrorCode::UnsupportedGeometry, "geometry type '" + type + "'");
  }
}

std::int64_t burn_of(const json& feature, const VectorParseOptions& o) {
  const auto props = feature.find("properties");
  if (props != feature.end() && props->is_object()) {
    const auto v = props->find(o.burn_property);
    if (v != props->end()) {
      if (!v->is_number_integer()) {
        throw Error(ErrorCode::ParseError, "property '" + o.burn_property + "' is not an integer");
      }
      return v->get<std::int64_t>();
    }
  }
  if (!o.default_burn) {
    throw Error(ErrorCode::ParseError, "feature lacks property '" + o.burn_property + "'");
  }
  return *o.default_burn;
}

void append_feature(const json& f, const VectorParseOptions& o, std::vector<Polygon>& out) {
  if (!f.is_object() || f.value("type", "") != "Feature") {
    throw Error(ErrorCode::ParseError, "expected a Feature");
  }
  const auto g = f.find("geometry");
  if (g == f.end() || g->is_null()) {
    throw Error(ErrorCode::ParseError, "feature without geometry");
  }
  append_geometry(*g, burn_of(f, o), out);
}

bool segments_touch(const WorldPoint& a, const WorldPoint& b, const WorldPoint& c,
                    const WorldPoint& d) {
  const int o1 = orient_sign(a, b, c);
  const int o2 = orient_sign(a, b, d);
  const int o3 = orient_sign(c, d, a);
  const int o4 = orient_sign(c, d, b);
  if (o1 * o2 < 0 && o3 * o4 < 0) {
    return true;
  }
  auto within = [](const WorldPoint& p, const WorldPoint& q, const WorldPoint& r) {
    return std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) && std::min(p.y, q.y) <= r.y &&
           r.y <= std::max(p.y, q.y);
  };
  return (o1 == 0 && within(a, b, c)) || (o2 == 0 && within(a, b, d)) ||
         (o3 == 0 && within(c, d, a)) || (o4 == 0 && within(c, d, b));
}

// Exact test: is center x strictly left of the crossing of edge (a, b) with
// the horizontal line through y? The edge must straddle y.
bool left_of_crossing(const WorldPoint& a, const WorldPoint& b, double x, double y) {
  const int s = orient_sign(a, b, {x, y});
  return b.y > a.y ? s > 0 : s < 0;
}

struct Edge {
  WorldPoint a;
  WorldPoint b;
};

}  // namespace

int orient_sign(const WorldPoint& a, const WorldPoint& b, const WorldPoint& p) {
  const double l = (b.x - a.x) * (p.y - a.y);
  const double r = (p.x - a.x) * (b.y - a.y);
  const double det = l - r;
  const double bound = 8.0 * std::numeric_limits<double>::epsilon() * (std::abs(l) + std::abs(r));
  if (det > bound) return 1;
  if (det < -bound) return -1;
  const Rational ex = (Rational(b.x) - Rational(a.x)) * (Rational(p.y) - Rational(a.y)) -
                      (Rational(p.x) - Rational(a.x)) * (Rational(b.y) - Rational(a.y));
  return ex > 0 ? 1 : ex < 0 ? -1 : 0;
}

BoundingBox PolygonSet::bounds() const {
  double minx = std::numeric_limits<double>::infinity();
  double miny = minx;
  double maxx = -minx;
  double maxy = -minx;
  for (const auto& poly : polygons) {
    for (const auto& ring : poly.rings) {
      for (const auto& p : ring.points) {
        minx = std::min(minx, p.x);
        maxx = std::max(maxx, p.x);
        miny = std::min(miny, p.y);
        maxy = std::max(maxy, p.y);
      }
    }
  }
  if (!(minx <= maxx)) {
    throw Error(ErrorCode::InvalidArgument, "empty polygon set has no bounds");
  }
  return BoundingBox::from_xy(minx, miny, maxx, maxy);
}

void validate_ring(const Ring& ring, bool check_simple) {
  const auto& pts = ring.points;
  if (pts.size() < 4) {
    throw Error(ErrorCode::ParseError, "ring has fewer than 4 points");
  }
  if (pts.front().x != pts.back().x || pts.front().y != pts.back().y) {
    throw Error(ErrorCode::ParseError, "ring is not closed");
  }
  for (const auto& p : pts) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw Error(ErrorCode::ParseError, "non-finite coordinate");
    }
  }
  if (!check_simple) {
    return;
  }
  // Sweep over edges ordered by min x; only x-overlapping pairs are tested.
  const std::size_t n = pts.size() - 1;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  auto lo = [&](std::size_t i) { return std::min(pts[i].x, pts[i + 1].x); };
  auto hi = [&](std::size_t i) { return std::max(pts[i].x, pts[i + 1].x); };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lo(a) < lo(b); });
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = order[k];
    for (std::size_t m = k + 1; m < n && lo(order[m]) <= hi(i); ++m) {
      const std::size_t j = order[m];
      const std::size_t d = i > j ? i - j : j - i;
      if (d == 1 || d == n - 1) {
        continue;  // neighbours share a vertex
      }
      if (segments_touch(pts[i], pts[i + 1], pts[j], pts[j + 1])) {
        throw Error(ErrorCode::ParseError, "exterior ring self-intersects");
      }
    }
  }
}

PolygonSet parse_polygons(std::string_view text, const VectorParseOptions& options) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  if (!doc.is_object()) {
    throw Error(ErrorCode::ParseError, "document must be a JSON object");
  }
  PolygonSet set;
  set.crs = options.crs;
  const auto crs = doc.find("crs");
  if (crs != doc.end() && crs->is_object()) {
    const std::string name = crs->value("properties", json::object()).value("name", "");
    const auto pos = name.find("EPSG");
    if (pos == std::string::npos) {
      throw Error(ErrorCode::ParseError, "unsupported crs name '" + name + "'");
    }
    const auto digits = name.find_last_not_of("0123456789");
    set.crs = CrsDef::parse("EPSG:" + name.substr(digits + 1));
  }
  try {
    const std::string type = doc.value("type", "");
    if (type == "FeatureCollection") {
      const auto& features = doc.at("features");
      if (!features.is_array()) {
        throw Error(ErrorCode::ParseError, "features must be an array");
      }
      for (const auto& f : features) {
        append_feature(f, options, set.polygons);
      }
    } else if (type == "Feature") {
      append_feature(doc, options, set.polygons);
    } else {
      if (!options.default_burn) {
        throw Error(ErrorCode::ParseError, "bare geometry has no burn property");
      }
      append_geometry(doc, *options.default_burn, set.polygons);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return set;
}

PolygonSet load_polygons(const std::filesystem::path& path, const VectorParseOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_polygons(ss.str(), options);
}

Patch rasterize(const PolygonSet& polys, const BoundingBox& b, const Resolution& r,
                ExecPolicy policy) {
  Patch out = Patch::empty(1, b, polys.crs, r, 0.0f);
  std::fill(out.valid.begin(), out.valid.end(), std::uint8_t{1});
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  for (const auto& p : polys.polygons) {
    lo = std::min(lo, p.burn_value);
    hi = std::max(hi, p.burn_value);
  }
  out.sample_type = lo >= 0 && hi <= 255     ? SampleType::U8
                    : lo >= 0 && hi <= 65535 ? SampleType::U16
                    : lo >= -32768 && hi <= 32767 ? SampleType::I16
                                                  : SampleType::F32;
  if (polys.empty()) {
    return out;
  }

  struct Prepared {
    std::vector<Edge> edges;
    double miny, maxy, minx, maxx;
    float burn;
  };
  std::vector<Prepared> prepared;
  for (const auto& p : polys.polygons) {
    Prepared pp{{}, std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                static_cast<float>(p.burn_value)};
    for (const auto& ring : p.rings) {
      for (std::size_t i = 0; i + 1 < ring.points.size(); ++i) {
        pp.edges.push_back({ring.points[i], ring.points[i + 1]});
        pp.miny = std::min(pp.miny, ring.points[i].y);
        pp.maxy = std::max(pp.maxy, ring.points[i].y);
        pp.minx = std::min(pp.minx, ring.points[i].x);
        pp.maxx = std::max(pp.maxx, ring.points[i].x);
      }
    }
    prepared.push_back(std::move(pp));
  }

  const GeoTransform gt = out.transform();
  const std::int64_t cols = out.cols();
  auto center_x = [&](std::int64_t c) {
    return gt.pixel_to_world(0.5, static_cast<double>(c) + 0.5).x;
  };
  // First column whose center is not strictly left of `x` (approximate).
  auto column_guess = [&](double x) {
    const double f = (x - gt.origin_x) / gt.dx - 0.5;
    if (!(f > -1.0)) return std::int64_t{0};
    if (!(f < static_cast<double>(cols))) return cols;
    return static_cast<std::int64_t>(std::ceil(f));
  };

  kernels::for_each_row(policy, out.rows(), [&](std::int64_t row) {
    const double y = gt.pixel_to_world(static_cast<double>(row) + 0.5, 0.5).y;
    float* dst = out.samples.data() + row * cols;
    std::vector<std::uint8_t> toggle(static_cast<std::size_t>(cols) + 1);
    std::vector<std::uint8_t> burn(static_cast<std::size_t>(cols));
    for (const auto& pp : prepared) {
      if (y < pp.miny || y > pp.maxy) {
        continue;
      }
      std::fill(toggle.begin(), toggle.end(), std::uint8_t{0});
      std::fill(burn.begin(), burn.end(), std::uint8_t{0});
      for (const Edge& e : pp.edges) {
        if ((e.a.y > y) != (e.b.y > y)) {
          // Toggle every column at or right of the crossing.
          const double t = (y - e.a.y) / (e.b.y - e.a.y);
          std::int64_t c = column_guess(e.a.x + t * (e.b.x - e.a.x));
          while (c > 0 && !left_of_crossing(e.a, e.b, center_x(c - 1), y)) --c;
          while (c < cols && left_of_crossing(e.a, e.b, center_x(c), y)) ++c;
          toggle[static_cast<std::size_t>(c)] ^= 1;
        }
        // Centers exactly on the edge.
        if (std::min(e.a.y, e.b.y) <= y && y <= std::max(e.a.y, e.b.y)) {
          const double ex0 = std::min(e.a.x, e.b.x);
          const double ex1 = std::max(e.a.x, e.b.x);
          std::int64_t c0;
          std::int64_t c1;
          if (e.a.y == e.b.y) {
            c0 = column_guess(ex0);
            c1 = column_guess(ex1);
          } else {
            const double t = (y - e.a.y) / (e.b.y - e.a.y);
            const std::int64_t g = column_guess(e.a.x + t * (e.b.x - e.a.x));
            c0 = g - 1;
            c1 = g + 1;
          }
          c0 = std::max<std::int64_t>(c0 - 1, 0);
          c1 = std::min<std::int64_t>(c1 + 1, cols - 1);
          for (std::int64_t c = c0; c <= c1; ++c) {
            const double x = center_x(c);
            if (x >= ex0 && x <= ex1 && orient_sign(e.a, e.b, {x, y}) == 0) {
              burn[static_cast<std::size_t>(c)] = 1;
            }
          }
        }
      }
      std::uint8_t parity = 0;
      for (std::int64_t c = 0; c < cols; ++c) {
        parity ^= toggle[static_cast<std::size_t>(c)];
        if (parity || burn[static_cast<std::size_t>(c)]) {
          dst[c] = pp.burn;
        }
      }
    }
  });
  return out;
}

}  // namespace geopatch
