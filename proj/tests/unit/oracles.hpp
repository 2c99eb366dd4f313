#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "geopatch/error.hpp"
#include "geopatch/vector_io.hpp"

namespace geopatch::test {

using Rational = boost::multiprecision::cpp_rational;

// Reference LRU: front = most recent.
struct OracleLru {
  std::size_t capacity;
  std::deque<std::pair<std::int64_t, std::size_t>> entries;
  std::size_t resident = 0;
  std::vector<std::int64_t> last_victims;

  bool access(std::int64_t id, std::size_t bytes) {
    last_victims.clear();
    auto it = std::find_if(entries.begin(), entries.end(), [&](auto& e) { return e.first == id; });
    if (it != entries.end()) {
      auto e = *it;
      entries.erase(it);
      entries.push_front(e);
      return true;
    }
    entries.push_front({id, bytes});
    resident += bytes;
    while (resident > capacity && !entries.empty()) {
      last_victims.push_back(entries.back().first);
      resident -= entries.back().second;
      entries.pop_back();
    }
    return false;
  }
};

// Exact even-odd membership with boundary points counted as inside.
inline bool oracle_inside(const Polygon& poly, double px, double py) {
  const Rational x(px), y(py);
  bool inside = false;
  for (const Ring& ring : poly.rings) {
    for (std::size_t i = 0; i + 1 < ring.points.size(); ++i) {
      const Rational ax(ring.points[i].x), ay(ring.points[i].y);
      const Rational bx(ring.points[i + 1].x), by(ring.points[i + 1].y);
      const Rational cross = (bx - ax) * (y - ay) - (by - ay) * (x - ax);
      if (cross == 0 && x >= std::min(ax, bx) && x <= std::max(ax, bx) && y >= std::min(ay, by) &&
          y <= std::max(ay, by)) {
        return true;
      }
      if ((ay > y) != (by > y)) {
        const Rational xc = ax + (y - ay) * (bx - ax) / (by - ay);
        if (x < xc) inside = !inside;
      }
    }
  }
  return inside;
}

inline std::int64_t oracle_value(const PolygonSet& set, double x, double y) {
  std::int64_t v = 0;
  for (const Polygon& p : set.polygons) {
    if (oracle_inside(p, x, y)) v = p.burn_value;
  }
  return v;
}

// Star-shaped ring around (cx, cy); `step` > 0 snaps vertices to a lattice.
inline Ring star_ring(std::mt19937_64& rng, double cx, double cy, double rmax, double scale, int n,
               double step) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> radius(0.3 * rmax, rmax);
  std::vector<double> angles(n);
  for (auto& a : angles) a = angle(rng);
  std::sort(angles.begin(), angles.end());
  Ring ring;
  for (double a : angles) {
    double x = cx + scale * radius(rng) * std::cos(a);
    double y = cy + scale * radius(rng) * std::sin(a);
    if (step > 0) {
      x = std::round(x / step) * step;
      y = std::round(y / step) * step;
    }
    if (!ring.points.empty() && ring.points.back().x == x && ring.points.back().y == y) continue;
    ring.points.push_back({x, y});
  }
  ring.points.push_back(ring.points.front());
  return ring;
}

inline bool ring_ok(const Ring& r, bool exterior) {
  if (r.points.size() < 4) return false;
  try {
    validate_ring(r, exterior);
    return true;
  } catch (const Error&) {
    return false;
  }
}

inline Polygon random_polygon(std::mt19937_64& rng, bool lattice) {
  std::uniform_real_distribution<double> pos(-20.0, 20.0);
  std::uniform_int_distribution<int> verts(3, 12);
  const double step = lattice ? 0.5 : 0.0;
  for (;;) {
    const double cx = pos(rng), cy = pos(rng);
    Polygon p;
    p.rings.push_back(star_ring(rng, cx, cy, 15.0, 1.0, verts(rng), step));
    if (!ring_ok(p.rings[0], true)) continue;
    if (rng() % 3 == 0) {
      Ring hole = star_ring(rng, cx, cy, 15.0, 0.25, verts(rng), step);
      if (ring_ok(hole, false)) p.rings.push_back(hole);
    }
    p.burn_value = 1 + static_cast<std::int64_t>(rng() % 250);
    return p;
  }
}

// Independent count of grid positions along one axis.
inline std::int64_t oracle_grid_positions(double extent, double patch, double stride) {
  if (patch > extent) return 1;
  std::int64_t n = 0;
  double end = 0.0;
  for (double start = 0.0; start + patch <= extent * (1 + 1e-12); start = stride * static_cast<double>(++n)) {
    end = start + patch;
  }
  if (end < extent * (1 - 1e-12)) ++n;
  return n;
}

// Random box in [0, extent)^2 with sides up to max_size.
inline BoundingBox random_query_box(std::mt19937_64& rng, double extent, double max_size,
                                    bool with_time) {
  std::uniform_real_distribution<double> pos(0.0, extent);
  std::uniform_real_distribution<double> len(0.0, max_size);
  const double x = pos(rng), y = pos(rng);
  if (!with_time) return BoundingBox::from_xy(x, y, x + len(rng), y + len(rng));
  const double t = pos(rng);
  return BoundingBox::from_xy(x, y, x + len(rng), y + len(rng), t, t + len(rng));
}

// Ids of `boxes` intersecting `q`, by exhaustive scan.
inline std::vector<std::size_t> linear_scan(const std::vector<BoundingBox>& boxes,
                                            const BoundingBox& q) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (boxes[i].intersects(q)) out.push_back(i);
  }
  return out;
}

}  // namespace geopatch::test
