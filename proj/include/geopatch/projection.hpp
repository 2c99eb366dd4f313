#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "geopatch/geo_core.hpp"

namespace geopatch {

enum class ProjectionKind { Geographic, TransverseMercator, AlbersEqualArea, WebMercator };

struct Ellipsoid {
  double a = 6378137.0;
  double inv_f = 298.257223563;

  static Ellipsoid wgs84() noexcept { return {6378137.0, 298.257223563}; }
  static Ellipsoid grs80() noexcept { return {6378137.0, 298.257222101}; }

  double f() const noexcept { return inv_f == 0.0 ? 0.0 : 1.0 / inv_f; }
  double e2() const noexcept { return f() * (2.0 - f()); }
};

/// Parameter set of a supported map projection. Angles are in degrees.
/// Equality is parameter-wise with a 1e-12 tolerance; the EPSG alias does
/// not participate.
struct CrsDef {
  ProjectionKind kind = ProjectionKind::Geographic;
  Ellipsoid ellipsoid;
  double lon0 = 0.0;
  double lat0 = 0.0;
  double k0 = 1.0;
  double false_easting = 0.0;
  double false_northing = 0.0;
  double lat1 = 0.0;  // Albers standard parallels
  double lat2 = 0.0;
  std::optional<int> epsg;

  /// Supported aliases: 4326, 4269, 3857, 5070, 326zz, 327zz, 269zz.
  static CrsDef from_epsg(int code);
  /// Accepts "EPSG:nnnn" (case-insensitive prefix).
  static CrsDef parse(std::string_view text);

  static CrsDef geographic(Ellipsoid e = Ellipsoid::wgs84());
  static CrsDef utm(int zone, bool north, Ellipsoid e = Ellipsoid::wgs84());
  static CrsDef albers(double lat0, double lon0, double lat1, double lat2, double fe, double fn,
                       Ellipsoid e = Ellipsoid::grs80());
  static CrsDef web_mercator();

  bool is_geographic() const noexcept { return kind == ProjectionKind::Geographic; }
  /// Throws InvalidArgument for out-of-range parameters.
  void validate() const;

  bool operator==(const CrsDef& other) const noexcept;

  /// The explicit alias, or the first known alias with equal parameters.
  std::optional<int> lookup_epsg() const;

  /// "EPSG:nnnn" when an alias is known, otherwise a proj-like description.
  std::string to_string() const;
};

struct LonLat {
  double lon = 0.0;
  double lat = 0.0;
};

struct ProjXY {
  double x = 0.0;
  double y = 0.0;
};

namespace detail {
class Projection;
}

/// Projection with its derived constants precomputed; reuse it for
/// per-pixel work instead of the free functions below.
class Projector {
 public:
  explicit Projector(const CrsDef& crs);
  ~Projector();
  Projector(const Projector&);
  Projector& operator=(const Projector&);
  Projector(Projector&&) noexcept;
  Projector& operator=(Projector&&) noexcept;

  ProjXY forward(LonLat p) const;
  LonLat inverse(ProjXY p) const;
  const CrsDef& crs() const noexcept;

 private:
  std::unique_ptr<detail::Projection> impl_;
};

/// src -> dst point transformer; identity short-circuits when src == dst.
class PointTransformer {
 public:
  PointTransformer(const CrsDef& src, const CrsDef& dst);

  bool is_identity() const noexcept { return identity_; }
  ProjXY operator()(ProjXY p) const;

 private:
  Projector src_;
  Projector dst_;
  bool identity_;
};

/// Geographic -> projected. Throws OutOfDomain outside the projection's
/// supported domain (poles, more than 45 degrees from a TM central meridian).
ProjXY project_forward(const CrsDef& crs, LonLat p);

/// Projected -> geographic. Throws OutOfDomain when the point has no inverse
/// within the supported domain.
LonLat project_inverse(const CrsDef& crs, ProjXY p);

/// Point transformation without datum shift. Returns p unchanged when the
/// two definitions compare equal.
ProjXY transform_point(const CrsDef& src, const CrsDef& dst, ProjXY p);

inline constexpr int kDefaultDensify = 21;

/// Hull of `densify_n` transformed points per edge; time passes through.
BoundingBox transform_bbox(const CrsDef& src, const CrsDef& dst, const BoundingBox& b,
                           int densify_n = kDefaultDensify);

}  // namespace geopatch
