#include "geopatch/projection.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <vector>

#include "geopatch/error.hpp"

namespace geopatch {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kTmMaxLonOffsetDeg = 45.0;
constexpr double kWebMercatorMaxLat = 89.9;

bool nearly_equal(double a, double b) noexcept {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

// Longitude difference wrapped into [-180, 180).
double wrap_degrees(double d) noexcept {
  d = std::fmod(d + 180.0, 360.0);
  if (d < 0.0) {
    d += 360.0;
  }
  return d - 180.0;
}

[[noreturn]] void out_of_domain(const CrsDef& crs, const std::string& what) {
  throw Error(ErrorCode::OutOfDomain, what + " for " + crs.to_string());
}

}  // namespace

namespace detail {

class Projection {
 public:
  explicit Projection(const CrsDef& crs) : crs_(crs) {
    crs_.validate();
    e2_ = crs.ellipsoid.e2();
    e_ = std::sqrt(e2_);
    a_ = crs.ellipsoid.a;
    switch (crs.kind) {
      case ProjectionKind::TransverseMercator: init_tm(); break;
      case ProjectionKind::AlbersEqualArea: init_albers(); break;
      default: break;
    }
  }

  const CrsDef& crs() const noexcept { return crs_; }

  ProjXY forward(LonLat p) const {
    if (!std::isfinite(p.lon) || !std::isfinite(p.lat) || std::abs(p.lat) > 90.0) {
      out_of_domain(crs_, "invalid geographic coordinate");
    }
    switch (crs_.kind) {
      case ProjectionKind::Geographic: return {p.lon, p.lat};
      case ProjectionKind::TransverseMercator: return tm_forward(p);
      case ProjectionKind::AlbersEqualArea: return albers_forward(p);
      case ProjectionKind::WebMercator: return merc_forward(p);
    }
    return {};
  }

  LonLat inverse(ProjXY p) const {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      out_of_domain(crs_, "non-finite projected coordinate");
    }
    switch (crs_.kind) {
      case ProjectionKind::Geographic:
        if (std::abs(p.y) > 90.0) {
          out_of_domain(crs_, "latitude beyond 90 degrees");
        }
        return {p.x, p.y};
      case ProjectionKind::TransverseMercator: return tm_inverse(p);
      case ProjectionKind::AlbersEqualArea: return albers_inverse(p);
      case ProjectionKind::WebMercator: return merc_inverse(p);
    }
    return {};
  }

 private:
  using cplx = std::complex<double>;

  // --- shared ellipsoid helpers -------------------------------------------

  // tan(conformal latitude) from tan(geodetic latitude).
  double taup(double tau) const noexcept {
    const double tau1 = std::hypot(1.0, tau);
    const double sig = std::sinh(e_ * std::atanh(e_ * tau / tau1));
    return std::hypot(1.0, sig) * tau - sig * tau1;
  }

  // Inverse of taup by Newton iteration.
  double tauf(double taup_target) const noexcept {
    const double one_e2 = 1.0 - e2_;
    double tau = taup_target / one_e2;
    for (int i = 0; i < 8; ++i) {
      const double tp = taup(tau);
      const double dtau = (taup_target - tp) * (1.0 + one_e2 * tau * tau) /
                          (one_e2 * std::hypot(1.0, tp) * std::hypot(1.0, tau));
      tau += dtau;
      if (!(std::abs(dtau) >= 1e-15 * std::max(1.0, std::abs(tau)))) {
        break;
      }
    }
    return tau;
  }

  // Authalic q(phi).
  double q_of(double sinphi) const noexcept {
    if (e2_ == 0.0) {
      return 2.0 * sinphi;
    }
    const double es = e_ * sinphi;
    return (1.0 - e2_) *
           (sinphi / (1.0 - es * es) - std::log((1.0 - es) / (1.0 + es)) / (2.0 * e_));
  }

  double m_of(double phi) const noexcept {
    const double s = std::sin(phi);
    return std::cos(phi) / std::sqrt(1.0 - e2_ * s * s);
  }

  // --- transverse mercator (Krueger series, order n^4) --------------------

  void init_tm() {
    const double f = crs_.ellipsoid.f();
    const double n = f / (2.0 - f);
    const double n2 = n * n;
    const double n3 = n2 * n;
    const double n4 = n3 * n;
    rect_radius_ = a_ / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0);
    alpha_ = {n / 2.0 - 2.0 * n2 / 3.0 + 5.0 * n3 / 16.0 + 41.0 * n4 / 180.0,
              13.0 * n2 / 48.0 - 3.0 * n3 / 5.0 + 557.0 * n4 / 1440.0,
              61.0 * n3 / 240.0 - 103.0 * n4 / 140.0, 49561.0 * n4 / 161280.0};
    beta_ = {n / 2.0 - 2.0 * n2 / 3.0 + 37.0 * n3 / 96.0 - n4 / 360.0,
             n2 / 48.0 + n3 / 15.0 - 437.0 * n4 / 1440.0, 17.0 * n3 / 480.0 - 37.0 * n4 / 840.0,
             4397.0 * n4 / 161280.0};
    const double xi0p = std::atan(taup(std::tan(crs_.lat0 * kDeg)));
    xi0_ = krueger(cplx(xi0p, 0.0), alpha_).real();
  }

  static cplx krueger(cplx z, const std::array<double, 4>& c) noexcept {
    cplx out = z;
    for (int j = 0; j < 4; ++j) {
      out += c[j] * std::sin(2.0 * (j + 1) * z);
    }
    return out;
  }

  ProjXY tm_forward(LonLat p) const {
    const double dlon = wrap_degrees(p.lon - crs_.lon0);
    if (std::abs(dlon) > kTmMaxLonOffsetDeg) {
      out_of_domain(crs_, "longitude more than 45 degrees from the central meridian");
    }
    if (std::abs(p.lat) >= 90.0) {
      out_of_domain(crs_, "pole");
    }
    const double lam = dlon * kDeg;
    const double tp = taup(std::tan(p.lat * kDeg));
    const double xip = std::atan2(tp, std::cos(lam));
    const double etap = std::asinh(std::sin(lam) / std::hypot(tp, std::cos(lam)));
    const cplx zeta = krueger(cplx(xip, etap), alpha_);
    const double k = crs_.k0 * rect_radius_;
    return {crs_.false_easting + k * zeta.imag(),
            crs_.false_northing + k * (zeta.real() - xi0_)};
  }

  LonLat tm_inverse(ProjXY p) const {
    const double k = crs_.k0 * rect_radius_;
    const cplx zeta((p.y - crs_.false_northing) / k + xi0_, (p.x - crs_.false_easting) / k);
    // asinh(tan 45deg) bounds eta' on the equator at the domain edge.
    if (std::abs(zeta.imag()) > 1.0 || std::abs(zeta.real()) > std::numbers::pi) {
      out_of_domain(crs_, "projected point outside the series domain");
    }
    cplx zp = zeta;
    for (int j = 0; j < 4; ++j) {
      zp -= beta_[j] * std::sin(2.0 * (j + 1) * zeta);
    }
    // Refine so the inverse is exact for the truncated forward series.
    for (int it = 0; it < 6; ++it) {
      cplx deriv = 1.0;
      for (int j = 0; j < 4; ++j) {
        deriv += 2.0 * (j + 1) * alpha_[j] * std::cos(2.0 * (j + 1) * zp);
      }
      const cplx step = (krueger(zp, alpha_) - zeta) / deriv;
      zp -= step;
      if (std::abs(step) < 1e-16) {
        break;
      }
    }
    const double xip = zp.real();
    const double etap = zp.imag();
    const double sh = std::sinh(etap);
    const double c = std::cos(xip);
    const double r = std::hypot(sh, c);
    const double lam = std::atan2(sh, c);
    const double tp = std::sin(xip) / r;
    const double lat = std::atan(tauf(tp)) / kDeg;
    const double dlon = lam / kDeg;
    if (std::abs(dlon) > kTmMaxLonOffsetDeg + 1e-9) {
      out_of_domain(crs_, "inverse longitude beyond 45 degrees from the central meridian");
    }
    return {wrap_degrees(crs_.lon0 + dlon), lat};
  }

  // --- albers equal-area conic --------------------------------------------

  void init_albers() {
    const double p1 = crs_.lat1 * kDeg;
    const double p2 = crs_.lat2 * kDeg;
    const double m1 = m_of(p1);
    const double m2 = m_of(p2);
    const double q1 = q_of(std::sin(p1));
    const double q2 = q_of(std::sin(p2));
    cone_ = std::abs(p1 - p2) < 1e-12 ? std::sin(p1) : (m1 * m1 - m2 * m2) / (q2 - q1);
    big_c_ = m1 * m1 + cone_ * q1;
    rho0_ = a_ * std::sqrt(big_c_ - cone_ * q_of(std::sin(crs_.lat0 * kDeg))) / cone_;
    qp_ = q_of(1.0);
  }

  ProjXY albers_forward(LonLat p) const {
    const double q = q_of(std::sin(p.lat * kDeg));
    const double rad = big_c_ - cone_ * q;
    if (rad < 0.0) {
      out_of_domain(crs_, "latitude outside the cone");
    }
    const double rho = a_ * std::sqrt(rad) / cone_;
    const double theta = cone_ * wrap_degrees(p.lon - crs_.lon0) * kDeg;
    return {crs_.false_easting + rho * std::sin(theta),
            crs_.false_northing + rho0_ - rho * std::cos(theta)};
  }

  LonLat albers_inverse(ProjXY p) const {
    double x = p.x - crs_.false_easting;
    double y = rho0_ - (p.y - crs_.false_northing);
    double rho = std::hypot(x, y);
    if (cone_ < 0.0) {
      rho = -rho;
      x = -x;
      y = -y;
    }
    const double theta = std::atan2(x, y);
    const double q = (big_c_ - rho * rho * cone_ * cone_ / (a_ * a_)) / cone_;
    if (std::abs(q) > qp_ * (1.0 + 1e-12)) {
      out_of_domain(crs_, "projected point beyond the pole");
    }
    const double dlon = theta / cone_ / kDeg;
    if (std::abs(dlon) > 180.0 + 1e-9) {
      out_of_domain(crs_, "projected point outside the cone wedge");
    }
    return {wrap_degrees(crs_.lon0 + dlon), latitude_from_q(q)};
  }

  double latitude_from_q(double q) const noexcept {
    const double ratio = std::clamp(q / qp_, -1.0, 1.0);
    if (std::abs(ratio) >= 1.0) {
      return ratio > 0 ? 90.0 : -90.0;
    }
    const double beta = std::asin(ratio);
    // Authalic -> geodetic series as the starting point, then Newton on q.
    const double e4 = e2_ * e2_;
    double phi = beta + (e2_ / 3.0 + 31.0 * e4 / 180.0) * std::sin(2.0 * beta) +
                 (17.0 * e4 / 360.0) * std::sin(4.0 * beta);
    if (e2_ == 0.0) {
      return beta / kDeg;
    }
    for (int i = 0; i < 10; ++i) {
      const double s = std::sin(phi);
      const double c = std::cos(phi);
      if (c <= 0.0) {
        break;
      }
      const double one_es2 = 1.0 - e2_ * s * s;
      const double step = one_es2 * one_es2 / (2.0 * c) * (q - q_of(s)) / (1.0 - e2_);
      phi += step;
      if (std::abs(step) < 1e-15) {
        break;
      }
    }
    return phi / kDeg;
  }

  // --- web mercator (spherical formulas on the a-sphere) --------------------

  ProjXY merc_forward(LonLat p) const {
    if (std::abs(p.lat) >= kWebMercatorMaxLat) {
      out_of_domain(crs_, "latitude beyond 89.9 degrees");
    }
    const double phi = p.lat * kDeg;
    return {crs_.false_easting + a_ * (p.lon - crs_.lon0) * kDeg,
            crs_.false_northing + a_ * std::asinh(std::tan(phi))};
  }

  LonLat merc_inverse(ProjXY p) const {
    const double lat = std::atan(std::sinh((p.y - crs_.false_northing) / a_)) / kDeg;
    if (std::abs(lat) >= kWebMercatorMaxLat) {
      out_of_domain(crs_, "latitude beyond 89.9 degrees");
    }
    return {crs_.lon0 + (p.x - crs_.false_easting) / a_ / kDeg, lat};
  }

  CrsDef crs_;
  double a_ = 0.0;
  double e2_ = 0.0;
  double e_ = 0.0;
  // TM
  double rect_radius_ = 0.0;
  double xi0_ = 0.0;
  std::array<double, 4> alpha_{};
  std::array<double, 4> beta_{};
  // Albers
  double cone_ = 0.0;
  double big_c_ = 0.0;
  double rho0_ = 0.0;
  double qp_ = 0.0;
};

}  // namespace detail

// --- CrsDef -----------------------------------------------------------------

CrsDef CrsDef::geographic(Ellipsoid e) {
  CrsDef c;
  c.kind = ProjectionKind::Geographic;
  c.ellipsoid = e;
  return c;
}

CrsDef CrsDef::utm(int zone, bool north, Ellipsoid e) {
  if (zone < 1 || zone > 60) {
    throw Error(ErrorCode::InvalidArgument, "UTM zone out of range: " + std::to_string(zone));
  }
  CrsDef c;
  c.kind = ProjectionKind::TransverseMercator;
  c.ellipsoid = e;
  c.lon0 = -183.0 + 6.0 * zone;
  c.k0 = 0.9996;
  c.false_easting = 500000.0;
  c.false_northing = north ? 0.0 : 10000000.0;
  return c;
}

CrsDef CrsDef::albers(double lat0, double lon0, double lat1, double lat2, double fe, double fn,
                      Ellipsoid e) {
  CrsDef c;
  c.kind = ProjectionKind::AlbersEqualArea;
  c.ellipsoid = e;
  c.lat0 = lat0;
  c.lon0 = lon0;
  c.lat1 = lat1;
  c.lat2 = lat2;
  c.false_easting = fe;
  c.false_northing = fn;
  return c;
}

CrsDef CrsDef::web_mercator() {
  CrsDef c;
  c.kind = ProjectionKind::WebMercator;
  c.ellipsoid = Ellipsoid{6378137.0, 0.0};
  return c;
}

CrsDef CrsDef::from_epsg(int code) {
  CrsDef c;
  if (code == 4326) {
    c = geographic(Ellipsoid::wgs84());
  } else if (code == 4269) {
    c = geographic(Ellipsoid::grs80());
  } else if (code == 3857) {
    c = web_mercator();
  } else if (code == 5070) {
    c = albers(23.0, -96.0, 29.5, 45.5, 0.0, 0.0, Ellipsoid::grs80());
  } else if (code > 32600 && code <= 32660) {
    c = utm(code - 32600, true, Ellipsoid::wgs84());
  } else if (code > 32700 && code <= 32760) {
    c = utm(code - 32700, false, Ellipsoid::wgs84());
  } else if (code > 26900 && code <= 26923) {
    c = utm(code - 26900, true, Ellipsoid::grs80());
  } else {
    throw Error(ErrorCode::UnsupportedFormat, "unsupported EPSG code " + std::to_string(code));
  }
  c.epsg = code;
  return c;
}

CrsDef CrsDef::parse(std::string_view text) {
  constexpr std::string_view prefix = "EPSG:";
  const bool has_prefix =
      text.size() > prefix.size() &&
      std::equal(prefix.begin(), prefix.end(), text.begin(),
                 [](char a, char b) { return a == std::toupper(static_cast<unsigned char>(b)); });
  if (!has_prefix) {
    throw Error(ErrorCode::ParseError, "expected EPSG:nnnn, got '" + std::string(text) + "'");
  }
  const auto digits = text.substr(prefix.size());
  int code = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), code);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) {
    throw Error(ErrorCode::ParseError, "bad EPSG code '" + std::string(text) + "'");
  }
  return from_epsg(code);
}

void CrsDef::validate() const {
  if (!(ellipsoid.a > 0.0) || ellipsoid.inv_f < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "invalid ellipsoid");
  }
  if (lon0 < -180.0 || lon0 > 180.0) {
    throw Error(ErrorCode::InvalidArgument, "central meridian out of range");
  }
  if (kind == ProjectionKind::TransverseMercator && !(k0 > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "scale factor must be positive");
  }
  if (kind == ProjectionKind::AlbersEqualArea && nearly_equal(lat1, -lat2)) {
    throw Error(ErrorCode::InvalidArgument, "Albers standard parallels symmetric about equator");
  }
}

bool CrsDef::operator==(const CrsDef& o) const noexcept {
  if (kind != o.kind || !nearly_equal(ellipsoid.a, o.ellipsoid.a) ||
      !nearly_equal(ellipsoid.inv_f, o.ellipsoid.inv_f)) {
    return false;
  }
  switch (kind) {
    case ProjectionKind::Geographic: return true;
    case ProjectionKind::WebMercator:
      return nearly_equal(lon0, o.lon0) && nearly_equal(false_easting, o.false_easting) &&
             nearly_equal(false_northing, o.false_northing);
    case ProjectionKind::TransverseMercator:
      return nearly_equal(lon0, o.lon0) && nearly_equal(lat0, o.lat0) && nearly_equal(k0, o.k0) &&
             nearly_equal(false_easting, o.false_easting) &&
             nearly_equal(false_northing, o.false_northing);
    case ProjectionKind::AlbersEqualArea:
      return nearly_equal(lon0, o.lon0) && nearly_equal(lat0, o.lat0) &&
             nearly_equal(lat1, o.lat1) && nearly_equal(lat2, o.lat2) &&
             nearly_equal(false_easting, o.false_easting) &&
             nearly_equal(false_northing, o.false_northing);
  }
  return false;
}

std::optional<int> CrsDef::lookup_epsg() const {
  if (epsg) {
    return epsg;
  }
  std::vector<int> candidates = {4326, 4269, 3857, 5070};
  for (int z = 1; z <= 60; ++z) {
    candidates.push_back(32600 + z);
    candidates.push_back(32700 + z);
  }
  for (int z = 1; z <= 23; ++z) {
    candidates.push_back(26900 + z);
  }
  for (int code : candidates) {
    if (from_epsg(code) == *this) {
      return code;
    }
  }
  return std::nullopt;
}

std::string CrsDef::to_string() const {
  if (epsg) {
    return "EPSG:" + std::to_string(*epsg);
  }
  std::ostringstream os;
  os.precision(12);
  switch (kind) {
    case ProjectionKind::Geographic: os << "+proj=longlat"; break;
    case ProjectionKind::TransverseMercator: os << "+proj=tmerc"; break;
    case ProjectionKind::AlbersEqualArea: os << "+proj=aea"; break;
    case ProjectionKind::WebMercator: os << "+proj=webmerc"; break;
  }
  os << " +a=" << ellipsoid.a << " +rf=" << ellipsoid.inv_f << " +lon_0=" << lon0
     << " +lat_0=" << lat0;
  if (kind == ProjectionKind::TransverseMercator) {
    os << " +k=" << k0;
  }
  if (kind == ProjectionKind::AlbersEqualArea) {
    os << " +lat_1=" << lat1 << " +lat_2=" << lat2;
  }
  os << " +x_0=" << false_easting << " +y_0=" << false_northing;
  return os.str();
}

// --- Projector / PointTransformer ---------------------------------------------

Projector::Projector(const CrsDef& crs) : impl_(std::make_unique<detail::Projection>(crs)) {}
Projector::~Projector() = default;
Projector::Projector(const Projector& o) : impl_(std::make_unique<detail::Projection>(*o.impl_)) {}
Projector& Projector::operator=(const Projector& o) {
  if (this != &o) {
    impl_ = std::make_unique<detail::Projection>(*o.impl_);
  }
  return *this;
}
Projector::Projector(Projector&&) noexcept = default;
Projector& Projector::operator=(Projector&&) noexcept = default;

ProjXY Projector::forward(LonLat p) const { return impl_->forward(p); }
LonLat Projector::inverse(ProjXY p) const { return impl_->inverse(p); }
const CrsDef& Projector::crs() const noexcept { return impl_->crs(); }

PointTransformer::PointTransformer(const CrsDef& src, const CrsDef& dst)
    : src_(src), dst_(dst), identity_(src == dst) {}

ProjXY PointTransformer::operator()(ProjXY p) const {
  if (identity_) {
    return p;
  }
  return dst_.forward(src_.inverse(p));
}

// --- free functions ---------------------------------------------------------

ProjXY project_forward(const CrsDef& crs, LonLat p) { return Projector(crs).forward(p); }

LonLat project_inverse(const CrsDef& crs, ProjXY p) { return Projector(crs).inverse(p); }

ProjXY transform_point(const CrsDef& src, const CrsDef& dst, ProjXY p) {
  return PointTransformer(src, dst)(p);
}

BoundingBox transform_bbox(const CrsDef& src, const CrsDef& dst, const BoundingBox& b,
                           int densify_n) {
  if (densify_n < 2) {
    throw Error(ErrorCode::InvalidArgument, "densify_n must be at least 2");
  }
  if (src == dst) {
    return b;
  }
  const PointTransformer tr(src, dst);
  BoundingBox out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                  std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                  b.mint, b.maxt};
  auto add = [&](double x, double y) {
    const ProjXY q = tr({x, y});
    out.minx = std::min(out.minx, q.x);
    out.maxx = std::max(out.maxx, q.x);
    out.miny = std::min(out.miny, q.y);
    out.maxy = std::max(out.maxy, q.y);
  };
  for (int i = 0; i < densify_n; ++i) {
    const double t = static_cast<double>(i) / (densify_n - 1);
    const double x = b.minx + t * (b.maxx - b.minx);
    const double y = b.miny + t * (b.maxy - b.miny);
    add(x, b.miny);
    add(x, b.maxy);
    add(b.minx, y);
    add(b.maxx, y);
  }
  return out;
}

}  // namespace geopatch
