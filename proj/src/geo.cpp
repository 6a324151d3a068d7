#include "shipfuse/geo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "shipfuse/error.hpp"
#include "shipfuse/timeutil.hpp"

namespace shipfuse::geo
{

namespace
{

constexpr double kDeg = std::numbers::pi / 180.0;

// Krueger series coefficients for the WGS84 third flattening n, truncated at n^6.
struct TmSeries
{
  double e;       // first eccentricity
  double e2;
  double rect_a;  // rectifying radius A
  std::array<double, 7> alpha{};  // forward, index 1..6
  std::array<double, 7> beta{};   // inverse, index 1..6
};

const TmSeries & series()
{
  static const TmSeries s = [] {
    TmSeries t;
    const double f = kWgs84F;
    t.e2 = f * (2 - f);
    t.e = std::sqrt(t.e2);
    const double n = f / (2 - f);
    const double n2 = n * n, n3 = n2 * n, n4 = n3 * n, n5 = n4 * n, n6 = n5 * n;
    t.rect_a = kWgs84A / (1 + n) * (1 + n2 / 4 + n4 / 64 + n6 / 256);

    t.alpha[1] = n / 2 - 2 * n2 / 3 + 5 * n3 / 16 + 41 * n4 / 180 - 127 * n5 / 288 + 7891 * n6 / 37800;
    t.alpha[2] = 13 * n2 / 48 - 3 * n3 / 5 + 557 * n4 / 1440 + 281 * n5 / 630 - 1983433 * n6 / 1935360;
    t.alpha[3] = 61 * n3 / 240 - 103 * n4 / 140 + 15061 * n5 / 26880 + 167603 * n6 / 181440;
    t.alpha[4] = 49561 * n4 / 161280 - 179 * n5 / 168 + 6601661 * n6 / 7257600;
    t.alpha[5] = 34729 * n5 / 80640 - 3418889 * n6 / 1995840;
    t.alpha[6] = 212378941 * n6 / 319334400;

    t.beta[1] = n / 2 - 2 * n2 / 3 + 37 * n3 / 96 - n4 / 360 - 81 * n5 / 512 + 96199 * n6 / 604800;
    t.beta[2] = n2 / 48 + n3 / 15 - 437 * n4 / 1440 + 46 * n5 / 105 - 1118711 * n6 / 3870720;
    t.beta[3] = 17 * n3 / 480 - 37 * n4 / 840 - 209 * n5 / 4480 + 5569 * n6 / 90720;
    t.beta[4] = 4397 * n4 / 161280 - 11 * n5 / 504 - 830251 * n6 / 7257600;
    t.beta[5] = 4583 * n5 / 161280 - 108847 * n6 / 3991680;
    t.beta[6] = 20648693 * n6 / 638668800;
    return t;
  }();
  return s;
}

// tan of the conformal latitude from tan of the geodetic latitude.
double conformal_tau(double tau, double e)
{
  const double sigma = std::sinh(e * std::atanh(e * tau / std::hypot(1.0, tau)));
  return tau * std::hypot(1.0, sigma) - sigma * std::hypot(1.0, tau);
}

// Inverse of conformal_tau by Newton iteration.
double geodetic_tau(double taup, const TmSeries & s)
{
  double tau = taup;
  for (int i = 0; i < 8; ++i) {
    const double taupi = conformal_tau(tau, s.e);
    const double dtau = (taup - taupi) / std::hypot(1.0, taupi) * (1 + (1 - s.e2) * tau * tau) /
                        ((1 - s.e2) * std::hypot(1.0, tau));
    tau += dtau;
    if (std::abs(dtau) < 1e-15 * std::max(1.0, std::abs(tau))) {
      break;
    }
  }
  return tau;
}

double wrap_radians(double lam)
{
  while (lam > std::numbers::pi) {
    lam -= 2 * std::numbers::pi;
  }
  while (lam < -std::numbers::pi) {
    lam += 2 * std::numbers::pi;
  }
  return lam;
}

}  // namespace

int utm_zone_for(double lon)
{
  const int zone = static_cast<int>(std::floor((lon + 180.0) / 6.0)) + 1;
  return std::clamp(zone, 1, 60);
}

double central_meridian(int zone)
{
  return -183.0 + 6.0 * zone;
}

UtmCoord wgs84_to_utm(double lat, double lon, std::optional<int> forced_zone, std::optional<Hemisphere> forced_hemisphere)
{
  if (!(std::abs(lat) <= 84.0)) {
    throw OutOfDomain("latitude " + std::to_string(lat) + " outside UTM domain |lat| <= 84");
  }
  if (!(lon >= -180.0 && lon <= 180.0)) {
    throw OutOfDomain("longitude " + std::to_string(lon) + " outside [-180, 180]");
  }
  const int zone = forced_zone.value_or(utm_zone_for(lon));
  if (zone < 1 || zone > 60) {
    throw OutOfDomain("UTM zone " + std::to_string(zone) + " outside 1..60");
  }
  const TmSeries & s = series();
  const double lam = wrap_radians((lon - central_meridian(zone)) * kDeg);
  const double tau = std::tan(lat * kDeg);
  const double taup = conformal_tau(tau, s.e);
  const double coslam = std::cos(lam);
  const double xip = std::atan2(taup, coslam);
  const double etap = std::asinh(std::sin(lam) / std::hypot(taup, coslam));

  double xi = xip;
  double eta = etap;
  for (int j = 1; j <= 6; ++j) {
    xi += s.alpha[j] * std::sin(2 * j * xip) * std::cosh(2 * j * etap);
    eta += s.alpha[j] * std::cos(2 * j * xip) * std::sinh(2 * j * etap);
  }

  UtmCoord out;
  out.zone = zone;
  out.hemisphere = forced_hemisphere.value_or(lat < 0 ? Hemisphere::South : Hemisphere::North);
  out.easting = kFalseEasting + kUtmScale * s.rect_a * eta;
  out.northing = (out.hemisphere == Hemisphere::South ? kFalseNorthingSouth : 0.0) + kUtmScale * s.rect_a * xi;
  return out;
}

LatLon utm_to_wgs84(const UtmCoord & coord)
{
  if (coord.zone < 1 || coord.zone > 60) {
    throw OutOfDomain("UTM zone " + std::to_string(coord.zone) + " outside 1..60");
  }
  const TmSeries & s = series();
  const double false_northing = coord.hemisphere == Hemisphere::South ? kFalseNorthingSouth : 0.0;
  const double xi = (coord.northing - false_northing) / (kUtmScale * s.rect_a);
  const double eta = (coord.easting - kFalseEasting) / (kUtmScale * s.rect_a);

  double xip = xi;
  double etap = eta;
  for (int j = 1; j <= 6; ++j) {
    xip -= s.beta[j] * std::sin(2 * j * xi) * std::cosh(2 * j * eta);
    etap -= s.beta[j] * std::cos(2 * j * xi) * std::sinh(2 * j * eta);
  }
  const double sinh_etap = std::sinh(etap);
  const double cos_xip = std::cos(xip);
  const double taup = std::sin(xip) / std::hypot(sinh_etap, cos_xip);
  const double lam = std::atan2(sinh_etap, cos_xip);
  const double tau = geodetic_tau(taup, s);
  return {std::atan(tau) / kDeg, central_meridian(coord.zone) + lam / kDeg};
}

double haversine_m(const LatLon & a, const LatLon & b)
{
  const double phi1 = a.lat * kDeg;
  const double phi2 = b.lat * kDeg;
  const double dphi = phi2 - phi1;
  const double dlam = (b.lon - a.lon) * kDeg;
  const double h = std::sin(dphi / 2) * std::sin(dphi / 2) +
                   std::cos(phi1) * std::cos(phi2) * std::sin(dlam / 2) * std::sin(dlam / 2);
  return 2 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

bool is_utm_epsg(int epsg)
{
  return (epsg > 32600 && epsg <= 32660) || (epsg > 32700 && epsg <= 32760);
}

void check_supported_epsg(int epsg)
{
  if (epsg != 4326 && !is_utm_epsg(epsg)) {
    throw ConfigError("unsupported CRS EPSG:" + std::to_string(epsg) + " (only 4326 and UTM 326xx/327xx)");
  }
}

std::array<double, 2> to_crs(int epsg, double lat, double lon)
{
  check_supported_epsg(epsg);
  if (epsg == 4326) {
    return {lon, lat};
  }
  const int zone = epsg % 100;
  const Hemisphere h = epsg / 100 == 327 ? Hemisphere::South : Hemisphere::North;
  const UtmCoord u = wgs84_to_utm(lat, lon, zone, h);
  return {u.easting, u.northing};
}

LatLon from_crs(int epsg, double x, double y)
{
  check_supported_epsg(epsg);
  if (epsg == 4326) {
    return {y, x};
  }
  const Hemisphere h = epsg / 100 == 327 ? Hemisphere::South : Hemisphere::North;
  return utm_to_wgs84({x, y, epsg % 100, h});
}

PixelCoord crs_to_pixel(const GeoRef & g, double x, double y)
{
  const auto & [a, b, c, d, e, f] = g.transform;
  const double det = a * e - b * d;
  if (!std::isfinite(det) || det == 0.0 || std::abs(det) <= 1e-15 * (std::abs(a * e) + std::abs(b * d))) {
    throw SingularTransform("geotransform is not invertible");
  }
  const double dx = x - c;
  const double dy = y - f;
  return {(e * dx - b * dy) / det, (a * dy - d * dx) / det};
}

std::array<double, 2> pixel_to_crs(const GeoRef & g, double col, double row)
{
  const auto & [a, b, c, d, e, f] = g.transform;
  return {a * col + b * row + c, d * col + e * row + f};
}

PixelCoord geo_to_pixel(const GeoRef & georef, double lat, double lon)
{
  const auto [x, y] = to_crs(georef.epsg, lat, lon);
  return crs_to_pixel(georef, x, y);
}

LatLon pixel_to_geo(const GeoRef & georef, double col, double row)
{
  const auto [x, y] = pixel_to_crs(georef, col, row);
  return from_crs(georef.epsg, x, y);
}

std::string to_string(Provider p)
{
  switch (p) {
    case Provider::Planet:
      return "planet";
    case Provider::Sentinel2:
      return "sentinel2";
    case Provider::Synthetic:
      return "synthetic";
  }
  return "synthetic";
}

Provider provider_from_string(const std::string & s)
{
  if (s == "planet") {
    return Provider::Planet;
  }
  if (s == "sentinel2") {
    return Provider::Sentinel2;
  }
  if (s == "synthetic") {
    return Provider::Synthetic;
  }
  throw FormatError("unknown provider '" + s + "'");
}

nlohmann::json to_json(const Sidecar & s)
{
  return {
    {"epsg", s.georef.epsg},
    {"transform", s.georef.transform},
    {"width", s.width},
    {"height", s.height},
    {"timestamp", format_iso8601(s.timestamp)},
    {"provider", to_string(s.provider)},
    {"gsd_m", s.gsd_m},
  };
}

Sidecar sidecar_from_json(const nlohmann::json & j)
{
  Sidecar s;
  try {
    s.georef.epsg = j.at("epsg").get<int>();
    s.georef.transform = j.at("transform").get<std::array<double, 6>>();
    s.width = j.at("width").get<int>();
    s.height = j.at("height").get<int>();
    const auto ts = parse_iso8601(j.at("timestamp").get<std::string>());
    if (!ts) {
      throw FormatError("sidecar timestamp is not ISO-8601");
    }
    s.timestamp = *ts;
    s.provider = provider_from_string(j.at("provider").get<std::string>());
    s.gsd_m = j.at("gsd_m").get<double>();
  } catch (const nlohmann::json::exception & e) {
    throw FormatError(std::string("malformed georeference sidecar: ") + e.what());
  }
  check_supported_epsg(s.georef.epsg);
  if (s.width <= 0 || s.height <= 0 || !(s.gsd_m > 0)) {
    throw FormatError("sidecar dimensions and gsd_m must be positive");
  }
  return s;
}

Sidecar load_sidecar(const std::string & path)
{
  std::ifstream in(path);
  if (!in) {
    throw MissingGeoRef("georeference sidecar not found: " + path);
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception & e) {
    throw FormatError("sidecar " + path + " is not valid JSON: " + e.what());
  }
  return sidecar_from_json(j);
}

void save_sidecar(const Sidecar & s, const std::string & path)
{
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write " + path);
  }
  out << to_json(s).dump(2) << '\n';
}

}  // namespace shipfuse::geo
