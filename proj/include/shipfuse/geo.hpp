#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

namespace shipfuse::geo
{

/// WGS84 ellipsoid.
inline constexpr double kWgs84A = 6378137.0;
inline constexpr double kWgs84F = 1.0 / 298.257223563;
inline constexpr double kUtmScale = 0.9996;
inline constexpr double kFalseEasting = 500000.0;
inline constexpr double kFalseNorthingSouth = 10000000.0;
/// Mean earth radius used for great-circle distances.
inline constexpr double kEarthRadiusM = 6371008.8;

enum class Hemisphere { North, South };

struct UtmCoord
{
  double easting = 0.0;
  double northing = 0.0;
  int zone = 0;
  Hemisphere hemisphere = Hemisphere::North;
};

struct LatLon
{
  double lat = 0.0;
  double lon = 0.0;
};

/// Standard zone for a longitude, 1..60.
int utm_zone_for(double lon);
double central_meridian(int zone);

/// Transverse Mercator (Krueger series to sixth order in n) on WGS84 with UTM
/// conventions. `forced_hemisphere` selects the false northing independently of
/// the point's latitude sign (needed to stay in one EPSG:327xx frame).
UtmCoord wgs84_to_utm(
  double lat, double lon, std::optional<int> forced_zone = std::nullopt,
  std::optional<Hemisphere> forced_hemisphere = std::nullopt);

LatLon utm_to_wgs84(const UtmCoord & coord);

/// Great-circle distance in meters.
double haversine_m(const LatLon & a, const LatLon & b);

/// Affine map from pixel edges to CRS coordinates:
///   x = a*col + b*row + c,  y = d*col + e*row + f.
/// (col, row) = (0, 0) is the top-left corner of the top-left pixel; the center
/// of pixel (i, j) is (i + 0.5, j + 0.5).
struct GeoRef
{
  int epsg = 4326;
  std::array<double, 6> transform{1, 0, 0, 0, 1, 0};

  bool operator==(const GeoRef &) const = default;
};

struct PixelCoord
{
  double col = 0.0;
  double row = 0.0;
};

bool is_utm_epsg(int epsg);
/// Throws ConfigError for CRS codes other than 4326 / 326xx / 327xx.
void check_supported_epsg(int epsg);

/// Lat/lon to the CRS coordinates of `epsg` (x = lon for 4326, easting for UTM).
std::array<double, 2> to_crs(int epsg, double lat, double lon);
LatLon from_crs(int epsg, double x, double y);

PixelCoord crs_to_pixel(const GeoRef & georef, double x, double y);
std::array<double, 2> pixel_to_crs(const GeoRef & georef, double col, double row);

/// Throws SingularTransform when the affine part is not invertible.
PixelCoord geo_to_pixel(const GeoRef & georef, double lat, double lon);
LatLon pixel_to_geo(const GeoRef & georef, double col, double row);

enum class Provider { Planet, Sentinel2, Synthetic };
std::string to_string(Provider p);
Provider provider_from_string(const std::string & s);

/// Georeference sidecar accompanying every image.
struct Sidecar
{
  GeoRef georef;
  int width = 0;
  int height = 0;
  std::int64_t timestamp = 0;  // UTC epoch seconds
  Provider provider = Provider::Synthetic;
  double gsd_m = 1.0;

  bool operator==(const Sidecar &) const = default;
};

nlohmann::json to_json(const Sidecar & s);
Sidecar sidecar_from_json(const nlohmann::json & j);
Sidecar load_sidecar(const std::string & path);
void save_sidecar(const Sidecar & s, const std::string & path);

}  // namespace shipfuse::geo
