#include <cmath>
#include <random>

#include "doctest.h"
#include "shipfuse/error.hpp"
#include "shipfuse/geo.hpp"

using namespace shipfuse;
using namespace shipfuse::geo;

namespace
{

struct Golden
{
  double lat, lon;
  int zone;
  bool south;
  double easting, northing;
};

// Produced by tests/oracles/utm_golden.py (PROJ 9.5 through pyproj 3.7).
const Golden kGolden[] = {
  {37.8044, -122.2712, 10, false, 564156.706960, 4184363.275272},
  {33.7542, -118.2165, 11, false, 387333.055823, 3735567.338712},
  {0.0, -122.5, 10, false, 555638.192444, 0.000000},
  {60.0, -120.0001, 10, false, 667289.247180, 6655205.230657},
  {-45.0, -125.9, 10, true, 271435.514118, 5012957.693385},
  {-33.8688, 151.2093, 56, true, 334368.633648, 6250948.345385},
  {46.0569, 14.5058, 33, false, 461772.211671, 5100488.213220},
  {83.9, 2.5, 31, false, 494068.144609, 9316955.890287},
  {-83.5, -177.2, 1, true, 497472.302194, 727719.745670},
  {12.345, 0.0, 31, false, 173707.520291, 1366531.093890},
};

}  // namespace

TEST_CASE("utm anchors on the central meridian")
{
  const UtmCoord u = wgs84_to_utm(0.0, -123.0);
  CHECK(u.zone == 10);
  CHECK(u.hemisphere == Hemisphere::North);
  CHECK(std::abs(u.easting - 500000.0) <= 1e-6);
  CHECK(std::abs(u.northing) <= 1e-6);

  const UtmCoord east = wgs84_to_utm(0.0, -122.5, 10);
  CHECK(east.easting > 500000.0);
  CHECK(std::abs(east.northing) <= 1e-6);

  const LatLon back = utm_to_wgs84({500000.0, 0.0, 10, Hemisphere::North});
  CHECK(std::abs(back.lat) <= 1e-12);
  CHECK(std::abs(back.lon + 123.0) <= 1e-12);
  const LatLon south = utm_to_wgs84({500000.0, 10000000.0, 10, Hemisphere::South});
  CHECK(std::abs(south.lat) <= 1e-12);
  CHECK(std::abs(south.lon + 123.0) <= 1e-12);
}

TEST_CASE("utm matches the PROJ golden vectors to a millimetre")
{
  for (const Golden & g : kGolden) {
    CAPTURE(g.lat);
    CAPTURE(g.lon);
    const UtmCoord u = wgs84_to_utm(g.lat, g.lon, g.zone, g.south ? Hemisphere::South : Hemisphere::North);
    CHECK(std::abs(u.easting - g.easting) < 1e-3);
    CHECK(std::abs(u.northing - g.northing) < 1e-3);
    const LatLon back = utm_to_wgs84(u);
    CHECK(std::abs(back.lat - g.lat) < 1e-9);
    CHECK(std::abs(back.lon - g.lon) < 1e-9);
  }
}

TEST_CASE("utm default zone and domain errors")
{
  CHECK(utm_zone_for(-122.27) == 10);
  CHECK(utm_zone_for(-180.0) == 1);
  CHECK(utm_zone_for(179.99) == 60);
  CHECK(wgs84_to_utm(37.8044, -122.2712).zone == 10);
  CHECK(wgs84_to_utm(-10.0, 20.0).hemisphere == Hemisphere::South);
  CHECK_THROWS_AS(wgs84_to_utm(84.5, 0.0), OutOfDomain);
  CHECK_THROWS_AS(wgs84_to_utm(-85.0, 0.0), OutOfDomain);
  CHECK_NOTHROW(wgs84_to_utm(84.0, 0.0));
}

TEST_CASE("utm round trip over random in-zone points")
{
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> lat_d(-84.0, 84.0);
  std::uniform_real_distribution<double> dlon_d(-3.0, 3.0);
  std::uniform_int_distribution<int> zone_d(1, 60);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const int zone = zone_d(rng);
    const double lat = lat_d(rng);
    double lon = central_meridian(zone) + dlon_d(rng);
    lon = std::clamp(lon, -180.0, 180.0);
    const UtmCoord u = wgs84_to_utm(lat, lon, zone);
    const LatLon back = utm_to_wgs84(u);
    worst = std::max({worst, std::abs(back.lat - lat), std::abs(back.lon - lon)});
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("easting is antisymmetric about the central meridian")
{
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lat_d(-80.0, 80.0);
  std::uniform_real_distribution<double> d_d(0.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const double lat = lat_d(rng);
    const double d = d_d(rng);
    const double cm = central_meridian(33);
    const double east = wgs84_to_utm(lat, cm + d, 33).easting - 500000.0;
    const double west = wgs84_to_utm(lat, cm - d, 33).easting - 500000.0;
    CHECK(std::abs(east + west) < 1e-6);
  }
}

TEST_CASE("haversine")
{
  CHECK(haversine_m({37.8, -122.3}, {37.8, -122.3}) == 0.0);
  CHECK(haversine_m({0, 0}, {1, 0}) == doctest::Approx(111195.0).epsilon(1.0 / 111195.0));
  // Python evaluation of the same formula with R = 6371008.8 m.
  CHECK(haversine_m({37.8, -122.3}, {37.8, -122.2}) == doctest::Approx(8786.134580884209).epsilon(1e-12));
}

TEST_CASE("affine pixel mapping")
{
  GeoRef identity{4326, {1, 0, 0, 0, 1, 0}};
  const PixelCoord p = geo_to_pixel(identity, 5.0, 3.0);
  CHECK(p.col == 3.0);
  CHECK(p.row == 5.0);

  GeoRef north_up{32610, {3, 0, 600000, 0, -3, 4200000}};
  const PixelCoord q = crs_to_pixel(north_up, 600030, 4199970);
  CHECK(q.col == 10.0);
  CHECK(q.row == 10.0);
  const auto [x, y] = pixel_to_crs(north_up, 10, 10);
  CHECK(x == 600030);
  CHECK(y == 4199970);

  // Increasing row decreases northing on north-up rasters.
  for (int row = 0; row < 100; ++row) {
    CHECK(pixel_to_crs(north_up, 5, row + 1)[1] < pixel_to_crs(north_up, 5, row)[1]);
  }

  // Lat/lon through the UTM projection lands where the projected coordinates say.
  const UtmCoord u = wgs84_to_utm(37.8044, -122.2712, 10);
  GeoRef scene{32610, {3, 0, u.easting - 300, 0, -3, u.northing + 600}};
  const PixelCoord s = geo_to_pixel(scene, 37.8044, -122.2712);
  CHECK(s.col == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(s.row == doctest::Approx(200.0).epsilon(1e-9));
  const LatLon back = pixel_to_geo(scene, s.col, s.row);
  CHECK(std::abs(back.lat - 37.8044) < 1e-9);
  CHECK(std::abs(back.lon + 122.2712) < 1e-9);
}

TEST_CASE("affine round trip on random invertible transforms")
{
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> coef(-20.0, 20.0);
  std::uniform_real_distribution<double> offset(-1e6, 1e6);
  std::uniform_real_distribution<double> pix(-5000.0, 5000.0);
  double worst = 0.0;
  int tested = 0;
  while (tested < 2000) {
    GeoRef g{32633, {coef(rng), coef(rng), offset(rng), coef(rng), coef(rng), offset(rng)}};
    const auto & t = g.transform;
    if (std::abs(t[0] * t[4] - t[1] * t[3]) < 1.0) {
      continue;
    }
    ++tested;
    const double col = pix(rng), row = pix(rng);
    const auto [x, y] = pixel_to_crs(g, col, row);
    const PixelCoord back = crs_to_pixel(g, x, y);
    worst = std::max({worst, std::abs(back.col - col), std::abs(back.row - row)});
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("singular and unsupported georeferences")
{
  GeoRef singular{4326, {1, 2, 0, 2, 4, 0}};
  CHECK_THROWS_AS(geo_to_pixel(singular, 0, 0), SingularTransform);
  GeoRef zero{4326, {0, 0, 0, 0, 0, 0}};
  CHECK_THROWS_AS(crs_to_pixel(zero, 0, 0), SingularTransform);
  GeoRef mercator{3857, {1, 0, 0, 0, -1, 0}};
  CHECK_THROWS_AS(geo_to_pixel(mercator, 0, 0), ConfigError);
  CHECK(is_utm_epsg(32610));
  CHECK(is_utm_epsg(32760));
  CHECK_FALSE(is_utm_epsg(32661));
  CHECK_FALSE(is_utm_epsg(32600));
}

TEST_CASE("sidecar json round trip")
{
  Sidecar s;
  s.georef = {32610, {3, 0, 550000, 0, -3, 4190000}};
  s.width = 2000;
  s.height = 1500;
  s.timestamp = 1467397930;
  s.provider = Provider::Planet;
  s.gsd_m = 3.0;
  const auto j = to_json(s);
  CHECK(j["timestamp"] == "2016-07-01T18:32:10Z");
  CHECK(j["provider"] == "planet");
  CHECK(sidecar_from_json(j) == s);
  auto bad = j;
  bad["epsg"] = 3857;
  CHECK_THROWS_AS(sidecar_from_json(bad), ConfigError);
  bad = j;
  bad.erase("transform");
  CHECK_THROWS_AS(sidecar_from_json(bad), FormatError);
  CHECK_THROWS_AS(load_sidecar("/nonexistent/sidecar.json"), MissingGeoRef);
}
