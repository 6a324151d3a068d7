#pragma once

// Synthetic georeferenced scene: bright ship blobs on dark sea at known
// positions, matching moored AIS reports, and an optional cloud block.

#include <cstdint>
#include <vector>

#include "shipfuse/ais.hpp"
#include "shipfuse/geo.hpp"
#include "shipfuse/raster.hpp"

namespace testing_support
{

struct SyntheticShip
{
  double col;  // AIS position in pixels
  double row;
  double length_m;
  bool under_cloud = false;
};

struct SyntheticScene
{
  shipfuse::raster::RasterBundle bundle;
  std::vector<shipfuse::ais::AisRecord> records;
  std::vector<SyntheticShip> ships;
};

inline constexpr std::int64_t kSceneTime = 1467397930;  // 2016-07-01T18:32:10Z

inline shipfuse::geo::GeoRef scene_georef(double gsd)
{
  return {32610, {gsd, 0, 552000, 0, -gsd, 4186000}};
}

/// Renders each ship as a horizontal bar of length/gsd by max(3, length/gsd/6)
/// pixels at value 220 on a sea of 30. Ships flagged `under_cloud` sit inside
/// a 240x240 cloud block of mask value 1 and image value 120.
inline SyntheticScene make_scene(int size, double gsd, const std::vector<SyntheticShip> & ships, bool with_clouds)
{
  using namespace shipfuse;
  SyntheticScene s;
  s.ships = ships;
  auto & b = s.bundle;
  b.id = "synthetic";
  b.image = Image(size, size, 3, 8);
  for (auto & band : b.image.bands) {
    std::fill(band.data().begin(), band.data().end(), 30);
  }
  b.georef = scene_georef(gsd);
  b.timestamp = kSceneTime;
  b.provider = geo::Provider::Synthetic;
  b.gsd_m = gsd;
  b.cloud_mask = Mask(size, size, 0);
  auto fill = [&](int x0, int y0, int x1, int y1, std::uint16_t v) {
    for (int y = std::max(0, y0); y < std::min(size, y1); ++y) {
      for (int x = std::max(0, x0); x < std::min(size, x1); ++x) {
        for (auto & band : b.image.bands) {
          band.at(x, y) = v;
        }
      }
    }
  };
  if (with_clouds) {
    for (const auto & ship : ships) {
      if (!ship.under_cloud) {
        continue;
      }
      const int cx = static_cast<int>(ship.col), cy = static_cast<int>(ship.row);
      fill(cx - 120, cy - 120, cx + 120, cy + 120, 120);
      for (int y = std::max(0, cy - 120); y < std::min(size, cy + 120); ++y) {
        for (int x = std::max(0, cx - 120); x < std::min(size, cx + 120); ++x) {
          b.cloud_mask->at(x, y) = 1;
        }
      }
    }
  }
  std::uint32_t mmsi = 366000001;
  for (const auto & ship : ships) {
    const double len_px = ship.length_m / gsd;
    const double wid_px = std::max(3.0, len_px / 6.0);
    fill(static_cast<int>(std::lround(ship.col - len_px / 2)), static_cast<int>(std::lround(ship.row - wid_px / 2)),
         static_cast<int>(std::lround(ship.col + len_px / 2)), static_cast<int>(std::lround(ship.row + wid_px / 2)), 220);
    const geo::LatLon ll = geo::pixel_to_geo(b.georef, ship.col, ship.row);
    for (int k = -1; k <= 1; ++k) {
      ais::AisRecord r;
      r.mmsi = mmsi;
      r.timestamp = kSceneTime + 60 * k;
      r.lat = ll.lat + 1e-6 * k;
      r.lon = ll.lon - 1e-6 * k;
      r.nav_status = ais::kMoored;
      r.length_m = ship.length_m;
      r.sog = 0.0;
      s.records.push_back(r);
    }
    ++mmsi;
  }
  return s;
}

/// The twelve-ship acceptance layout on a 2000x2000, 3 m scene. Two ships sit
/// under clouds; one sits in the horizontal overlap of the first two tile columns.
inline std::vector<SyntheticShip> acceptance_ships()
{
  return {
    {150.5, 150.5, 60.0},   {700.25, 300.75, 150.0}, {1000.5, 120.5, 90.0},  {1500.5, 400.5, 350.0},
    {300.5, 900.5, 120.0},  {900.5, 1000.5, 200.0},  {1300.5, 700.5, 75.0},  {1800.5, 1100.5, 260.0},
    {200.5, 1700.5, 180.0}, {1100.5, 1600.5, 300.0}, {600.5, 1350.5, 100.0, true}, {1650.5, 1750.5, 220.0, true},
  };
}

}  // namespace testing_support
