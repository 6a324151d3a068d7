#pragma once

// Small on-disk dataset in the catalog layout: square images split into
// 32-px patches with 8 px overlap, two annotations per image (one flagged).

#include <filesystem>
#include <string>
#include <vector>

#include "shipfuse/catalog.hpp"
#include "shipfuse/image_io.hpp"
#include "shipfuse/raster.hpp"

namespace testing_support
{

struct FixtureImage
{
  std::string id;
  int size = 64;
  std::string location = "SF";
  std::string year = "2016";
};

inline void build_fixture(const std::filesystem::path & root, const std::vector<FixtureImage> & images,
                          int patch = 32, int overlap = 8)
{
  using namespace shipfuse;
  std::filesystem::remove_all(root);
  for (std::size_t n = 0; n < images.size(); ++n) {
    const FixtureImage & fi = images[n];
    Image img(fi.size, fi.size, 3, 8);
    for (int b = 0; b < 3; ++b) {
      for (int y = 0; y < fi.size; ++y) {
        for (int x = 0; x < fi.size; ++x) {
          img.bands[b].at(x, y) = static_cast<std::uint16_t>((x * 3 + y * 5 + b * 40 + n * 17) % 256);
        }
      }
    }
    geo::Sidecar sc;
    sc.georef = {32610, {3, 0, 552000, 0, -3, 4186000}};
    sc.width = sc.height = fi.size;
    sc.timestamp = 1467397930 + static_cast<std::int64_t>(n);
    sc.provider = geo::Provider::Planet;
    sc.gsd_m = 3.0;
    const auto dir = catalog::image_dir(root, "planet", fi.location, fi.year);
    std::filesystem::create_directories(dir);
    io::write_png((dir / (fi.id + ".png")).string(), img);
    geo::save_sidecar(sc, (dir / (fi.id + ".json")).string());

    raster::RasterBundle bundle;
    bundle.id = fi.id;
    bundle.image = img;
    for (const auto & o : raster::tile_plan(fi.size, fi.size, patch, overlap)) {
      const auto t = raster::extract_tile(bundle, o, patch);
      const auto p = root / "patches" / fi.id / (std::to_string(o.x) + "_" + std::to_string(o.y) + ".png");
      std::filesystem::create_directories(p.parent_path());
      io::write_png(p.string(), t.pixels);
    }

    std::vector<AnnotationRecord> recs(2);
    recs[0].image_id = recs[1].image_id = fi.id;
    recs[0].annotation.box = {4, 4, 14, 8};
    recs[0].annotation.mmsi = 366000001 + 10 * static_cast<std::uint32_t>(n);
    recs[0].annotation.length_m = 30.0 + 3.0 * 10;
    recs[1].annotation.box = {fi.size - 12.0, fi.size - 9.0, fi.size - 2.0, fi.size - 5.0};
    recs[1].annotation.mmsi = recs[0].annotation.mmsi + 1;
    recs[1].annotation.length_m = 90.0;
    recs[1].annotation.cloud_fraction = 0.5;
    recs[1].annotation.cloud_flagged = true;
    for (auto & r : recs) {
      r.annotation.center_x = r.annotation.box.center_x();
      r.annotation.center_y = r.annotation.box.center_y();
    }
    catalog::write_annotations(root, fi.id, recs);
  }
}

}  // namespace testing_support
