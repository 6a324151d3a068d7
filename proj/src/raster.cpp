#include "shipfuse/raster.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "shipfuse/error.hpp"
#include "shipfuse/image_io.hpp"

namespace shipfuse::raster
{

std::optional<double> nominal_gsd(geo::Provider p)
{
  switch (p) {
    case geo::Provider::Planet:
      return 3.0;
    case geo::Provider::Sentinel2:
      return 10.0;
    case geo::Provider::Synthetic:
      break;
  }
  return std::nullopt;
}

void validate_bundle(const RasterBundle & b, const BundleChecks & checks)
{
  if (b.image.channels() < 1 || b.image.channels() > 4) {
    throw GeoMismatch("bundle needs 1-4 bands, got " + std::to_string(b.image.channels()));
  }
  for (const auto & band : b.image.bands) {
    if (band.width() != b.image.width || band.height() != b.image.height) {
      throw GeoMismatch("band dimensions differ from the image");
    }
  }
  if (b.cloud_mask && (b.cloud_mask->width() != b.image.width || b.cloud_mask->height() != b.image.height)) {
    throw GeoMismatch("cloud mask is " + std::to_string(b.cloud_mask->width()) + "x" +
                      std::to_string(b.cloud_mask->height()) + ", image is " + std::to_string(b.image.width) + "x" +
                      std::to_string(b.image.height));
  }
  if (!(b.gsd_m > 0.0)) {
    throw GeoMismatch("gsd_m must be positive");
  }
  if (geo::is_utm_epsg(b.georef.epsg)) {
    const double a = std::abs(b.georef.transform[0]);
    if (std::abs(a - b.gsd_m) > checks.gsd_tolerance * b.gsd_m) {
      throw GeoMismatch("gsd_m " + std::to_string(b.gsd_m) + " disagrees with transform pixel size " +
                        std::to_string(a));
    }
  }
  if (checks.check_provider_gsd) {
    if (const auto nominal = nominal_gsd(b.provider);
        nominal && std::abs(b.gsd_m - *nominal) > checks.provider_gsd_tolerance * *nominal) {
      throw GeoMismatch(geo::to_string(b.provider) + " imagery is " + std::to_string(*nominal) +
                        " m/px, sidecar says " + std::to_string(b.gsd_m));
    }
  }
}

RasterBundle load_bundle(const std::string & image_path, const std::string & sidecar_path,
                         const std::optional<std::string> & mask_path, const BundleChecks & checks)
{
  const geo::Sidecar sidecar = geo::load_sidecar(sidecar_path);
  io::TiffRaster raster = io::read_raster(image_path);
  RasterBundle b;
  b.id = std::filesystem::path(image_path).stem().string();
  b.image = std::move(raster.image);
  if (b.image.width != sidecar.width || b.image.height != sidecar.height) {
    throw GeoMismatch("sidecar declares " + std::to_string(sidecar.width) + "x" + std::to_string(sidecar.height) +
                      " but image is " + std::to_string(b.image.width) + "x" + std::to_string(b.image.height));
  }
  if (raster.georef && raster.georef->epsg != sidecar.georef.epsg) {
    throw GeoMismatch("embedded GeoTIFF CRS differs from the sidecar");
  }
  b.georef = sidecar.georef;
  b.timestamp = sidecar.timestamp;
  b.provider = sidecar.provider;
  b.gsd_m = sidecar.gsd_m;
  if (mask_path) {
    b.cloud_mask = io::read_mask_png(*mask_path);
  }
  validate_bundle(b, checks);
  return b;
}

std::vector<int> axis_origins(int dim, int size, int overlap)
{
  if (size <= 0 || overlap < 0 || size <= overlap) {
    throw ConfigError("tile size must exceed overlap (size " + std::to_string(size) + ", overlap " +
                      std::to_string(overlap) + ")");
  }
  const int stride = size - overlap;
  std::vector<int> out;
  for (int o = 0; o + size < dim; o += stride) {
    out.push_back(o);
  }
  out.push_back(std::max(0, dim - size));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Origin> tile_plan(int width, int height, int size, int overlap)
{
  const auto xs = axis_origins(width, size, overlap);
  const auto ys = axis_origins(height, size, overlap);
  std::vector<Origin> out;
  out.reserve(xs.size() * ys.size());
  for (int y : ys) {
    for (int x : xs) {
      out.push_back({x, y});
    }
  }
  return out;
}

Tile extract_tile(const RasterBundle & bundle, Origin origin, int size)
{
  Tile t;
  t.parent_id = bundle.id;
  t.origin = origin;
  t.size = size;
  t.pixels = kernels::parallel::crop_pad(bundle.image, origin.x, origin.y, size);
  const kernels::PixelRect inside{std::max(origin.x, 0), std::max(origin.y, 0), std::min(origin.x + size, bundle.width()),
                                  std::min(origin.y + size, bundle.height())};
  t.pad_fraction = 1.0 - static_cast<double>(inside.area()) / (static_cast<double>(size) * size);
  return t;
}

std::vector<AnnotationBox> clip_boxes_to_rect(const Box & rect, const std::vector<AnnotationBox> & boxes,
                                              double min_inside)
{
  std::vector<AnnotationBox> out;
  for (const AnnotationBox & a : boxes) {
    const double area = a.box.area();
    if (area <= 0.0) {
      continue;
    }
    const double inside = intersection_area(a.box, rect);
    if (inside < min_inside * area) {
      continue;
    }
    AnnotationBox c = a;
    c.box = intersect(a.box, rect).translated(-rect.x_min, -rect.y_min);
    if (c.center_x) {
      *c.center_x -= rect.x_min;
    }
    if (c.center_y) {
      *c.center_y -= rect.y_min;
    }
    out.push_back(c);
  }
  return out;
}

std::vector<AnnotationBox> clip_boxes_to_tile(const Tile & tile, const std::vector<AnnotationBox> & boxes,
                                              double min_inside)
{
  return clip_boxes_to_rect(tile.bounds(), boxes, min_inside);
}

StretchResult to_8bit(const Image & image, double lo_fraction, double hi_fraction)
{
  if (image.bit_depth <= 8) {
    return {image, std::vector<kernels::StretchRange>(image.channels(), kernels::StretchRange{0, 255})};
  }
  StretchResult r;
  for (const auto & band : image.bands) {
    r.ranges.push_back(kernels::percentile_range(band, lo_fraction, hi_fraction));
  }
  r.image = kernels::parallel::stretch_to_8bit(image, r.ranges);
  return r;
}

}  // namespace shipfuse::raster
