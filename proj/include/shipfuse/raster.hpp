#pragma once

#include <optional>
#include <string>
#include <vector>

#include "shipfuse/box.hpp"
#include "shipfuse/geo.hpp"
#include "shipfuse/image.hpp"
#include "shipfuse/kernels.hpp"

namespace shipfuse::raster
{

/// Georeferenced image plus optional cloud mask (1 = cloud/unusable).
struct RasterBundle
{
  std::string id;
  Image image;
  geo::GeoRef georef;
  std::int64_t timestamp = 0;
  geo::Provider provider = geo::Provider::Synthetic;
  double gsd_m = 1.0;
  std::optional<Mask> cloud_mask;

  int width() const { return image.width; }
  int height() const { return image.height; }
};

struct BundleChecks
{
  double gsd_tolerance = 0.01;           // relative, against |transform a| on UTM rasters
  double provider_gsd_tolerance = 0.05;  // relative, against the provider's nominal GSD
  bool check_provider_gsd = true;
};

/// Nominal GSD in meters; nullopt for providers with no fixed resolution.
std::optional<double> nominal_gsd(geo::Provider p);

/// Throws GeoMismatch when the parts of a bundle disagree.
void validate_bundle(const RasterBundle & b, const BundleChecks & checks = {});

/// Loads a PNG or TIFF, its sidecar and an optional mask PNG.
RasterBundle load_bundle(const std::string & image_path, const std::string & sidecar_path,
                         const std::optional<std::string> & mask_path = std::nullopt, const BundleChecks & checks = {});

struct Origin
{
  int x = 0;
  int y = 0;
  auto operator<=>(const Origin &) const = default;
};

/// Per-axis tile origins: multiples of the stride, then a final origin clamped
/// to max(0, dim - size), deduplicated and ascending.
std::vector<int> axis_origins(int dim, int size, int overlap);

/// Row-major (y, then x) list of tile origins covering a width x height image.
std::vector<Origin> tile_plan(int width, int height, int size = 800, int overlap = 200);

struct Tile
{
  std::string parent_id;
  Origin origin;
  int size = 0;
  Image pixels;
  double pad_fraction = 0.0;

  Box bounds() const { return {double(origin.x), double(origin.y), double(origin.x + size), double(origin.y + size)}; }
};

Tile extract_tile(const RasterBundle & bundle, Origin origin, int size);

/// Keeps boxes with at least `min_inside` of their area within the tile,
/// translated to tile coordinates and clipped to [0, size].
std::vector<AnnotationBox> clip_boxes_to_tile(const Tile & tile, const std::vector<AnnotationBox> & boxes,
                                              double min_inside = 0.5);
std::vector<AnnotationBox> clip_boxes_to_rect(const Box & rect, const std::vector<AnnotationBox> & boxes,
                                              double min_inside = 0.5);

struct StretchResult
{
  Image image;
  std::vector<kernels::StretchRange> ranges;
};

/// 8-bit input passes through; deeper samples get a per-band percentile stretch.
StretchResult to_8bit(const Image & image, double lo_fraction = 0.02, double hi_fraction = 0.98);

}  // namespace shipfuse::raster
