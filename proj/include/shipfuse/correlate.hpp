#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "shipfuse/ais.hpp"
#include "shipfuse/box.hpp"
#include "shipfuse/geo.hpp"
#include "shipfuse/image.hpp"
#include "shipfuse/raster.hpp"

namespace shipfuse::correlate
{

struct Params
{
  double window_s = 300.0;               // total width, centred on the capture time
  double min_length_m = 30.0;            // strict: length must exceed this
  std::set<int> excluded_status = {0};   // under way using engine
  double train_scale = 1.0;
  double vis_scale = 2.0;
  double cloud_threshold = 0.20;         // strict: flagged iff fraction exceeds this
  double spread_warn_factor = 2.0;       // warn when report spread > factor * length
};

struct ShipObservation
{
  std::uint32_t mmsi = 0;
  double mean_lat = 0.0;
  double mean_lon = 0.0;
  int n_reports = 0;
  double length_m = 0.0;
  int nav_status = ais::kUndefined;
  std::int64_t t_start = 0;
  std::int64_t t_end = 0;
  double spread_m = 0.0;  // largest pairwise distance between contributing reports

  bool operator==(const ShipObservation &) const = default;
};

struct Selection
{
  std::vector<ShipObservation> observations;  // ascending MMSI
  std::vector<std::string> warnings;
  std::size_t dropped_mixed_status = 0;
};

/// Records sorted by time so windows are found by binary search.
class AisIndex
{
public:
  explicit AisIndex(std::vector<ais::AisRecord> records);
  std::span<const ais::AisRecord> between(std::int64_t t0, std::int64_t t1) const;
  std::size_t size() const { return records_.size(); }

private:
  std::vector<ais::AisRecord> records_;
};

Selection select_stationary(std::span<const ais::AisRecord> records, std::int64_t t_image, const Params & p = {});

/// Square box of side scale * length / gsd around the projected position,
/// clipped to the image. Throws OffImage when nothing of it lies inside.
AnnotationBox make_box(const ShipObservation & obs, const geo::GeoRef & georef, double gsd_m, double scale, int width,
                       int height);

/// Box bounds rounded to integers and intersected with the mask extent.
kernels::PixelRect rounded_intersection(const Box & box, int width, int height);

/// Cloudy share of the box's rounded intersection with the mask; 1.0 when empty.
double cloud_fraction(const Box & box, const Mask & mask);

struct Counters
{
  std::size_t observations = 0;
  std::size_t matched = 0;
  std::size_t off_image = 0;
  std::size_t flagged = 0;
  bool operator==(const Counters &) const = default;
};

struct AnnotateResult
{
  std::vector<AnnotationBox> boxes;      // training boxes (train_scale)
  std::vector<AnnotationBox> vis_boxes;  // visualization boxes (vis_scale)
  std::vector<ShipObservation> observations;
  Counters counters;
  std::vector<std::string> warnings;
};

AnnotateResult annotate_image(const raster::RasterBundle & bundle, std::span<const ais::AisRecord> records,
                              const Params & p = {});
AnnotateResult annotate_image(const raster::RasterBundle & bundle, const AisIndex & index, const Params & p = {});

}  // namespace shipfuse::correlate
