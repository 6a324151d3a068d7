#include "shipfuse/correlate.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "shipfuse/error.hpp"

namespace shipfuse::correlate
{

AisIndex::AisIndex(std::vector<ais::AisRecord> records) : records_(std::move(records))
{
  std::stable_sort(records_.begin(), records_.end(), [](const ais::AisRecord & a, const ais::AisRecord & b) {
    return a.timestamp < b.timestamp;
  });
}

std::span<const ais::AisRecord> AisIndex::between(std::int64_t t0, std::int64_t t1) const
{
  const auto lo = std::lower_bound(records_.begin(), records_.end(), t0,
                                   [](const ais::AisRecord & r, std::int64_t t) { return r.timestamp < t; });
  const auto hi = std::upper_bound(lo, records_.end(), t1,
                                   [](std::int64_t t, const ais::AisRecord & r) { return t < r.timestamp; });
  return {lo, hi};
}

Selection select_stationary(std::span<const ais::AisRecord> records, std::int64_t t_image, const Params & p)
{
  const double half = p.window_s / 2.0;
  std::map<std::uint32_t, std::vector<const ais::AisRecord *>> by_mmsi;
  for (const ais::AisRecord & r : records) {
    if (std::abs(static_cast<double>(r.timestamp - t_image)) <= half) {
      by_mmsi[r.mmsi].push_back(&r);
    }
  }
  Selection out;
  for (auto & [mmsi, reports] : by_mmsi) {
    std::stable_sort(reports.begin(), reports.end(),
                     [](const ais::AisRecord * a, const ais::AisRecord * b) { return a->timestamp < b->timestamp; });
    const auto n_excluded = std::count_if(reports.begin(), reports.end(), [&](const ais::AisRecord * r) {
      return p.excluded_status.count(r->nav_status) > 0;
    });
    if (n_excluded == static_cast<std::ptrdiff_t>(reports.size())) {
      continue;
    }
    if (n_excluded > 0) {
      ++out.dropped_mixed_status;
      continue;
    }
    // Length is a static property: take the latest report that carries one.
    std::optional<double> length;
    for (const ais::AisRecord * r : reports) {
      if (r->length_m) {
        length = r->length_m;
      }
    }
    if (!length || !(*length > p.min_length_m)) {
      continue;
    }
    ShipObservation obs;
    obs.mmsi = mmsi;
    obs.n_reports = static_cast<int>(reports.size());
    obs.length_m = *length;
    obs.nav_status = reports.back()->nav_status;
    obs.t_start = reports.front()->timestamp;
    obs.t_end = reports.back()->timestamp;
    double sum_lat = 0.0, sum_lon = 0.0;
    for (const ais::AisRecord * r : reports) {
      sum_lat += r->lat;
      sum_lon += r->lon;
    }
    obs.mean_lat = sum_lat / obs.n_reports;
    obs.mean_lon = sum_lon / obs.n_reports;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      for (std::size_t j = i + 1; j < reports.size(); ++j) {
        obs.spread_m =
          std::max(obs.spread_m, geo::haversine_m({reports[i]->lat, reports[i]->lon}, {reports[j]->lat, reports[j]->lon}));
      }
    }
    if (obs.spread_m > p.spread_warn_factor * obs.length_m) {
      out.warnings.push_back("mmsi " + std::to_string(mmsi) + ": in-window spread " + std::to_string(obs.spread_m) +
                             " m exceeds " + std::to_string(p.spread_warn_factor) + "x length");
    }
    out.observations.push_back(obs);
  }
  return out;
}

AnnotationBox make_box(const ShipObservation & obs, const geo::GeoRef & georef, double gsd_m, double scale, int width,
                       int height)
{
  if (!(gsd_m > 0.0)) {
    throw ConfigError("gsd_m must be positive");
  }
  const geo::PixelCoord c = geo::geo_to_pixel(georef, obs.mean_lat, obs.mean_lon);
  const double half = scale * obs.length_m / gsd_m / 2.0;
  const Box full{c.col - half, c.row - half, c.col + half, c.row + half};
  const Box image{0.0, 0.0, static_cast<double>(width), static_cast<double>(height)};
  const Box clipped = intersect(full, image);
  if (!clipped.valid()) {
    throw OffImage("mmsi " + std::to_string(obs.mmsi) + " projects outside the image");
  }
  AnnotationBox a;
  a.box = clipped;
  a.mmsi = obs.mmsi;
  a.length_m = obs.length_m;
  a.center_x = c.col;
  a.center_y = c.row;
  return a;
}

kernels::PixelRect rounded_intersection(const Box & box, int width, int height)
{
  auto r = [](double v) { return static_cast<int>(std::lround(v)); };
  kernels::PixelRect rect{r(std::clamp(box.x_min, 0.0, double(width))), r(std::clamp(box.y_min, 0.0, double(height))),
                          r(std::clamp(box.x_max, 0.0, double(width))), r(std::clamp(box.y_max, 0.0, double(height)))};
  return rect;
}

double cloud_fraction(const Box & box, const Mask & mask)
{
  const kernels::PixelRect rect = rounded_intersection(box, mask.width(), mask.height());
  const std::int64_t total = rect.area();
  if (total == 0) {
    return 1.0;
  }
  return static_cast<double>(kernels::parallel::count_nonzero(mask, rect)) / static_cast<double>(total);
}

AnnotateResult annotate_image(const raster::RasterBundle & bundle, std::span<const ais::AisRecord> records,
                              const Params & p)
{
  AnnotateResult out;
  Selection sel = select_stationary(records, bundle.timestamp, p);
  out.warnings = std::move(sel.warnings);
  out.observations = std::move(sel.observations);
  out.counters.observations = out.observations.size();
  for (const ShipObservation & obs : out.observations) {
    AnnotationBox box, vis;
    try {
      box = make_box(obs, bundle.georef, bundle.gsd_m, p.train_scale, bundle.width(), bundle.height());
      vis = make_box(obs, bundle.georef, bundle.gsd_m, p.vis_scale, bundle.width(), bundle.height());
    } catch (const OffImage &) {
      ++out.counters.off_image;
      continue;
    }
    if (bundle.cloud_mask) {
      box.cloud_fraction = cloud_fraction(box.box, *bundle.cloud_mask);
    }
    box.cloud_flagged = box.cloud_fraction > p.cloud_threshold;
    vis.cloud_fraction = box.cloud_fraction;
    vis.cloud_flagged = box.cloud_flagged;
    out.counters.flagged += box.cloud_flagged ? 1 : 0;
    ++out.counters.matched;
    out.boxes.push_back(box);
    out.vis_boxes.push_back(vis);
  }
  return out;
}

AnnotateResult annotate_image(const raster::RasterBundle & bundle, const AisIndex & index, const Params & p)
{
  const auto half = static_cast<std::int64_t>(std::ceil(p.window_s / 2.0));
  return annotate_image(bundle, index.between(bundle.timestamp - half, bundle.timestamp + half), p);
}

}  // namespace shipfuse::correlate
