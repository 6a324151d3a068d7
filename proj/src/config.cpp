#include "shipfuse/config.hpp"

#include <fstream>
#include <set>

#include "shipfuse/error.hpp"

namespace shipfuse
{

using nlohmann::json;

namespace
{

std::string mode_name(detect::ThresholdMode m)
{
  return m == detect::ThresholdMode::Otsu ? "otsu" : "fixed";
}

std::string mode_name(airbus::LengthMode m)
{
  return m == airbus::LengthMode::MinAreaRect ? "min_area_rect" : "diameter";
}

// Walks every leaf as (dotted path, reference); `F` decides whether to read or write.
template <class C, class F>
void visit(C & c, F && f)
{
  f("ais.reject_cap", c.ais.reject_cap);
  f("ais.reassembly_window", c.ais.reassembly_window);

  f("raster.gsd_tolerance", c.raster.checks.gsd_tolerance);
  f("raster.provider_gsd_tolerance", c.raster.checks.provider_gsd_tolerance);
  f("raster.check_provider_gsd", c.raster.checks.check_provider_gsd);
  f("raster.stretch_lo", c.raster.stretch_lo);
  f("raster.stretch_hi", c.raster.stretch_hi);
  f("raster.tile_size", c.raster.tile_size);
  f("raster.overlap", c.raster.overlap);
  f("raster.min_inside", c.raster.min_inside);

  f("correlate.window_s", c.correlate.window_s);
  f("correlate.min_length_m", c.correlate.min_length_m);
  f("correlate.excluded_status", c.correlate.excluded_status);
  f("correlate.train_scale", c.correlate.train_scale);
  f("correlate.vis_scale", c.correlate.vis_scale);
  f("correlate.cloud_threshold", c.correlate.cloud_threshold);
  f("correlate.spread_warn_factor", c.correlate.spread_warn_factor);

  f("airbus.min_length_m", c.airbus.min_length_m);
  f("airbus.meters_per_pixel", c.airbus.meters_per_pixel);
  f("airbus.length_mode", c.airbus.length_mode);
  f("airbus.augment.scale_lo", c.airbus.augment.scale_lo);
  f("airbus.augment.scale_hi", c.airbus.augment.scale_hi);
  f("airbus.augment.rotate_lo", c.airbus.augment.rotate_lo);
  f("airbus.augment.rotate_hi", c.airbus.augment.rotate_hi);
  f("airbus.augment.blur_lo", c.airbus.augment.blur_lo);
  f("airbus.augment.blur_hi", c.airbus.augment.blur_hi);

  f("detect.backend", c.detect.backend);
  f("detect.threshold_mode", c.detect.baseline.mode);
  f("detect.fixed_threshold", c.detect.baseline.fixed_threshold);
  f("detect.min_area_px", c.detect.baseline.min_area_px);
  f("detect.iou_threshold", c.detect.iou_threshold);
  f("detect.confidence_floor", c.detect.confidence_floor);
  f("detect.external.exchange_dir", c.detect.external.exchange_dir);
  f("detect.external.command", c.detect.external.command);
  f("detect.external.timeout_s", c.detect.external.timeout_s);
  f("detect.external.poll_interval_s", c.detect.external.poll_interval_s);

  f("eval.bin_width_m", c.eval.width_m);
  f("eval.bin_lo_m", c.eval.lo_m);
  f("eval.bin_hi_m", c.eval.hi_m);

  f("export.policy", c.export_.policy);
  f("export.format", c.export_.format);

  f("review.host", c.review.host);
  f("review.port", c.review.port);
  f("review.static_dir", c.review.static_dir);
  f("review.page_size", c.review.page_size);
  f("review.write_timeout_s", c.review.write_timeout_s);

  f("runtime.seed", c.runtime.seed);
  f("runtime.jobs", c.runtime.jobs);
}

json::json_pointer pointer(const std::string & dotted)
{
  std::string p = "/";
  for (char ch : dotted) {
    p.push_back(ch == '.' ? '/' : ch);
  }
  return json::json_pointer(p);
}

struct Writer
{
  json & out;

  template <class T>
  void operator()(const std::string & path, const T & v)
  {
    out[pointer(path)] = v;
  }
  void operator()(const std::string & path, const detect::ThresholdMode & v) { out[pointer(path)] = mode_name(v); }
  void operator()(const std::string & path, const airbus::LengthMode & v) { out[pointer(path)] = mode_name(v); }
};

struct Reader
{
  const json & in;
  std::set<std::string> & seen;

  template <class T>
  void operator()(const std::string & path, T & v)
  {
    seen.insert(path);
    const auto ptr = pointer(path);
    if (!in.contains(ptr)) {
      return;
    }
    try {
      if constexpr (std::is_same_v<T, detect::ThresholdMode>) {
        const auto s = in.at(ptr).get<std::string>();
        if (s == "otsu") {
          v = detect::ThresholdMode::Otsu;
        }
        else if (s == "fixed") {
          v = detect::ThresholdMode::Fixed;
        }
        else {
          throw ConfigError(path + ": expected otsu or fixed");
        }
      }
      else if constexpr (std::is_same_v<T, airbus::LengthMode>) {
        const auto s = in.at(ptr).get<std::string>();
        if (s == "min_area_rect") {
          v = airbus::LengthMode::MinAreaRect;
        }
        else if (s == "diameter") {
          v = airbus::LengthMode::Diameter;
        }
        else {
          throw ConfigError(path + ": expected min_area_rect or diameter");
        }
      }
      else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        const json & x = in.at(ptr);
        if (!x.is_number_integer() || (std::is_unsigned_v<T> && x.get<std::int64_t>() < 0)) {
          throw ConfigError(path + ": expected an integer");
        }
        v = x.get<T>();
      }
      else {
        v = in.at(ptr).get<T>();
      }
    }
    catch (const json::exception & e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
};

void collect_leaves(const json & j, const std::string & prefix, std::vector<std::string> & out)
{
  if (j.is_object() && !j.empty()) {
    for (const auto & [k, v] : j.items()) {
      collect_leaves(v, prefix.empty() ? k : prefix + "." + k, out);
    }
  }
  else {
    out.push_back(prefix);
  }
}

void require(bool ok, const std::string & what)
{
  if (!ok) {
    throw ConfigError("invalid config: " + what);
  }
}

}  // namespace

detect::TiledParams Config::tiled_params() const
{
  detect::TiledParams p;
  p.tile_size = raster.tile_size;
  p.overlap = raster.overlap;
  p.iou_threshold = detect.iou_threshold;
  p.confidence_floor = detect.confidence_floor;
  p.baseline = detect.baseline;
  return p;
}

json to_json(const Config & c)
{
  json out = json::object();
  visit(c, Writer{out});
  return out;
}

Config config_from_json(const json & j, const Config & base)
{
  if (!j.is_object()) {
    throw ConfigError("config root must be an object");
  }
  Config c = base;
  std::set<std::string> seen;
  visit(c, Reader{j, seen});
  std::vector<std::string> leaves;
  if (!j.empty()) {
    collect_leaves(j, "", leaves);
  }
  for (const auto & l : leaves) {
    const auto section = seen.lower_bound(l + ".");
    const bool empty_section = section != seen.end() && section->rfind(l + ".", 0) == 0;
    if (!seen.count(l) && !empty_section) {
      throw ConfigError("unknown config key '" + l + "'");
    }
  }
  validate(c);
  return c;
}

Config load_config(const std::string & path)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read config " + path);
  }
  try {
    return config_from_json(json::parse(in));
  }
  catch (const json::parse_error & e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void apply_override(Config & c, const std::string & assignment)
{
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like key=value: " + assignment);
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  }
  catch (const json::parse_error &) {
    value = text;
  }
  json patch = json::object();
  patch[pointer(key)] = value;
  c = config_from_json(patch, c);
}

void validate(const Config & c)
{
  require(c.ais.reassembly_window > 0, "ais.reassembly_window must be positive");
  require(c.raster.tile_size > 0 && c.raster.overlap >= 0 && c.raster.overlap < c.raster.tile_size,
          "raster.overlap must be in [0, tile_size)");
  require(0.0 <= c.raster.stretch_lo && c.raster.stretch_lo < c.raster.stretch_hi && c.raster.stretch_hi <= 1.0,
          "raster stretch fractions must satisfy 0 <= lo < hi <= 1");
  require(c.raster.min_inside > 0.0 && c.raster.min_inside <= 1.0, "raster.min_inside must be in (0, 1]");
  require(c.correlate.window_s >= 0.0, "correlate.window_s must be >= 0");
  require(c.correlate.train_scale > 0.0 && c.correlate.vis_scale > 0.0, "box scales must be positive");
  require(0.0 <= c.correlate.cloud_threshold && c.correlate.cloud_threshold <= 1.0,
          "correlate.cloud_threshold must be in [0, 1]");
  for (int s : c.correlate.excluded_status) {
    require(0 <= s && s <= 15, "correlate.excluded_status codes must be 0..15");
  }
  require(c.airbus.meters_per_pixel > 0.0, "airbus.meters_per_pixel must be positive");
  const auto & a = c.airbus.augment;
  require(0.0 < a.scale_lo && a.scale_lo <= a.scale_hi, "airbus.augment scale range");
  require(a.rotate_lo <= a.rotate_hi, "airbus.augment rotate range");
  require(0.0 <= a.blur_lo && a.blur_lo <= a.blur_hi, "airbus.augment blur range");
  require(c.detect.backend == "baseline" || c.detect.backend == "external", "detect.backend is baseline or external");
  require(c.detect.baseline.min_area_px >= 1, "detect.min_area_px must be >= 1");
  require(0 <= c.detect.baseline.fixed_threshold && c.detect.baseline.fixed_threshold <= 255,
          "detect.fixed_threshold must be 0..255");
  require(0.0 <= c.detect.iou_threshold && c.detect.iou_threshold <= 1.0, "detect.iou_threshold must be in [0, 1]");
  require(0.0 <= c.detect.confidence_floor && c.detect.confidence_floor <= 1.0,
          "detect.confidence_floor must be in [0, 1]");
  require(c.detect.external.timeout_s > 0.0 && c.detect.external.poll_interval_s > 0.0,
          "detect.external timings must be positive");
  require(c.eval.width_m > 0.0 && c.eval.hi_m > c.eval.lo_m, "eval bins need width > 0 and hi > lo");
  require(c.export_.policy == "strict" || c.export_.policy == "lenient", "export.policy is strict or lenient");
  require(c.export_.format == "jsonl" || c.export_.format == "coco", "export.format is jsonl or coco");
  require(0 <= c.review.port && c.review.port <= 65535, "review.port must be 0..65535");
  require(c.review.page_size >= 1, "review.page_size must be >= 1");
  require(c.review.write_timeout_s > 0.0, "review.write_timeout_s must be positive");
  require(c.runtime.jobs >= 0, "runtime.jobs must be >= 0");
}

}  // namespace shipfuse
