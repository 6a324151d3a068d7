#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "shipfuse/airbus.hpp"
#include "shipfuse/correlate.hpp"
#include "shipfuse/detect.hpp"
#include "shipfuse/eval.hpp"
#include "shipfuse/raster.hpp"

namespace shipfuse
{

/// Every tunable of the pipeline. Serialized as a JSON tree with one section
/// per module; see `to_json(Config{})` for the full default tree.
struct Config
{
  struct Ais
  {
    std::size_t reject_cap = 10000;
    std::size_t reassembly_window = 64;
  } ais;

  struct Raster
  {
    raster::BundleChecks checks;
    double stretch_lo = 0.02;
    double stretch_hi = 0.98;
    int tile_size = 800;
    int overlap = 200;
    double min_inside = 0.5;  // share of a box that must fall in a patch
  } raster;

  correlate::Params correlate;

  struct Airbus
  {
    double min_length_m = 50.0;
    double meters_per_pixel = airbus::kMetersPerPixel;
    airbus::LengthMode length_mode = airbus::LengthMode::MinAreaRect;
    airbus::AugmentRanges augment;
  } airbus;

  struct Detect
  {
    detect::BaselineParams baseline;
    double iou_threshold = 0.5;
    double confidence_floor = 0.20;
    std::string backend = "baseline";  // baseline | external
    detect::ExternalSpec external;
  } detect;

  eval::BinSpec eval;

  struct Export
  {
    std::string policy = "strict";
    std::string format = "jsonl";
  } export_;

  struct Review
  {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string static_dir;
    int page_size = 50;
    double write_timeout_s = 10.0;
  } review;

  struct Runtime
  {
    std::uint64_t seed = 0;
    int jobs = 0;  // 0 leaves the OpenMP default
  } runtime;

  detect::TiledParams tiled_params() const;
};

nlohmann::json to_json(const Config & c);

/// Overlays `j` onto `base`. Unknown keys and out-of-range values are ConfigErrors.
Config config_from_json(const nlohmann::json & j, const Config & base = {});

Config load_config(const std::string & path);

/// Applies "section.key=value"; the value is parsed as JSON, else taken as a string.
void apply_override(Config & c, const std::string & assignment);

/// Throws ConfigError on inconsistent settings.
void validate(const Config & c);

}  // namespace shipfuse
