#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "shipfuse/box.hpp"
#include "shipfuse/image.hpp"
#include "shipfuse/kernels.hpp"
#include "shipfuse/raster.hpp"

namespace shipfuse::detect
{

enum class Space { Tile, Image };

struct Detection
{
  Box box;
  double confidence = 0.0;
  Space space = Space::Image;
  raster::Origin origin;  // tile origin when space == Tile

  bool operator==(const Detection &) const = default;
};

enum class ThresholdMode { Otsu, Fixed };

struct BaselineParams
{
  ThresholdMode mode = ThresholdMode::Otsu;
  int fixed_threshold = 128;  // foreground is luminance > threshold
  int min_area_px = 10;
};

/// Otsu threshold on a 256-bin histogram: the smallest t maximizing the
/// between-class variance of {<= t} vs {> t}. nullopt for a single-valued histogram.
std::optional<int> otsu_threshold(const kernels::Histogram256 & h);

/// Connected components (4-neighbour) of a binary plane, as pixel boxes with areas.
struct Component
{
  Box box;
  std::int64_t area = 0;
  double mean = 0.0;  // mean luminance of the component
};
std::vector<Component> connected_components(const Plane<std::uint8_t> & lum, int threshold);

/// Threshold + 4-connected components on the tile luminance. Confidence is the
/// component's mean contrast over the background mean, divided by 255.
std::vector<Detection> detect_baseline(const Image & tile, const BaselineParams & params = {});

Detection to_image_space(const Detection & d, raster::Origin origin);
Detection to_tile_space(const Detection & d, raster::Origin origin);

double iou(const Box & a, const Box & b);

/// NMS ordering: confidence descending, then larger area, then lexicographic box.
bool nms_before(const Detection & a, const Detection & b);

/// Drops confidence < floor, then greedy suppression of iou > threshold.
std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold = 0.5, double confidence_floor = 0.20);

struct TiledParams
{
  int tile_size = 800;
  int overlap = 200;
  double iou_threshold = 0.5;
  double confidence_floor = 0.20;
  BaselineParams baseline;
};

/// Baseline detection over the tile plan, merged into image space and suppressed.
std::vector<Detection> detect_tiled(const Image & image, const TiledParams & params = {});

// ---------------------------------------------------------------- external protocol

struct ExternalSpec
{
  std::string exchange_dir;
  std::string command;  // "{request_dir}" is replaced; empty means wait for another process
  double timeout_s = 600.0;
  double poll_interval_s = 0.05;
};

struct TileRequest
{
  std::string id;
  raster::Origin origin;
  const Image * pixels = nullptr;
};

/// Writes request.json and tile PNGs, runs or waits for the detector, and
/// returns tile-space detections per tile id (missing tiles yield none).
std::map<std::string, std::vector<Detection>> run_external(const std::vector<TileRequest> & tiles,
                                                           const ExternalSpec & spec);

/// Validates a parsed response against the requested tile ids.
std::map<std::string, std::vector<Detection>> parse_response(const nlohmann::json & response,
                                                             const std::vector<TileRequest> & tiles);

nlohmann::json to_json(const Detection & d);
Detection detection_from_json(const nlohmann::json & j);

}  // namespace shipfuse::detect
