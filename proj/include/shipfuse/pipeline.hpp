#pragma once

// Dataset-level steps shared by the command-line tool and the acceptance run.
// All of them read and write the catalog layout under `root`.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shipfuse/ais.hpp"
#include "shipfuse/airbus.hpp"
#include "shipfuse/catalog.hpp"
#include "shipfuse/config.hpp"
#include "shipfuse/correlate.hpp"
#include "shipfuse/detect.hpp"
#include "shipfuse/eval.hpp"

namespace shipfuse::pipeline
{

namespace fs = std::filesystem;

struct IngestSummary
{
  std::size_t files = 0;
  std::size_t records = 0;
  std::size_t csv_rows = 0;
  std::size_t csv_rejects = 0;
  ais::NmeaStreamStats nmea;
};

/// Parses Cadastre CSV (*.csv) and NMEA files into records sorted by (timestamp, mmsi).
std::vector<ais::AisRecord> ingest_ais(const std::vector<fs::path> & files, const Config & cfg,
                                       IngestSummary * summary = nullptr);

void write_ais_jsonl(const fs::path & path, const std::vector<ais::AisRecord> & records);
std::vector<ais::AisRecord> read_ais_jsonl(const fs::path & path);

raster::RasterBundle load_catalog_bundle(const fs::path & root, const catalog::ImageEntry & e, const Config & cfg);

struct AnnotateSummary
{
  std::size_t images = 0;
  correlate::Counters counters;
  std::vector<std::string> warnings;
};

/// Correlates AIS with every catalog image (or just `only`), writing
/// annotations/<id>.jsonl and vis/<id>.jsonl, plus vis/<id>.png when `render`.
AnnotateSummary annotate_dataset(const fs::path & root, const Config & cfg, const std::vector<ais::AisRecord> & records,
                                 const std::optional<std::string> & only = std::nullopt, bool render = false);

struct TileSummary
{
  std::size_t images = 0;
  std::size_t patches = 0;
};

/// Writes 8-bit patches for every image and refreshes manifest.json.
TileSummary tile_dataset(const fs::path & root, const Config & cfg,
                         const std::optional<std::string> & only = std::nullopt);

/// Image-space detections per image after merging and suppression; written to detections/<id>.jsonl.
std::map<std::string, std::vector<detect::Detection>> detect_dataset(
  const fs::path & root, const Config & cfg, const std::optional<std::string> & only = std::nullopt);

std::vector<detect::Detection> read_detections(const fs::path & path);

struct EvaluateResult
{
  eval::Report report;
  std::size_t gts = 0;
  std::size_t skipped_outside = 0;  // valid annotations whose AIS position lies off the image
};

/// Scores detections/<id>.jsonl against the valid annotations of the catalog.
EvaluateResult evaluate_dataset(const fs::path & root, const Config & cfg, const std::string & regime = "detector");

/// Airbus index -> filtered annotations as JSON lines (source "airbus").
airbus::IndexSummary airbus_prepare(const fs::path & index_csv, const fs::path & out_jsonl, const Config & cfg);

struct AugmentSummary
{
  std::size_t items = 0;
  std::size_t outputs = 0;
  std::size_t dropped_boxes = 0;
  std::size_t missing_images = 0;
};

/// For every image with annotations, writes one augmented copy per kind into
/// `out_dir` with an annotations.jsonl describing the applied parameters.
AugmentSummary augment_dataset(const fs::path & images_dir, const fs::path & annotations_jsonl, const fs::path & out_dir,
                               const std::vector<airbus::AugmentKind> & kinds, const Config & cfg);

}  // namespace shipfuse::pipeline
