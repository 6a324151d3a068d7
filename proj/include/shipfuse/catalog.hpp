#pragma once

// Dataset root layout:
//
//   images/<provider>/<location>/<year>/<image_id>.{png,tif,json,mask.png}
//   patches/<image_id>/<x0>_<y0>.png
//   annotations/<image_id>.jsonl     image-space annotation records
//   curation.jsonl                   append-only decision log
//   manifest.json

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "shipfuse/annotation_json.hpp"
#include "shipfuse/geo.hpp"
#include "shipfuse/raster.hpp"

namespace shipfuse::catalog
{

namespace fs = std::filesystem;

struct ImageEntry
{
  std::string image_id;
  std::string provider;
  std::string location;
  std::string year;
  std::string image_path;  // relative to the root
  std::string sidecar_path;
  std::optional<std::string> mask_path;
  geo::GeoRef georef;
  int width = 0;
  int height = 0;
  std::int64_t timestamp = 0;

  bool operator==(const ImageEntry &) const = default;
};

struct PatchEntry
{
  std::string patch_id;  // <image_id>/<x0>_<y0>
  std::string image_id;
  raster::Origin origin;
  int size = 0;
  std::string path;

  bool operator==(const PatchEntry &) const = default;
};

/// An image-level annotation as seen from one patch: the box is in patch
/// coordinates, the id (<image_id>#<line>) is shared by every patch it falls in.
struct PatchAnnotation
{
  std::string annotation_id;
  std::string patch_id;
  AnnotationRecord record;

  bool operator==(const PatchAnnotation &) const = default;
};

struct GroupKey
{
  std::string provider;
  std::string location;
  std::string year;

  auto operator<=>(const GroupKey &) const = default;
};

struct DatasetManifest
{
  std::vector<ImageEntry> images;                                  // by image_id
  std::vector<PatchEntry> patches;                                 // by image_id, then row-major origin
  std::map<std::string, std::vector<AnnotationRecord>> image_annotations;  // image_id -> records
  std::map<std::string, std::vector<PatchAnnotation>> annotations;         // patch_id -> annotations

  const ImageEntry * find_image(const std::string & id) const;
  const PatchEntry * find_patch(const std::string & id) const;
  bool has_annotation(const std::string & annotation_id) const;

  bool operator==(const DatasetManifest &) const = default;
};

std::string patch_id(const std::string & image_id, raster::Origin origin);
std::string annotation_id(const std::string & image_id, std::size_t index);

fs::path image_dir(const fs::path & root, const std::string & provider, const std::string & location,
                   const std::string & year);

/// Copies an image, its sidecar and optional mask into the layout; returns the image_id.
std::string import_image(const fs::path & root, const fs::path & image, const fs::path & sidecar,
                         const std::optional<fs::path> & mask, const std::string & location,
                         const std::optional<std::string> & year = std::nullopt);

void write_annotations(const fs::path & root, const std::string & image_id,
                       const std::vector<AnnotationRecord> & records);
std::vector<AnnotationRecord> read_annotations(const fs::path & path);

/// Scans the layout; IntegrityError on dangling references.
DatasetManifest build_manifest(const fs::path & root, double min_inside = 0.5);

/// IntegrityError listing every broken reference; no-op when consistent.
void validate(const DatasetManifest & m);

nlohmann::json to_json(const DatasetManifest & m);
DatasetManifest manifest_from_json(const nlohmann::json & j);

// ---------------------------------------------------------------- curation

enum class Action { Accept, Reject };

struct CurationDecision
{
  std::string patch_id;
  std::string target = "patch";  // "patch" or an annotation id
  Action action = Action::Accept;
  std::string actor;
  std::int64_t at_ms = 0;
  std::int64_t seq = 0;  // position in the log

  bool targets_patch() const { return target == "patch"; }
  bool operator==(const CurationDecision &) const = default;
};

nlohmann::json to_json(const CurationDecision & d);
CurationDecision decision_from_json(const nlohmann::json & j);

/// Reads curation.jsonl. A malformed final line without a trailing newline is
/// an interrupted append and is ignored; any other bad line is a FormatError.
std::vector<CurationDecision> read_curation_log(const fs::path & path);

/// Appends one line and flushes it to disk.
void append_decision(const fs::path & path, const CurationDecision & d);

struct EffectiveView
{
  std::map<std::string, Curation> patches;      // decided patches only
  std::map<std::string, Curation> annotations;  // decided annotations only
  std::vector<std::string> warnings;

  Curation patch_state(const std::string & id) const;
  Curation annotation_state(const std::string & id) const;
  bool operator==(const EffectiveView & o) const { return patches == o.patches && annotations == o.annotations; }
};

/// Last writer wins per target, ordered by (at, seq). Unknown targets are skipped with a warning.
EffectiveView apply_curation(const DatasetManifest & m, std::vector<CurationDecision> decisions);

enum class Policy { Strict, Lenient };
enum class Format { Jsonl, Coco };

Policy policy_from_string(const std::string & s);
Format format_from_string(const std::string & s);

bool patch_included(const EffectiveView & v, const std::string & patch_id, Policy policy);

/// Annotations of an included patch that survive curation, with the effective
/// curation state filled in.
std::vector<PatchAnnotation> effective_annotations(const DatasetManifest & m, const EffectiveView & v,
                                                   const std::string & patch_id);

/// True when any annotation of the patch is cloud-flagged.
bool patch_flagged(const DatasetManifest & m, const std::string & patch_id);

struct ExportSummary
{
  std::int64_t patches = 0;
  std::int64_t annotations = 0;
  std::map<std::string, std::string> sha256;  // bundle-relative path -> hex digest
};

/// Writes patches, annotations and a manifest snapshot with content hashes.
/// The bundle is assembled in a sibling temp directory and renamed into place.
ExportSummary export_dataset(const fs::path & root, const DatasetManifest & m, const EffectiveView & v,
                             Policy policy, Format format, const fs::path & out_dir);

std::string sha256_hex(std::span<const std::uint8_t> bytes);

// ---------------------------------------------------------------- statistics

struct GroupStats
{
  std::int64_t images = 0;
  std::int64_t images_valid = 0;  // with at least one surviving annotation
  std::int64_t ships = 0;         // image-level annotations
  std::int64_t ships_valid = 0;   // not rejected; flagged ones only once accepted
  std::int64_t patches = 0;
  std::int64_t patches_annotated = 0;
  std::int64_t patch_ships = 0;
  std::int64_t undecided = 0;
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
  std::int64_t flagged = 0;

  GroupStats & operator+=(const GroupStats & o);
  bool operator==(const GroupStats &) const = default;
};

struct Stats
{
  GroupStats total;
  std::map<GroupKey, GroupStats> groups;

  bool operator==(const Stats &) const = default;
};

/// Image-level annotation ids that count as valid ships: not rejected, not only
/// in rejected patches, and explicitly accepted when cloud-flagged.
std::set<std::string> valid_annotation_ids(const DatasetManifest & m, const EffectiveView & v);

Stats compute_stats(const DatasetManifest & m, const EffectiveView & v);
nlohmann::json to_json(const Stats & s);

}  // namespace shipfuse::catalog
