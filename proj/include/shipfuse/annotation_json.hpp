#pragma once

#include <string>

#include "json.hpp"
#include "shipfuse/box.hpp"

namespace shipfuse
{

/// One annotation line: image_id, mmsi, box, length_m, cloud_fraction,
/// flagged, curation, plus center (when known) and source.
struct AnnotationRecord
{
  std::string image_id;
  std::string source = "ais";
  AnnotationBox annotation;

  bool operator==(const AnnotationRecord &) const = default;
};

nlohmann::json to_json(const AnnotationRecord & r);
AnnotationRecord annotation_from_json(const nlohmann::json & j);

}  // namespace shipfuse
