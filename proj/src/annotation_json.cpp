#include "shipfuse/annotation_json.hpp"

#include "shipfuse/error.hpp"

namespace shipfuse
{

nlohmann::json to_json(const AnnotationRecord & r)
{
  const AnnotationBox & a = r.annotation;
  nlohmann::json j = {
    {"image_id", r.image_id},
    {"mmsi", a.mmsi},
    {"box", {a.box.x_min, a.box.y_min, a.box.x_max, a.box.y_max}},
    {"length_m", a.length_m},
    {"cloud_fraction", a.cloud_fraction},
    {"flagged", a.cloud_flagged},
    {"curation", std::string(to_string(a.curation))},
    {"source", r.source},
  };
  if (a.center_x && a.center_y) {
    j["center"] = {*a.center_x, *a.center_y};
  }
  return j;
}

AnnotationRecord annotation_from_json(const nlohmann::json & j)
{
  try {
    AnnotationRecord r;
    r.image_id = j.at("image_id").get<std::string>();
    r.source = j.value("source", std::string("ais"));
    AnnotationBox & a = r.annotation;
    a.mmsi = j.at("mmsi").get<std::uint32_t>();
    const auto & b = j.at("box");
    if (!b.is_array() || b.size() != 4) {
      throw FormatError("annotation box must have 4 numbers");
    }
    a.box = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
    a.length_m = j.at("length_m").get<double>();
    a.cloud_fraction = j.value("cloud_fraction", 0.0);
    a.cloud_flagged = j.value("flagged", false);
    a.curation = curation_from_string(j.value("curation", std::string("auto")));
    if (j.contains("center") && j["center"].is_array() && j["center"].size() == 2) {
      a.center_x = j["center"][0].get<double>();
      a.center_y = j["center"][1].get<double>();
    }
    return r;
  } catch (const nlohmann::json::exception & e) {
    throw FormatError(std::string("malformed annotation: ") + e.what());
  }
}

}  // namespace shipfuse
