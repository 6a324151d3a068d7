#include "shipfuse/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "shipfuse/error.hpp"
#include "shipfuse/image_io.hpp"
#include "shipfuse/review_service.hpp"

namespace shipfuse::pipeline
{

using nlohmann::json;

namespace
{

std::ifstream open_in(const fs::path & p)
{
  std::ifstream in(p, std::ios::binary);
  if (!in) {
    throw IoError("cannot read " + p.string());
  }
  return in;
}

void write_lines(const fs::path & p, const std::vector<json> & lines)
{
  if (!p.parent_path().empty()) {
    fs::create_directories(p.parent_path());
  }
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  for (const auto & l : lines) {
    out << l.dump() << '\n';
  }
  if (!out) {
    throw IoError("cannot write " + p.string());
  }
}

template <class F>
void for_each_json_line(const fs::path & p, F && f)
{
  auto in = open_in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    json j;
    try {
      j = json::parse(line);
    }
    catch (const json::exception & e) {
      throw FormatError(p.string() + ":" + std::to_string(n) + ": " + e.what());
    }
    f(j);
  }
}

std::vector<const catalog::ImageEntry *> selected(const catalog::DatasetManifest & m,
                                                  const std::optional<std::string> & only)
{
  std::vector<const catalog::ImageEntry *> out;
  for (const auto & e : m.images) {
    if (!only || e.image_id == *only) {
      out.push_back(&e);
    }
  }
  if (only && out.empty()) {
    throw ConfigError("no image '" + *only + "' in the catalog");
  }
  return out;
}

}  // namespace

std::vector<ais::AisRecord> ingest_ais(const std::vector<fs::path> & files, const Config & cfg, IngestSummary * summary)
{
  IngestSummary s;
  std::vector<ais::AisRecord> all;
  for (const auto & f : files) {
    auto in = open_in(f);
    ++s.files;
    std::string ext = f.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".csv") {
      auto r = ais::parse_cadastre_csv(in, cfg.ais.reject_cap);
      s.csv_rows += r.data_rows;
      s.csv_rejects += r.reject_count;
      all.insert(all.end(), r.records.begin(), r.records.end());
    }
    else {
      ais::NmeaStreamStats st;
      auto recs = ais::parse_nmea_stream(in, &st, cfg.ais.reassembly_window);
      s.nmea.lines += st.lines;
      s.nmea.checksum_errors += st.checksum_errors;
      s.nmea.format_errors += st.format_errors;
      s.nmea.unsupported += st.unsupported;
      s.nmea.no_position += st.no_position;
      s.nmea.dropped_fragments += st.dropped_fragments;
      all.insert(all.end(), recs.begin(), recs.end());
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const ais::AisRecord & a, const ais::AisRecord & b) {
    return std::tie(a.timestamp, a.mmsi) < std::tie(b.timestamp, b.mmsi);
  });
  s.records = all.size();
  if (summary) {
    *summary = s;
  }
  return all;
}

void write_ais_jsonl(const fs::path & path, const std::vector<ais::AisRecord> & records)
{
  std::vector<json> lines;
  lines.reserve(records.size());
  for (const auto & r : records) {
    lines.push_back(ais::to_json(r));
  }
  write_lines(path, lines);
}

std::vector<ais::AisRecord> read_ais_jsonl(const fs::path & path)
{
  std::vector<ais::AisRecord> out;
  for_each_json_line(path, [&](const json & j) { out.push_back(ais::record_from_json(j)); });
  return out;
}

raster::RasterBundle load_catalog_bundle(const fs::path & root, const catalog::ImageEntry & e, const Config & cfg)
{
  std::optional<std::string> mask;
  if (e.mask_path) {
    mask = (root / *e.mask_path).string();
  }
  return raster::load_bundle((root / e.image_path).string(), (root / e.sidecar_path).string(), mask,
                             cfg.raster.checks);
}

AnnotateSummary annotate_dataset(const fs::path & root, const Config & cfg, const std::vector<ais::AisRecord> & records,
                                 const std::optional<std::string> & only, bool render)
{
  const auto m = catalog::build_manifest(root, cfg.raster.min_inside);
  const correlate::AisIndex index(records);
  AnnotateSummary s;
  for (const auto * e : selected(m, only)) {
    const auto bundle = load_catalog_bundle(root, *e, cfg);
    const auto r = correlate::annotate_image(bundle, index, cfg.correlate);
    std::vector<AnnotationRecord> train, vis;
    for (const auto & b : r.boxes) {
      train.push_back({e->image_id, "ais", b});
    }
    std::vector<json> vis_lines;
    std::vector<catalog::PatchAnnotation> vis_overlay;
    for (std::size_t k = 0; k < r.vis_boxes.size(); ++k) {
      AnnotationRecord rec{e->image_id, "ais", r.vis_boxes[k]};
      vis_lines.push_back(to_json(rec));
      vis_overlay.push_back({catalog::annotation_id(e->image_id, k), "", rec});
    }
    catalog::write_annotations(root, e->image_id, train);
    write_lines(root / "vis" / (e->image_id + ".jsonl"), vis_lines);
    if (render) {
      const auto png = review::render_overlay(raster::to_8bit(bundle.image, cfg.raster.stretch_lo,
                                                              cfg.raster.stretch_hi).image,
                                              vis_overlay, {});
      io::write_file((root / "vis" / (e->image_id + ".png")).string(), png);
    }
    ++s.images;
    s.counters.observations += r.counters.observations;
    s.counters.matched += r.counters.matched;
    s.counters.off_image += r.counters.off_image;
    s.counters.flagged += r.counters.flagged;
    for (const auto & w : r.warnings) {
      s.warnings.push_back(e->image_id + ": " + w);
    }
  }
  return s;
}

TileSummary tile_dataset(const fs::path & root, const Config & cfg, const std::optional<std::string> & only)
{
  auto m = catalog::build_manifest(root, cfg.raster.min_inside);
  TileSummary s;
  for (const auto * e : selected(m, only)) {
    auto bundle = load_catalog_bundle(root, *e, cfg);
    bundle.image = raster::to_8bit(bundle.image, cfg.raster.stretch_lo, cfg.raster.stretch_hi).image;
    const fs::path dir = root / "patches" / e->image_id;
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto plan = raster::tile_plan(bundle.width(), bundle.height(), cfg.raster.tile_size, cfg.raster.overlap);
    for (const auto & o : plan) {
      const auto t = raster::extract_tile(bundle, o, cfg.raster.tile_size);
      io::write_png((dir / (std::to_string(o.x) + "_" + std::to_string(o.y) + ".png")).string(), t.pixels);
    }
    ++s.images;
    s.patches += plan.size();
  }
  m = catalog::build_manifest(root, cfg.raster.min_inside);
  std::ofstream(root / "manifest.json", std::ios::trunc) << catalog::to_json(m).dump(2) << '\n';
  return s;
}

std::map<std::string, std::vector<detect::Detection>> detect_dataset(const fs::path & root, const Config & cfg,
                                                                     const std::optional<std::string> & only)
{
  const auto m = catalog::build_manifest(root, cfg.raster.min_inside);
  const auto params = cfg.tiled_params();
  std::map<std::string, std::vector<detect::Detection>> out;
  for (const auto * e : selected(m, only)) {
    auto bundle = load_catalog_bundle(root, *e, cfg);
    bundle.image = raster::to_8bit(bundle.image, cfg.raster.stretch_lo, cfg.raster.stretch_hi).image;
    std::vector<detect::Detection> dets;
    if (cfg.detect.backend == "external") {
      const auto plan = raster::tile_plan(bundle.width(), bundle.height(), params.tile_size, params.overlap);
      std::vector<raster::Tile> tiles;
      tiles.reserve(plan.size());
      for (const auto & o : plan) {
        tiles.push_back(raster::extract_tile(bundle, o, params.tile_size));
      }
      std::vector<detect::TileRequest> reqs;
      for (const auto & t : tiles) {
        reqs.push_back({catalog::patch_id(e->image_id, t.origin), t.origin, &t.pixels});
      }
      detect::ExternalSpec spec = cfg.detect.external;
      if (spec.exchange_dir.empty()) {
        spec.exchange_dir = (root / "exchange").string();
      }
      std::vector<detect::Detection> merged;
      for (const auto & [id, list] : detect::run_external(reqs, spec)) {
        for (const auto & d : list) {
          merged.push_back(detect::to_image_space(d, d.origin));
        }
      }
      dets = detect::nms(std::move(merged), params.iou_threshold, params.confidence_floor);
    }
    else {
      dets = detect::detect_tiled(bundle.image, params);
    }
    std::vector<json> lines;
    for (const auto & d : dets) {
      json j = detect::to_json(d);
      j["image_id"] = e->image_id;
      lines.push_back(std::move(j));
    }
    write_lines(root / "detections" / (e->image_id + ".jsonl"), lines);
    out[e->image_id] = std::move(dets);
  }
  return out;
}

std::vector<detect::Detection> read_detections(const fs::path & path)
{
  std::vector<detect::Detection> out;
  for_each_json_line(path, [&](const json & j) { out.push_back(detect::detection_from_json(j)); });
  return out;
}

EvaluateResult evaluate_dataset(const fs::path & root, const Config & cfg, const std::string & regime)
{
  const auto m = catalog::build_manifest(root, cfg.raster.min_inside);
  const auto view = catalog::apply_curation(m, catalog::read_curation_log(root / "curation.jsonl"));
  const auto valid = catalog::valid_annotation_ids(m, view);
  EvaluateResult r;
  for (const auto & e : m.images) {
    std::vector<eval::GroundTruthPoint> gts;
    const auto it = m.image_annotations.find(e.image_id);
    if (it != m.image_annotations.end()) {
      for (std::size_t k = 0; k < it->second.size(); ++k) {
        if (!valid.count(catalog::annotation_id(e.image_id, k))) {
          continue;
        }
        const auto & a = it->second[k].annotation;
        eval::GroundTruthPoint g;
        g.mmsi = a.mmsi;
        g.col = a.center_x.value_or(a.box.center_x());
        g.row = a.center_y.value_or(a.box.center_y());
        g.length_m = a.length_m;
        g.image_id = e.image_id;
        if (g.col < 0 || g.row < 0 || g.col > e.width || g.row > e.height) {
          ++r.skipped_outside;
          continue;
        }
        gts.push_back(g);
      }
    }
    std::vector<Box> boxes;
    const fs::path det_path = root / "detections" / (e.image_id + ".jsonl");
    if (fs::exists(det_path)) {
      for (const auto & d : read_detections(det_path)) {
        boxes.push_back(d.box);
      }
    }
    const eval::GroupKey key{regime, e.location, e.provider};
    auto [slot, inserted] = r.report.try_emplace(key, eval::Tally(cfg.eval));
    slot->second.add(boxes, gts, cfg.eval);
    r.gts += gts.size();
  }
  return r;
}

airbus::IndexSummary airbus_prepare(const fs::path & index_csv, const fs::path & out_jsonl, const Config & cfg)
{
  auto in = open_in(index_csv);
  const auto r = airbus::process_index(in, cfg.airbus.min_length_m, cfg.airbus.meters_per_pixel, cfg.airbus.length_mode);
  std::vector<json> lines;
  lines.reserve(r.kept.size());
  for (const auto & a : r.kept) {
    json j = to_json(AnnotationRecord{a.image_id, "airbus", a.annotation});
    j["rect"] = {{"center", {a.rect.center_x, a.rect.center_y}},
                 {"sides", {a.rect.side_a, a.rect.side_b}},
                 {"angle_deg", a.rect.angle_deg}};
    lines.push_back(std::move(j));
  }
  write_lines(out_jsonl, lines);
  return r.summary;
}

AugmentSummary augment_dataset(const fs::path & images_dir, const fs::path & annotations_jsonl, const fs::path & out_dir,
                               const std::vector<airbus::AugmentKind> & kinds, const Config & cfg)
{
  std::map<std::string, std::vector<AnnotationBox>> by_image;
  for_each_json_line(annotations_jsonl, [&](const json & j) {
    const auto r = annotation_from_json(j);
    by_image[r.image_id].push_back(r.annotation);
  });
  AugmentSummary s;
  std::vector<json> lines;
  fs::create_directories(out_dir);
  for (const auto & [image_id, boxes] : by_image) {
    std::optional<fs::path> src;
    const fs::path stem = fs::path(image_id).stem();
    for (const fs::path & cand : {images_dir / image_id, images_dir / (stem.string() + ".png"),
                                images_dir / (stem.string() + ".tif")}) {
      if (fs::exists(cand) && cand.extension() != ".jpg" && cand.extension() != ".jpeg") {
        src = cand;
        break;
      }
    }
    if (!src) {
      ++s.missing_images;
      continue;
    }
    const Image img = io::read_raster(src->string()).image;
    ++s.items;
    for (const auto kind : kinds) {
      auto rng = airbus::item_rng(cfg.runtime.seed, image_id + ":" + std::string(airbus::to_string(kind)));
      const auto spec = airbus::sample_augment(kind, rng, cfg.airbus.augment);
      const auto out = airbus::augment(img, boxes, spec, cfg.airbus.augment);
      const std::string name = stem.string() + "_" + std::string(airbus::to_string(kind)) + ".png";
      io::write_png((out_dir / name).string(), out.image);
      for (const auto & b : out.boxes) {
        json j = to_json(AnnotationRecord{name, "airbus", b});
        j["augment"] = {{"kind", airbus::to_string(kind)}, {"value", spec.value}, {"source_image", image_id}};
        lines.push_back(std::move(j));
      }
      ++s.outputs;
      s.dropped_boxes += out.dropped;
    }
  }
  write_lines(out_dir / "annotations.jsonl", lines);
  return s;
}

}  // namespace shipfuse::pipeline
