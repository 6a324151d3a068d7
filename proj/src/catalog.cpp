#include "shipfuse/catalog.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "shipfuse/error.hpp"
#include "shipfuse/image_io.hpp"
#include "shipfuse/parse.hpp"
#include "shipfuse/timeutil.hpp"

namespace shipfuse::catalog
{

using nlohmann::json;

namespace
{

std::string rel(const fs::path & p, const fs::path & root)
{
  return p.lexically_relative(root).generic_string();
}

std::optional<raster::Origin> parse_origin(const std::string & stem)
{
  const auto us = stem.find('_');
  if (us == std::string::npos) {
    return std::nullopt;
  }
  const auto x = parse_number<int>(std::string_view(stem).substr(0, us));
  const auto y = parse_number<int>(std::string_view(stem).substr(us + 1));
  if (!x || !y || *x < 0 || *y < 0) {
    return std::nullopt;
  }
  return raster::Origin{*x, *y};
}

// Width and height from the IHDR chunk, without decoding pixels.
std::pair<int, int> png_size(const fs::path & path)
{
  std::ifstream in(path, std::ios::binary);
  unsigned char h[24] = {};
  in.read(reinterpret_cast<char *>(h), sizeof h);
  static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (in.gcount() != 24 || !std::equal(sig, sig + 8, h) || std::string(h + 12, h + 16) != "IHDR") {
    throw DecodeError("not a PNG: " + path.string());
  }
  auto be32 = [&](int o) {
    return static_cast<int>((std::uint32_t(h[o]) << 24) | (h[o + 1] << 16) | (h[o + 2] << 8) | h[o + 3]);
  };
  return {be32(16), be32(20)};
}

std::string year_of(std::int64_t epoch_s)
{
  return format_iso8601(epoch_s).substr(0, 4);
}

void write_bytes(const fs::path & path, const std::string & s)
{
  fs::create_directories(path.parent_path());
  io::write_file(path.string(), std::span(reinterpret_cast<const std::uint8_t *>(s.data()), s.size()));
}

json origin_json(raster::Origin o)
{
  return json::array({o.x, o.y});
}

raster::Origin origin_from(const json & j)
{
  return {j.at(0).get<int>(), j.at(1).get<int>()};
}

std::string_view action_name(Action a)
{
  return a == Action::Accept ? "accept" : "reject";
}

}  // namespace

std::string patch_id(const std::string & image_id, raster::Origin origin)
{
  return image_id + "/" + std::to_string(origin.x) + "_" + std::to_string(origin.y);
}

std::string annotation_id(const std::string & image_id, std::size_t index)
{
  return image_id + "#" + std::to_string(index);
}

const ImageEntry * DatasetManifest::find_image(const std::string & id) const
{
  const auto it = std::lower_bound(images.begin(), images.end(), id,
                                   [](const ImageEntry & e, const std::string & k) { return e.image_id < k; });
  return it != images.end() && it->image_id == id ? &*it : nullptr;
}

const PatchEntry * DatasetManifest::find_patch(const std::string & id) const
{
  for (const auto & p : patches) {
    if (p.patch_id == id) {
      return &p;
    }
  }
  return nullptr;
}

bool DatasetManifest::has_annotation(const std::string & id) const
{
  const auto hash = id.rfind('#');
  if (hash == std::string::npos) {
    return false;
  }
  const auto it = image_annotations.find(id.substr(0, hash));
  if (it == image_annotations.end()) {
    return false;
  }
  const auto k = parse_number<std::size_t>(std::string_view(id).substr(hash + 1));
  return k && *k < it->second.size();
}

fs::path image_dir(const fs::path & root, const std::string & provider, const std::string & location,
                   const std::string & year)
{
  return root / "images" / provider / location / year;
}

std::string import_image(const fs::path & root, const fs::path & image, const fs::path & sidecar,
                         const std::optional<fs::path> & mask, const std::string & location,
                         const std::optional<std::string> & year)
{
  const geo::Sidecar sc = geo::load_sidecar(sidecar.string());
  const std::string id = image.stem().string();
  const fs::path dir = image_dir(root, geo::to_string(sc.provider), location, year.value_or(year_of(sc.timestamp)));
  fs::create_directories(dir);
  fs::copy_file(image, dir / (id + image.extension().string()), fs::copy_options::overwrite_existing);
  fs::copy_file(sidecar, dir / (id + ".json"), fs::copy_options::overwrite_existing);
  if (mask) {
    fs::copy_file(*mask, dir / (id + ".mask.png"), fs::copy_options::overwrite_existing);
  }
  return id;
}

void write_annotations(const fs::path & root, const std::string & image_id,
                       const std::vector<AnnotationRecord> & records)
{
  std::string text;
  for (const auto & r : records) {
    text += to_json(r).dump() + "\n";
  }
  write_bytes(root / "annotations" / (image_id + ".jsonl"), text);
}

std::vector<AnnotationRecord> read_annotations(const fs::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot read " + path.string());
  }
  std::vector<AnnotationRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    try {
      out.push_back(annotation_from_json(json::parse(line)));
    }
    catch (const json::exception & e) {
      throw FormatError(path.string() + ": " + e.what());
    }
  }
  return out;
}

namespace
{

void attach_patch_annotations(DatasetManifest & m, double min_inside)
{
  m.annotations.clear();
  for (const auto & p : m.patches) {
    const auto it = m.image_annotations.find(p.image_id);
    if (it == m.image_annotations.end()) {
      continue;
    }
    const Box rect{double(p.origin.x), double(p.origin.y), double(p.origin.x + p.size), double(p.origin.y + p.size)};
    for (std::size_t k = 0; k < it->second.size(); ++k) {
      const auto clipped = raster::clip_boxes_to_rect(rect, {it->second[k].annotation}, min_inside);
      if (clipped.empty()) {
        continue;
      }
      AnnotationRecord r = it->second[k];
      r.annotation = clipped.front();
      m.annotations[p.patch_id].push_back({annotation_id(p.image_id, k), p.patch_id, r});
    }
  }
}

}  // namespace

DatasetManifest build_manifest(const fs::path & root, double min_inside)
{
  DatasetManifest m;
  std::vector<std::string> problems;
  std::set<std::string> ids;

  const fs::path images = root / "images";
  if (fs::is_directory(images)) {
    std::vector<fs::path> sidecars;
    for (const auto & e : fs::recursive_directory_iterator(images)) {
      const fs::path & p = e.path();
      if (e.is_regular_file() && p.extension() == ".json") {
        sidecars.push_back(p);
      }
    }
    std::sort(sidecars.begin(), sidecars.end());
    for (const fs::path & sc_path : sidecars) {
      const fs::path parts = sc_path.parent_path().lexically_relative(images);
      std::vector<std::string> segs;
      for (const auto & s : parts) {
        segs.push_back(s.string());
      }
      if (segs.size() != 3) {
        problems.push_back("sidecar outside images/<provider>/<location>/<year>: " + rel(sc_path, root));
        continue;
      }
      const std::string id = sc_path.stem().string();
      if (!ids.insert(id).second) {
        problems.push_back("duplicate image_id " + id);
        continue;
      }
      const geo::Sidecar sc = geo::load_sidecar(sc_path.string());
      ImageEntry e;
      e.image_id = id;
      e.provider = segs[0];
      e.location = segs[1];
      e.year = segs[2];
      e.sidecar_path = rel(sc_path, root);
      for (const char * ext : {".png", ".tif", ".tiff"}) {
        const fs::path cand = sc_path.parent_path() / (id + ext);
        if (fs::exists(cand)) {
          e.image_path = rel(cand, root);
          break;
        }
      }
      if (e.image_path.empty()) {
        problems.push_back("sidecar without image: " + e.sidecar_path);
      }
      const fs::path mask = sc_path.parent_path() / (id + ".mask.png");
      if (fs::exists(mask)) {
        e.mask_path = rel(mask, root);
      }
      if (geo::to_string(sc.provider) != e.provider) {
        problems.push_back("provider directory " + e.provider + " disagrees with sidecar of " + id);
      }
      e.georef = sc.georef;
      e.width = sc.width;
      e.height = sc.height;
      e.timestamp = sc.timestamp;
      m.images.push_back(std::move(e));
    }
    std::sort(m.images.begin(), m.images.end(),
              [](const ImageEntry & a, const ImageEntry & b) { return a.image_id < b.image_id; });
  }

  const fs::path patches = root / "patches";
  if (fs::is_directory(patches)) {
    for (const auto & dir : fs::directory_iterator(patches)) {
      if (!dir.is_directory()) {
        continue;
      }
      const std::string image_id = dir.path().filename().string();
      const bool known = m.find_image(image_id) != nullptr;
      for (const auto & f : fs::directory_iterator(dir.path())) {
        if (f.path().extension() != ".png") {
          continue;
        }
        if (!known) {
          problems.push_back("patch of unknown image: " + rel(f.path(), root));
          continue;
        }
        const auto origin = parse_origin(f.path().stem().string());
        if (!origin) {
          problems.push_back("bad patch name: " + rel(f.path(), root));
          continue;
        }
        const auto [w, h] = png_size(f.path());
        if (w != h) {
          problems.push_back("non-square patch: " + rel(f.path(), root));
          continue;
        }
        m.patches.push_back({patch_id(image_id, *origin), image_id, *origin, w, rel(f.path(), root)});
      }
    }
    std::sort(m.patches.begin(), m.patches.end(), [](const PatchEntry & a, const PatchEntry & b) {
      return std::tie(a.image_id, a.origin.y, a.origin.x) < std::tie(b.image_id, b.origin.y, b.origin.x);
    });
  }

  const fs::path ann = root / "annotations";
  if (fs::is_directory(ann)) {
    std::vector<fs::path> files;
    for (const auto & f : fs::directory_iterator(ann)) {
      if (f.path().extension() == ".jsonl") {
        files.push_back(f.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto & f : files) {
      const std::string image_id = f.stem().string();
      if (!m.find_image(image_id)) {
        problems.push_back("annotations of unknown image: " + rel(f, root));
        continue;
      }
      auto records = read_annotations(f);
      for (const auto & r : records) {
        if (r.image_id != image_id) {
          problems.push_back("record for " + r.image_id + " in " + rel(f, root));
        }
      }
      m.image_annotations[image_id] = std::move(records);
    }
  }

  if (!problems.empty()) {
    throw IntegrityError(problems);
  }
  attach_patch_annotations(m, min_inside);
  return m;
}

void validate(const DatasetManifest & m)
{
  std::vector<std::string> problems;
  std::set<std::string> ids;
  for (const auto & i : m.images) {
    if (!ids.insert(i.image_id).second) {
      problems.push_back("duplicate image_id " + i.image_id);
    }
  }
  std::set<std::string> patch_ids;
  for (const auto & p : m.patches) {
    if (!ids.count(p.image_id)) {
      problems.push_back("patch " + p.patch_id + " references missing image " + p.image_id);
    }
    if (!patch_ids.insert(p.patch_id).second) {
      problems.push_back("duplicate patch_id " + p.patch_id);
    }
  }
  for (const auto & [image_id, recs] : m.image_annotations) {
    if (!ids.count(image_id)) {
      problems.push_back("annotations reference missing image " + image_id);
    }
  }
  for (const auto & [pid, anns] : m.annotations) {
    if (!patch_ids.count(pid)) {
      problems.push_back("annotations reference missing patch " + pid);
    }
    for (const auto & a : anns) {
      if (a.patch_id != pid || !m.has_annotation(a.annotation_id)) {
        problems.push_back("dangling annotation " + a.annotation_id + " in patch " + pid);
      }
    }
  }
  if (!problems.empty()) {
    throw IntegrityError(problems);
  }
}

json to_json(const DatasetManifest & m)
{
  json images = json::array();
  for (const auto & i : m.images) {
    json e = {
      {"image_id", i.image_id},
      {"provider", i.provider},
      {"location", i.location},
      {"year", i.year},
      {"paths", {{"image", i.image_path}, {"sidecar", i.sidecar_path}}},
      {"georef", {{"epsg", i.georef.epsg}, {"transform", i.georef.transform}}},
      {"width", i.width},
      {"height", i.height},
      {"timestamp", format_iso8601(i.timestamp)},
    };
    if (i.mask_path) {
      e["paths"]["mask"] = *i.mask_path;
    }
    images.push_back(std::move(e));
  }
  json patches = json::array();
  for (const auto & p : m.patches) {
    patches.push_back(
      {{"patch_id", p.patch_id}, {"image_id", p.image_id}, {"origin", origin_json(p.origin)}, {"size", p.size},
       {"path", p.path}});
  }
  json image_ann = json::object();
  for (const auto & [id, recs] : m.image_annotations) {
    json arr = json::array();
    for (const auto & r : recs) {
      arr.push_back(to_json(r));
    }
    image_ann[id] = std::move(arr);
  }
  json ann = json::object();
  for (const auto & [pid, anns] : m.annotations) {
    json arr = json::array();
    for (const auto & a : anns) {
      json r = to_json(a.record);
      r["annotation_id"] = a.annotation_id;
      arr.push_back(std::move(r));
    }
    ann[pid] = std::move(arr);
  }
  return {{"images", images}, {"patches", patches}, {"image_annotations", image_ann}, {"annotations", ann}};
}

DatasetManifest manifest_from_json(const json & j)
{
  DatasetManifest m;
  try {
    for (const auto & e : j.at("images")) {
      ImageEntry i;
      i.image_id = e.at("image_id").get<std::string>();
      i.provider = e.at("provider").get<std::string>();
      i.location = e.at("location").get<std::string>();
      i.year = e.at("year").get<std::string>();
      i.image_path = e.at("paths").at("image").get<std::string>();
      i.sidecar_path = e.at("paths").at("sidecar").get<std::string>();
      if (e.at("paths").contains("mask")) {
        i.mask_path = e.at("paths").at("mask").get<std::string>();
      }
      i.georef.epsg = e.at("georef").at("epsg").get<int>();
      i.georef.transform = e.at("georef").at("transform").get<std::array<double, 6>>();
      i.width = e.at("width").get<int>();
      i.height = e.at("height").get<int>();
      const auto ts = parse_iso8601(e.at("timestamp").get<std::string>());
      if (!ts) {
        throw FormatError("bad timestamp for " + i.image_id);
      }
      i.timestamp = *ts;
      m.images.push_back(std::move(i));
    }
    for (const auto & e : j.at("patches")) {
      m.patches.push_back({e.at("patch_id").get<std::string>(), e.at("image_id").get<std::string>(),
                           origin_from(e.at("origin")), e.at("size").get<int>(), e.at("path").get<std::string>()});
    }
    for (const auto & [id, arr] : j.at("image_annotations").items()) {
      auto & recs = m.image_annotations[id];
      for (const auto & r : arr) {
        recs.push_back(annotation_from_json(r));
      }
    }
    for (const auto & [pid, arr] : j.at("annotations").items()) {
      auto & anns = m.annotations[pid];
      for (const auto & r : arr) {
        anns.push_back({r.at("annotation_id").get<std::string>(), pid, annotation_from_json(r)});
      }
    }
  }
  catch (const json::exception & e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  validate(m);
  return m;
}

// ---------------------------------------------------------------- curation

json to_json(const CurationDecision & d)
{
  return {
    {"seq", d.seq},
    {"patch_id", d.patch_id},
    {"target", d.target},
    {"action", action_name(d.action)},
    {"actor", d.actor},
    {"at", format_iso8601_ms(d.at_ms)},
  };
}

CurationDecision decision_from_json(const json & j)
{
  try {
    CurationDecision d;
    d.seq = j.value("seq", std::int64_t{0});
    d.patch_id = j.at("patch_id").get<std::string>();
    d.target = j.at("target").get<std::string>();
    const auto action = j.at("action").get<std::string>();
    if (action == "accept") {
      d.action = Action::Accept;
    }
    else if (action == "reject") {
      d.action = Action::Reject;
    }
    else {
      throw FormatError("unknown action '" + action + "'");
    }
    d.actor = j.value("actor", std::string());
    const auto at = parse_iso8601_ms(j.at("at").get<std::string>());
    if (!at) {
      throw FormatError("bad decision time");
    }
    d.at_ms = *at;
    return d;
  }
  catch (const json::exception & e) {
    throw FormatError(std::string("decision: ") + e.what());
  }
}

std::vector<CurationDecision> read_curation_log(const fs::path & path)
{
  std::vector<CurationDecision> out;
  if (!fs::exists(path)) {
    return out;
  }
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::size_t pos = 0;
  std::int64_t line_no = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const bool complete = nl != std::string::npos;
    const std::string line = text.substr(pos, complete ? nl - pos : std::string::npos);
    pos = complete ? nl + 1 : text.size();
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    try {
      CurationDecision d = decision_from_json(json::parse(line));
      if (d.seq == 0) {
        d.seq = line_no;
      }
      out.push_back(std::move(d));
    }
    catch (const std::exception & e) {
      if (!complete) {
        break;  // interrupted append
      }
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void append_decision(const fs::path & path, const CurationDecision & d)
{
  if (!path.parent_path().empty()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::app);
  out << to_json(d).dump() << '\n';
  out.flush();
  if (!out) {
    throw IoError("cannot append to " + path.string());
  }
}

Curation EffectiveView::patch_state(const std::string & id) const
{
  const auto it = patches.find(id);
  return it == patches.end() ? Curation::Auto : it->second;
}

Curation EffectiveView::annotation_state(const std::string & id) const
{
  const auto it = annotations.find(id);
  return it == annotations.end() ? Curation::Auto : it->second;
}

EffectiveView apply_curation(const DatasetManifest & m, std::vector<CurationDecision> decisions)
{
  std::stable_sort(decisions.begin(), decisions.end(), [](const CurationDecision & a, const CurationDecision & b) {
    return std::tie(a.at_ms, a.seq) < std::tie(b.at_ms, b.seq);
  });
  std::set<std::string> patch_ids;
  for (const auto & p : m.patches) {
    patch_ids.insert(p.patch_id);
  }
  EffectiveView v;
  for (const auto & d : decisions) {
    const Curation c = d.action == Action::Accept ? Curation::Accepted : Curation::Rejected;
    if (!patch_ids.count(d.patch_id)) {
      v.warnings.push_back("decision " + std::to_string(d.seq) + " names unknown patch " + d.patch_id);
      continue;
    }
    if (d.targets_patch()) {
      v.patches[d.patch_id] = c;
    }
    else if (m.has_annotation(d.target)) {
      v.annotations[d.target] = c;
    }
    else {
      v.warnings.push_back("decision " + std::to_string(d.seq) + " names unknown annotation " + d.target);
    }
  }
  return v;
}

Policy policy_from_string(const std::string & s)
{
  if (s == "strict") {
    return Policy::Strict;
  }
  if (s == "lenient") {
    return Policy::Lenient;
  }
  throw ConfigError("unknown export policy '" + s + "'");
}

Format format_from_string(const std::string & s)
{
  if (s == "jsonl") {
    return Format::Jsonl;
  }
  if (s == "coco") {
    return Format::Coco;
  }
  throw ConfigError("unknown export format '" + s + "'");
}

bool patch_included(const EffectiveView & v, const std::string & patch_id, Policy policy)
{
  const Curation c = v.patch_state(patch_id);
  return policy == Policy::Strict ? c == Curation::Accepted : c != Curation::Rejected;
}

std::vector<PatchAnnotation> effective_annotations(const DatasetManifest & m, const EffectiveView & v,
                                                   const std::string & patch_id)
{
  std::vector<PatchAnnotation> out;
  const auto it = m.annotations.find(patch_id);
  if (it == m.annotations.end()) {
    return out;
  }
  const Curation patch_state = v.patch_state(patch_id);
  for (PatchAnnotation a : it->second) {
    const Curation own = v.annotation_state(a.annotation_id);
    if (own == Curation::Rejected) {
      continue;
    }
    a.record.annotation.curation = own != Curation::Auto ? own : patch_state;
    out.push_back(std::move(a));
  }
  return out;
}

bool patch_flagged(const DatasetManifest & m, const std::string & patch_id)
{
  const auto it = m.annotations.find(patch_id);
  if (it == m.annotations.end()) {
    return false;
  }
  return std::any_of(it->second.begin(), it->second.end(),
                     [](const PatchAnnotation & a) { return a.record.annotation.cloud_flagged; });
}

std::string sha256_hex(std::span<const std::uint8_t> bytes)
{
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256 failed");
  }
  static const char * hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

namespace
{

json coco_bundle(const DatasetManifest & m, const std::vector<const PatchEntry *> & patches,
                 const std::vector<std::vector<PatchAnnotation>> & anns)
{
  json images = json::array(), annotations = json::array();
  std::int64_t next_ann = 1;
  for (std::size_t i = 0; i < patches.size(); ++i) {
    const PatchEntry & p = *patches[i];
    images.push_back({{"id", i + 1}, {"file_name", "patches/" + p.image_id + "/" + fs::path(p.path).filename().string()},
                      {"width", p.size}, {"height", p.size}, {"patch_id", p.patch_id}});
    for (const auto & a : anns[i]) {
      const Box & b = a.record.annotation.box;
      annotations.push_back({
        {"id", next_ann++},
        {"image_id", i + 1},
        {"category_id", 1},
        {"bbox", {b.x_min, b.y_min, b.width(), b.height()}},
        {"area", b.area()},
        {"iscrowd", 0},
        {"attributes",
         {{"annotation_id", a.annotation_id},
          {"mmsi", a.record.annotation.mmsi},
          {"length_m", a.record.annotation.length_m},
          {"cloud_fraction", a.record.annotation.cloud_fraction},
          {"flagged", a.record.annotation.cloud_flagged},
          {"curation", to_string(a.record.annotation.curation)}}},
      });
    }
  }
  (void)m;
  return {{"images", images}, {"annotations", annotations}, {"categories", {{{"id", 1}, {"name", "ship"}}}}};
}

}  // namespace

ExportSummary export_dataset(const fs::path & root, const DatasetManifest & m, const EffectiveView & v,
                             Policy policy, Format format, const fs::path & out_dir)
{
  const fs::path target = fs::absolute(out_dir).lexically_normal();
  const fs::path parent = target.parent_path();
  const fs::path tmp = parent / ("." + target.filename().string() + ".tmp-" + std::to_string(::getpid()));
  ExportSummary summary;
  try {
    fs::create_directories(parent);
    fs::remove_all(tmp);
    fs::create_directories(tmp);

    std::vector<const PatchEntry *> patches;
    std::vector<std::vector<PatchAnnotation>> anns;
    for (const auto & p : m.patches) {
      if (patch_included(v, p.patch_id, policy)) {
        patches.push_back(&p);
        anns.push_back(effective_annotations(m, v, p.patch_id));
      }
    }

    json snapshot_patches = json::array();
    std::set<std::string> image_ids;
    for (std::size_t i = 0; i < patches.size(); ++i) {
      const PatchEntry & p = *patches[i];
      const auto bytes = io::read_file((root / p.path).string());
      const std::string rel_path = "patches/" + p.image_id + "/" + fs::path(p.path).filename().string();
      fs::create_directories((tmp / rel_path).parent_path());
      io::write_file((tmp / rel_path).string(), bytes);
      summary.sha256[rel_path] = sha256_hex(bytes);
      summary.annotations += static_cast<std::int64_t>(anns[i].size());
      image_ids.insert(p.image_id);
      snapshot_patches.push_back({{"patch_id", p.patch_id}, {"image_id", p.image_id},
                                  {"origin", origin_json(p.origin)}, {"size", p.size}, {"path", rel_path},
                                  {"n_annotations", anns[i].size()}});
    }
    summary.patches = static_cast<std::int64_t>(patches.size());

    std::string ann_name;
    std::string ann_text;
    if (format == Format::Jsonl) {
      ann_name = "annotations.jsonl";
      for (std::size_t i = 0; i < patches.size(); ++i) {
        for (const auto & a : anns[i]) {
          json r = to_json(a.record);
          r["patch_id"] = a.patch_id;
          r["annotation_id"] = a.annotation_id;
          ann_text += r.dump() + "\n";
        }
      }
    }
    else {
      ann_name = "annotations.coco.json";
      ann_text = coco_bundle(m, patches, anns).dump(2) + "\n";
    }
    write_bytes(tmp / ann_name, ann_text);
    summary.sha256[ann_name] =
      sha256_hex(std::span(reinterpret_cast<const std::uint8_t *>(ann_text.data()), ann_text.size()));

    json snapshot_images = json::array();
    const json full = to_json(m);
    for (const auto & e : full.at("images")) {
      if (image_ids.count(e.at("image_id").get<std::string>())) {
        snapshot_images.push_back(e);
      }
    }
    const json snapshot = {
      {"policy", policy == Policy::Strict ? "strict" : "lenient"},
      {"format", format == Format::Jsonl ? "jsonl" : "coco"},
      {"images", snapshot_images},
      {"patches", snapshot_patches},
      {"counts", {{"patches", summary.patches}, {"annotations", summary.annotations}}},
      {"sha256", summary.sha256},
    };
    write_bytes(tmp / "manifest.json", snapshot.dump(2) + "\n");

    if (fs::exists(target)) {
      const fs::path old = parent / ("." + target.filename().string() + ".old-" + std::to_string(::getpid()));
      fs::remove_all(old);
      fs::rename(target, old);
      fs::rename(tmp, target);
      fs::remove_all(old);
    }
    else {
      fs::rename(tmp, target);
    }
  }
  catch (const fs::filesystem_error & e) {
    std::error_code ec;
    fs::remove_all(tmp, ec);
    throw IoError(std::string("export failed: ") + e.what());
  }
  catch (...) {
    std::error_code ec;
    fs::remove_all(tmp, ec);
    throw;
  }
  return summary;
}

// ---------------------------------------------------------------- statistics

GroupStats & GroupStats::operator+=(const GroupStats & o)
{
  images += o.images;
  images_valid += o.images_valid;
  ships += o.ships;
  ships_valid += o.ships_valid;
  patches += o.patches;
  patches_annotated += o.patches_annotated;
  patch_ships += o.patch_ships;
  undecided += o.undecided;
  accepted += o.accepted;
  rejected += o.rejected;
  flagged += o.flagged;
  return *this;
}

std::set<std::string> valid_annotation_ids(const DatasetManifest & m, const EffectiveView & v)
{
  // Patch membership per annotation, for the "all its patches rejected" rule.
  std::map<std::string, std::pair<int, int>> membership;  // id -> (patches, rejected patches)
  for (const auto & [pid, anns] : m.annotations) {
    const bool rejected = v.patch_state(pid) == Curation::Rejected;
    for (const auto & a : anns) {
      auto & [n, r] = membership[a.annotation_id];
      ++n;
      r += rejected ? 1 : 0;
    }
  }
  std::set<std::string> out;
  for (const auto & [image_id, recs] : m.image_annotations) {
    for (std::size_t k = 0; k < recs.size(); ++k) {
      const std::string id = annotation_id(image_id, k);
      const Curation c = v.annotation_state(id);
      const auto mem = membership.find(id);
      const bool all_patches_rejected = mem != membership.end() && mem->second.first == mem->second.second;
      if (c != Curation::Rejected && !all_patches_rejected &&
          (c == Curation::Accepted || !recs[k].annotation.cloud_flagged)) {
        out.insert(id);
      }
    }
  }
  return out;
}

Stats compute_stats(const DatasetManifest & m, const EffectiveView & v)
{
  Stats s;
  std::map<std::string, GroupKey> key_of;
  for (const auto & i : m.images) {
    key_of[i.image_id] = {i.provider, i.location, i.year};
  }
  const auto valid_ids = valid_annotation_ids(m, v);
  for (const auto & i : m.images) {
    GroupStats & g = s.groups[key_of[i.image_id]];
    ++g.images;
    const auto it = m.image_annotations.find(i.image_id);
    if (it == m.image_annotations.end()) {
      continue;
    }
    std::int64_t valid = 0;
    for (std::size_t k = 0; k < it->second.size(); ++k) {
      valid += valid_ids.count(annotation_id(i.image_id, k));
    }
    g.ships += static_cast<std::int64_t>(it->second.size());
    g.ships_valid += valid;
    g.images_valid += valid > 0 ? 1 : 0;
  }
  for (const auto & p : m.patches) {
    GroupStats & g = s.groups[key_of[p.image_id]];
    ++g.patches;
    const auto n = effective_annotations(m, v, p.patch_id).size();
    const Curation c = v.patch_state(p.patch_id);
    if (c != Curation::Rejected && n > 0) {
      ++g.patches_annotated;
      g.patch_ships += static_cast<std::int64_t>(n);
    }
    g.undecided += c == Curation::Auto ? 1 : 0;
    g.accepted += c == Curation::Accepted ? 1 : 0;
    g.rejected += c == Curation::Rejected ? 1 : 0;
    g.flagged += patch_flagged(m, p.patch_id) ? 1 : 0;
  }
  for (const auto & [k, g] : s.groups) {
    s.total += g;
  }
  return s;
}

namespace
{

json group_json(const GroupStats & g)
{
  return {
    {"images", g.images},
    {"images_valid", g.images_valid},
    {"ships", g.ships},
    {"ships_valid", g.ships_valid},
    {"patches", g.patches},
    {"patches_annotated", g.patches_annotated},
    {"patch_ships", g.patch_ships},
    {"undecided", g.undecided},
    {"accepted", g.accepted},
    {"rejected", g.rejected},
    {"flagged", g.flagged},
  };
}

}  // namespace

json to_json(const Stats & s)
{
  json groups = json::array();
  for (const auto & [k, g] : s.groups) {
    json e = group_json(g);
    e["provider"] = k.provider;
    e["location"] = k.location;
    e["year"] = k.year;
    groups.push_back(std::move(e));
  }
  json out = group_json(s.total);
  out["groups"] = std::move(groups);
  return out;
}

}  // namespace shipfuse::catalog
