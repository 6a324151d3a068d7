#include "shipfuse/detect.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/file.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "shipfuse/error.hpp"
#include "shipfuse/image_io.hpp"

namespace shipfuse::detect
{

std::optional<int> otsu_threshold(const kernels::Histogram256 & h)
{
  std::uint64_t total = 0;
  long double sum_all = 0;
  int distinct = 0;
  for (int v = 0; v < 256; ++v) {
    total += h[v];
    sum_all += static_cast<long double>(v) * h[v];
    distinct += h[v] > 0;
  }
  if (distinct < 2) {
    return std::nullopt;
  }
  std::uint64_t w0 = 0;
  long double sum0 = 0;
  long double best = -1;
  int best_t = 0;
  for (int t = 0; t < 255; ++t) {
    w0 += h[t];
    sum0 += static_cast<long double>(t) * h[t];
    const std::uint64_t w1 = total - w0;
    if (w0 == 0 || w1 == 0) {
      continue;
    }
    const long double diff = static_cast<long double>(total) * sum0 - static_cast<long double>(w0) * sum_all;
    const long double score = diff * diff / (static_cast<long double>(w0) * static_cast<long double>(w1));
    if (score > best) {
      best = score;
      best_t = t;
    }
  }
  return best_t;
}

std::vector<Component> connected_components(const Plane<std::uint8_t> & lum, int threshold)
{
  const int w = lum.width(), h = lum.height();
  std::vector<std::int32_t> label(static_cast<std::size_t>(w) * h, -1);
  std::vector<Component> out;
  std::vector<std::int32_t> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      if (label[idx] >= 0 || lum.at(x, y) <= threshold) {
        continue;
      }
      const auto id = static_cast<std::int32_t>(out.size());
      Component c;
      int x0 = x, x1 = x, y0 = y, y1 = y;
      std::uint64_t sum = 0;
      label[idx] = id;
      stack.assign(1, static_cast<std::int32_t>(idx));
      while (!stack.empty()) {
        const std::int32_t p = stack.back();
        stack.pop_back();
        const int px = p % w, py = p / w;
        ++c.area;
        sum += lum.at(px, py);
        x0 = std::min(x0, px), x1 = std::max(x1, px), y0 = std::min(y0, py), y1 = std::max(y1, py);
        const int nx[4] = {px - 1, px + 1, px, px};
        const int ny[4] = {py, py, py - 1, py + 1};
        for (int k = 0; k < 4; ++k) {
          if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) {
            continue;
          }
          const std::size_t q = static_cast<std::size_t>(ny[k]) * w + nx[k];
          if (label[q] < 0 && lum.at(nx[k], ny[k]) > threshold) {
            label[q] = id;
            stack.push_back(static_cast<std::int32_t>(q));
          }
        }
      }
      c.box = {double(x0), double(y0), double(x1 + 1), double(y1 + 1)};
      c.mean = static_cast<double>(sum) / static_cast<double>(c.area);
      out.push_back(c);
    }
  }
  return out;
}

std::vector<Detection> detect_baseline(const Image & tile, const BaselineParams & params)
{
  if (params.min_area_px < 1) {
    throw ConfigError("min_area_px must be >= 1");
  }
  const Plane<std::uint8_t> lum = kernels::serial::luminance(tile);
  const kernels::Histogram256 hist = kernels::serial::histogram(lum);
  int threshold = params.fixed_threshold;
  if (params.mode == ThresholdMode::Otsu) {
    const auto t = otsu_threshold(hist);
    if (!t) {
      return {};
    }
    threshold = *t;
  }
  std::uint64_t bg_n = 0;
  long double bg_sum = 0;
  for (int v = 0; v <= std::min(threshold, 255); ++v) {
    bg_n += hist[v];
    bg_sum += static_cast<long double>(v) * hist[v];
  }
  const double bg_mean = bg_n ? static_cast<double>(bg_sum / bg_n) : 0.0;
  std::vector<Detection> out;
  for (const Component & c : connected_components(lum, threshold)) {
    if (c.area < params.min_area_px) {
      continue;
    }
    Detection d;
    d.box = c.box;
    d.confidence = std::clamp((c.mean - bg_mean) / 255.0, 0.0, 1.0);
    d.space = Space::Tile;
    out.push_back(d);
  }
  return out;
}

Detection to_image_space(const Detection & d, raster::Origin origin)
{
  Detection out = d;
  out.box = d.box.translated(origin.x, origin.y);
  out.space = Space::Image;
  out.origin = {};
  return out;
}

Detection to_tile_space(const Detection & d, raster::Origin origin)
{
  Detection out = d;
  out.box = d.box.translated(-origin.x, -origin.y);
  out.space = Space::Tile;
  out.origin = origin;
  return out;
}

double iou(const Box & a, const Box & b)
{
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) {
    return 0.0;
  }
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

bool nms_before(const Detection & a, const Detection & b)
{
  if (a.confidence != b.confidence) {
    return a.confidence > b.confidence;
  }
  if (a.box.area() != b.box.area()) {
    return a.box.area() > b.box.area();
  }
  return a.box < b.box;
}

std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold, double confidence_floor)
{
  std::erase_if(dets, [&](const Detection & d) { return d.confidence < confidence_floor; });
  std::stable_sort(dets.begin(), dets.end(), nms_before);
  std::vector<Detection> keep;
  std::vector<char> removed(dets.size(), 0);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (removed[i]) {
      continue;
    }
    keep.push_back(dets[i]);
    for (std::size_t j = i + 1; j < dets.size(); ++j) {
      if (!removed[j] && iou(dets[i].box, dets[j].box) > iou_threshold) {
        removed[j] = 1;
      }
    }
  }
  return keep;
}

std::vector<Detection> detect_tiled(const Image & image, const TiledParams & params)
{
  const auto plan = raster::tile_plan(image.width, image.height, params.tile_size, params.overlap);
  std::vector<std::vector<Detection>> per_tile(plan.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const Image tile = kernels::serial::crop_pad(image, plan[i].x, plan[i].y, params.tile_size);
    for (const Detection & d : detect_baseline(tile, params.baseline)) {
      per_tile[i].push_back(to_image_space(d, plan[i]));
    }
  }
  std::vector<Detection> all;
  for (auto & v : per_tile) {
    all.insert(all.end(), v.begin(), v.end());
  }
  return nms(std::move(all), params.iou_threshold, params.confidence_floor);
}

// ---------------------------------------------------------------- external protocol

nlohmann::json to_json(const Detection & d)
{
  return {{"box", {d.box.x_min, d.box.y_min, d.box.x_max, d.box.y_max}}, {"confidence", d.confidence}};
}

Detection detection_from_json(const nlohmann::json & j)
{
  if (!j.is_object() || !j.contains("box") || !j.contains("confidence")) {
    throw ProtocolError("detection needs box and confidence: " + j.dump());
  }
  const auto & b = j["box"];
  if (!b.is_array() || b.size() != 4 || !std::all_of(b.begin(), b.end(), [](const auto & v) { return v.is_number(); })) {
    throw ProtocolError("box must be four numbers: " + j.dump());
  }
  if (!j["confidence"].is_number()) {
    throw ProtocolError("confidence must be a number: " + j.dump());
  }
  Detection d;
  d.box = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
  d.confidence = j["confidence"].get<double>();
  if (!(d.box.x_min < d.box.x_max) || !(d.box.y_min < d.box.y_max)) {
    throw ProtocolError("degenerate box: " + j.dump());
  }
  if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
    throw ProtocolError("confidence outside [0, 1]: " + j.dump());
  }
  return d;
}

std::map<std::string, std::vector<Detection>> parse_response(const nlohmann::json & response,
                                                             const std::vector<TileRequest> & tiles)
{
  if (!response.is_object()) {
    throw ProtocolError("response must be an object keyed by tile id");
  }
  std::map<std::string, std::vector<Detection>> out;
  std::map<std::string, raster::Origin> origins;
  for (const auto & t : tiles) {
    out[t.id];
    origins[t.id] = t.origin;
  }
  for (const auto & [id, list] : response.items()) {
    const auto it = origins.find(id);
    if (it == origins.end()) {
      throw ProtocolError("response names unknown tile " + id);
    }
    if (!list.is_array()) {
      throw ProtocolError("detections for tile " + id + " must be an array");
    }
    for (const auto & item : list) {
      Detection d = detection_from_json(item);
      d.space = Space::Tile;
      d.origin = it->second;
      out[id].push_back(d);
    }
  }
  return out;
}

namespace
{

class DirLock
{
public:
  explicit DirLock(const std::filesystem::path & dir)
  {
    fd_ = ::open((dir / ".lock").c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0) {
      throw IoError("cannot lock exchange directory " + dir.string());
    }
  }
  ~DirLock()
  {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }
  DirLock(const DirLock &) = delete;
  DirLock & operator=(const DirLock &) = delete;

private:
  int fd_ = -1;
};

std::string substitute(std::string cmd, const std::string & dir)
{
  const std::string key = "{request_dir}";
  for (std::size_t pos = cmd.find(key); pos != std::string::npos; pos = cmd.find(key, pos + dir.size())) {
    cmd.replace(pos, key.size(), dir);
  }
  return cmd;
}

// Returns the wait status; kills the process group on timeout.
int run_with_timeout(const std::string & cmd, std::chrono::steady_clock::time_point deadline, double poll_s)
{
  const pid_t pid = ::fork();
  if (pid < 0) {
    throw IoError("fork failed");
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    ::execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char *>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  int status = 0;
  while (true) {
    const pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) {
      return status;
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      throw ExternalTimeout("external detector exceeded its timeout");
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(poll_s));
  }
}

std::optional<nlohmann::json> try_read_response(const std::filesystem::path & p)
{
  std::ifstream in(p);
  if (!in) {
    return std::nullopt;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    return nlohmann::json::object();
  }
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    return std::nullopt;
  }
  return j;
}

}  // namespace

std::map<std::string, std::vector<Detection>> run_external(const std::vector<TileRequest> & tiles,
                                                           const ExternalSpec & spec)
{
  namespace fs = std::filesystem;
  const fs::path dir = fs::absolute(spec.exchange_dir);
  fs::create_directories(dir / "tiles");
  DirLock lock(dir);
  const auto deadline =
    std::chrono::steady_clock::now() + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                         std::chrono::duration<double>(spec.timeout_s));
  fs::remove(dir / "response.json");

  nlohmann::json req = {{"tiles", nlohmann::json::array()}};
  std::set<std::string> ids;
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const TileRequest & t = tiles[i];
    if (!ids.insert(t.id).second) {
      throw ConfigError("duplicate tile id " + t.id);
    }
    const fs::path png = dir / "tiles" / (std::to_string(i) + ".png");
    io::write_png(png.string(), *t.pixels);
    req["tiles"].push_back({{"id", t.id},
                            {"path", png.string()},
                            {"width", t.pixels->width},
                            {"height", t.pixels->height},
                            {"origin", {t.origin.x, t.origin.y}}});
  }
  {
    const fs::path tmp = dir / "request.json.tmp";
    std::ofstream(tmp) << req.dump(2) << '\n';
    fs::rename(tmp, dir / "request.json");
  }

  if (!spec.command.empty()) {
    const int status = run_with_timeout(substitute(spec.command, dir.string()), deadline, spec.poll_interval_s);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      throw ProtocolError("external detector failed with status " + std::to_string(status));
    }
    const auto j = try_read_response(dir / "response.json");
    if (!j) {
      throw ProtocolError("external detector left no readable response.json");
    }
    return parse_response(*j, tiles);
  }
  while (true) {
    if (const auto j = try_read_response(dir / "response.json")) {
      return parse_response(*j, tiles);
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      throw ExternalTimeout("no response.json within " + std::to_string(spec.timeout_s) + " s");
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(spec.poll_interval_s));
  }
}

}  // namespace shipfuse::detect
