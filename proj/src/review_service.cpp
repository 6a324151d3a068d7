#include "shipfuse/review_service.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <future>
#include <mutex>
#include <shared_mutex>
#include <thread>

#include "httplib.h"
#include "shipfuse/error.hpp"
#include "shipfuse/image_io.hpp"
#include "shipfuse/parse.hpp"

namespace shipfuse::review
{

using nlohmann::json;
namespace fs = std::filesystem;

namespace
{

constexpr const char * kJson = "application/json";

std::int64_t system_ms()
{
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

void set_rgb(Image & img, int x, int y, std::array<std::uint16_t, 3> c)
{
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) {
    return;
  }
  for (int b = 0; b < 3; ++b) {
    img.bands[b].at(x, y) = c[b];
  }
}

struct Job
{
  catalog::CurationDecision decision;
  std::promise<json> done;
};

}  // namespace

std::vector<std::uint8_t> render_overlay(const Image & patch, const std::vector<catalog::PatchAnnotation> & anns,
                                         const catalog::EffectiveView & view)
{
  Image img = patch;
  if (img.bit_depth > 8) {
    img = raster::to_8bit(img).image;
  }
  while (img.channels() < 3) {
    img.bands.push_back(img.bands.front());
  }
  img.bands.resize(3);
  for (const auto & a : anns) {
    const auto & ann = a.record.annotation;
    const bool red = ann.cloud_flagged || view.annotation_state(a.annotation_id) == Curation::Rejected ||
                     view.patch_state(a.patch_id) == Curation::Rejected;
    const std::array<std::uint16_t, 3> colour = red ? std::array<std::uint16_t, 3>{255, 0, 0}
                                                    : std::array<std::uint16_t, 3>{0, 255, 0};
    const int x0 = static_cast<int>(std::floor(ann.box.x_min));
    const int y0 = static_cast<int>(std::floor(ann.box.y_min));
    const int x1 = static_cast<int>(std::ceil(ann.box.x_max)) - 1;
    const int y1 = static_cast<int>(std::ceil(ann.box.y_max)) - 1;
    for (int x = x0; x <= x1; ++x) {
      set_rgb(img, x, y0, colour);
      set_rgb(img, x, y1, colour);
    }
    for (int y = y0; y <= y1; ++y) {
      set_rgb(img, x0, y, colour);
      set_rgb(img, x1, y, colour);
    }
  }
  return io::encode_png(img);
}

struct ReviewService::Impl
{
  ServiceOptions opt;
  fs::path log_path;
  catalog::DatasetManifest manifest;
  std::map<std::string, std::size_t> patch_index;
  std::map<std::string, std::string> first_patch_of;  // annotation id -> first patch containing it

  mutable std::shared_mutex state_mu;
  std::vector<catalog::CurationDecision> log;
  catalog::EffectiveView view;
  std::int64_t revision = 0;

  std::mutex queue_mu;
  std::condition_variable queue_cv;
  std::deque<std::shared_ptr<Job>> queue;
  bool stopping = false;
  bool suspended = false;
  std::thread writer;

  httplib::Server server;
  std::thread listener;

  explicit Impl(ServiceOptions o) : opt(std::move(o))
  {
    if (!opt.clock_ms) {
      opt.clock_ms = system_ms;
    }
    log_path = opt.root / "curation.jsonl";
    manifest = catalog::build_manifest(opt.root, opt.min_inside);
    for (std::size_t i = 0; i < manifest.patches.size(); ++i) {
      patch_index[manifest.patches[i].patch_id] = i;
    }
    for (const auto & p : manifest.patches) {
      const auto it = manifest.annotations.find(p.patch_id);
      if (it != manifest.annotations.end()) {
        for (const auto & a : it->second) {
          first_patch_of.emplace(a.annotation_id, p.patch_id);
        }
      }
    }
    log = catalog::read_curation_log(log_path);
    view = catalog::apply_curation(manifest, log);
    revision = static_cast<std::int64_t>(log.size());
    writer = std::thread([this] { writer_loop(); });
    routes();
  }

  ~Impl()
  {
    server.stop();
    if (listener.joinable()) {
      listener.join();
    }
    {
      std::lock_guard lk(queue_mu);
      stopping = true;
    }
    queue_cv.notify_all();
    if (writer.joinable()) {
      writer.join();
    }
  }

  // ------------------------------------------------------------ views

  json annotation_json(const catalog::PatchAnnotation & a) const
  {
    const auto & ann = a.record.annotation;
    return {
      {"annotation_id", a.annotation_id},
      {"box", {ann.box.x_min, ann.box.y_min, ann.box.x_max, ann.box.y_max}},
      {"mmsi", ann.mmsi},
      {"length_m", ann.length_m},
      {"cloud_fraction", ann.cloud_fraction},
      {"flagged", ann.cloud_flagged},
      {"state", to_string(view.annotation_state(a.annotation_id))},
    };
  }

  json item_json(const catalog::PatchEntry & p, std::size_t position) const
  {
    const catalog::ImageEntry * img = manifest.find_image(p.image_id);
    json anns = json::array();
    const auto it = manifest.annotations.find(p.patch_id);
    if (it != manifest.annotations.end()) {
      for (const auto & a : it->second) {
        anns.push_back(annotation_json(a));
      }
    }
    return {
      {"patch_id", p.patch_id},
      {"image_id", p.image_id},
      {"provider", img ? img->provider : ""},
      {"location", img ? img->location : ""},
      {"year", img ? img->year : ""},
      {"origin", {p.origin.x, p.origin.y}},
      {"size", p.size},
      {"state", to_string(view.patch_state(p.patch_id))},
      {"flagged", catalog::patch_flagged(manifest, p.patch_id)},
      {"annotations", anns},
      {"position", position},
    };
  }

  // ------------------------------------------------------------ writer

  void writer_loop()
  {
    for (;;) {
      std::shared_ptr<Job> job;
      {
        std::unique_lock lk(queue_mu);
        queue_cv.wait(lk, [&] { return stopping || (!suspended && !queue.empty()); });
        if (stopping) {
          for (auto & j : queue) {
            j->done.set_exception(std::make_exception_ptr(IoError("review service stopping")));
          }
          queue.clear();
          return;
        }
        job = std::move(queue.front());
        queue.pop_front();
      }
      try {
        job->done.set_value(commit(job->decision));
      }
      catch (...) {
        job->done.set_exception(std::current_exception());
      }
    }
  }

  json commit(catalog::CurationDecision d)
  {
    const Curation wanted = d.action == catalog::Action::Accept ? Curation::Accepted : Curation::Rejected;
    bool appended = false;
    {
      std::unique_lock lk(state_mu);
      const Curation current =
        d.targets_patch() ? view.patch_state(d.patch_id) : view.annotation_state(d.target);
      if (current != wanted) {
        d.seq = log.empty() ? 1 : log.back().seq + 1;
        d.at_ms = std::max(opt.clock_ms(), log.empty() ? std::int64_t{0} : log.back().at_ms);
        catalog::append_decision(log_path, d);
        log.push_back(d);
        view = catalog::apply_curation(manifest, log);
        ++revision;
        appended = true;
      }
    }
    std::shared_lock lk(state_mu);
    const auto & p = manifest.patches[patch_index.at(d.patch_id)];
    return {
      {"dataset_revision", revision},
      {"appended", appended},
      {"target", d.target},
      {"patch_id", d.patch_id},
      {"state", to_string(wanted)},
      {"patch", item_json(p, patch_index.at(d.patch_id))},
    };
  }

  // ------------------------------------------------------------ routes

  static void reply(httplib::Response & res, int status, const json & body)
  {
    res.status = status;
    res.set_content(body.dump(), kJson);
  }

  json error_body(const std::string & message) const
  {
    std::shared_lock lk(state_mu);
    return {{"error", message}, {"dataset_revision", revision}};
  }

  void routes()
  {
    server.Get("/api/queue", [this](const httplib::Request & req, httplib::Response & res) {
      const std::string filter = req.has_param("filter") ? req.get_param_value("filter") : "all";
      if (filter != "undecided" && filter != "flagged" && filter != "all") {
        return reply(res, 400, error_body("bad filter '" + filter + "'"));
      }
      std::optional<int> page = 0, page_size = opt.page_size;
      if (req.has_param("page")) {
        page = parse_number<int>(req.get_param_value("page"));
      }
      if (req.has_param("page_size")) {
        page_size = parse_number<int>(req.get_param_value("page_size"));
      }
      if (!page || *page < 0 || !page_size || *page_size < 1) {
        return reply(res, 400, error_body("bad page"));
      }
      const bool flagged_first = req.has_param("flagged_first") && req.get_param_value("flagged_first") == "1";

      std::shared_lock lk(state_mu);
      std::vector<const catalog::PatchEntry *> items;
      for (const auto & p : manifest.patches) {
        const bool flagged = catalog::patch_flagged(manifest, p.patch_id);
        if ((filter == "undecided" && view.patch_state(p.patch_id) != Curation::Auto) ||
            (filter == "flagged" && !flagged)) {
          continue;
        }
        items.push_back(&p);
      }
      if (flagged_first) {
        std::stable_partition(items.begin(), items.end(), [&](const catalog::PatchEntry * p) {
          return catalog::patch_flagged(manifest, p->patch_id);
        });
      }
      json out = json::array();
      const std::size_t begin = static_cast<std::size_t>(*page) * static_cast<std::size_t>(*page_size);
      for (std::size_t i = begin; i < items.size() && i < begin + static_cast<std::size_t>(*page_size); ++i) {
        out.push_back(item_json(*items[i], i));
      }
      reply(res, 200,
            {{"dataset_revision", revision}, {"filter", filter}, {"page", *page}, {"page_size", *page_size},
             {"total", items.size()}, {"items", out}});
    });

    server.Get(R"(/api/patch/(.+)/image)", [this](const httplib::Request & req, httplib::Response & res) {
      const std::string id = req.matches[1];
      const std::string overlay = req.has_param("overlay") ? req.get_param_value("overlay") : "none";
      if (overlay != "none" && overlay != "boxes") {
        return reply(res, 400, error_body("bad overlay '" + overlay + "'"));
      }
      const auto it = patch_index.find(id);
      if (it == patch_index.end()) {
        return reply(res, 404, error_body("unknown patch " + id));
      }
      const auto & p = manifest.patches[it->second];
      std::vector<std::uint8_t> bytes;
      try {
        bytes = io::read_file((opt.root / p.path).string());
        if (overlay == "boxes") {
          const auto ait = manifest.annotations.find(id);
          std::shared_lock lk(state_mu);
          bytes = render_overlay(io::decode_png(bytes),
                                 ait == manifest.annotations.end() ? std::vector<catalog::PatchAnnotation>{}
                                                                   : ait->second,
                                 view);
        }
      }
      catch (const Error & e) {
        return reply(res, 500, error_body(e.what()));
      }
      res.status = 200;
      res.set_header("X-Dataset-Revision", std::to_string(revision_locked()));
      res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
    });

    server.Post("/api/decision", [this](const httplib::Request & req, httplib::Response & res) {
      json body;
      try {
        body = json::parse(req.body);
      }
      catch (const json::exception &) {
        return reply(res, 400, error_body("body is not JSON"));
      }
      if (!body.is_object() || !body.contains("target") || !body["target"].is_string() || !body.contains("action") ||
          !body["action"].is_string()) {
        return reply(res, 400, error_body("need string fields target and action"));
      }
      catalog::CurationDecision d;
      const std::string action = body["action"];
      if (action == "accept") {
        d.action = catalog::Action::Accept;
      }
      else if (action == "reject") {
        d.action = catalog::Action::Reject;
      }
      else {
        return reply(res, 400, error_body("action must be accept or reject"));
      }
      d.actor = body.value("actor", std::string());
      const std::string target = body["target"];
      if (patch_index.count(target)) {
        d.patch_id = target;
        d.target = "patch";
      }
      else if (manifest.has_annotation(target) && first_patch_of.count(target)) {
        d.target = target;
        d.patch_id = body.contains("patch_id") && body["patch_id"].is_string() ? body["patch_id"].get<std::string>()
                                                                                : first_patch_of.at(target);
        if (!patch_index.count(d.patch_id)) {
          return reply(res, 404, error_body("unknown patch " + d.patch_id));
        }
      }
      else {
        return reply(res, 404, error_body("unknown target " + target));
      }

      auto job = std::make_shared<Job>();
      job->decision = d;
      auto fut = job->done.get_future();
      {
        std::lock_guard lk(queue_mu);
        if (stopping || suspended) {
          return reply(res, 409, error_body("curation log writer unavailable"));
        }
        queue.push_back(job);
      }
      queue_cv.notify_one();
      if (fut.wait_for(std::chrono::duration<double>(opt.write_timeout_s)) != std::future_status::ready) {
        return reply(res, 409, error_body("curation log writer timed out"));
      }
      try {
        reply(res, 200, fut.get());
      }
      catch (const std::exception & e) {
        reply(res, 409, error_body(e.what()));
      }
    });

    server.Get("/api/stats", [this](const httplib::Request &, httplib::Response & res) {
      std::shared_lock lk(state_mu);
      json out = catalog::to_json(catalog::compute_stats(manifest, view));
      out["dataset_revision"] = revision;
      reply(res, 200, out);
    });

    if (opt.static_dir && fs::is_directory(*opt.static_dir)) {
      server.set_mount_point("/", opt.static_dir->string());
    }
  }

  std::int64_t revision_locked() const
  {
    std::shared_lock lk(state_mu);
    return revision;
  }
};

ReviewService::ReviewService(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

ReviewService::~ReviewService() = default;

int ReviewService::start(const std::string & host, int port)
{
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  }
  else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) {
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  }
  impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void ReviewService::run(const std::string & host, int port)
{
  if (!impl_->server.listen(host, port)) {
    throw IoError("cannot listen on " + host + ":" + std::to_string(port));
  }
}

void ReviewService::stop()
{
  impl_->server.stop();
  if (impl_->listener.joinable()) {
    impl_->listener.join();
  }
}

std::int64_t ReviewService::revision() const
{
  return impl_->revision_locked();
}

catalog::Stats ReviewService::stats() const
{
  std::shared_lock lk(impl_->state_mu);
  return catalog::compute_stats(impl_->manifest, impl_->view);
}

const catalog::DatasetManifest & ReviewService::manifest() const
{
  return impl_->manifest;
}

void ReviewService::suspend_writer(bool suspended)
{
  {
    std::lock_guard lk(impl_->queue_mu);
    impl_->suspended = suspended;
  }
  impl_->queue_cv.notify_all();
}

}  // namespace shipfuse::review
