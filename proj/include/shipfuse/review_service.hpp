#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"
#include "shipfuse/catalog.hpp"

namespace shipfuse::review
{

struct ServiceOptions
{
  std::filesystem::path root;
  std::optional<std::filesystem::path> static_dir;
  int page_size = 50;
  double min_inside = 0.5;
  double write_timeout_s = 10.0;
  std::function<std::int64_t()> clock_ms;  // defaults to the system clock
};

/// HTTP curation API over one dataset root.
///
///   GET  /api/queue?filter=undecided|flagged|all&page=N[&page_size=K][&flagged_first=1]
///   GET  /api/patch/<patch_id>/image?overlay=none|boxes
///   POST /api/decision  {"target", "action", "actor"[, "patch_id"]}
///   GET  /api/stats
///
/// Every JSON response carries "dataset_revision", the number of decisions in
/// the curation log. Decisions go through a single writer thread.
class ReviewService
{
public:
  explicit ReviewService(ServiceOptions options);
  ~ReviewService();
  ReviewService(const ReviewService &) = delete;
  ReviewService & operator=(const ReviewService &) = delete;

  /// Binds and serves on a background thread; port 0 picks a free port. Returns the port.
  int start(const std::string & host = "127.0.0.1", int port = 0);
  /// Binds and serves on the calling thread until stop().
  void run(const std::string & host, int port);
  void stop();

  std::int64_t revision() const;
  catalog::Stats stats() const;
  const catalog::DatasetManifest & manifest() const;

  /// Test hook: makes the writer refuse work, as if the log were unavailable.
  void suspend_writer(bool suspended);

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// PNG bytes of a patch with annotation rectangles drawn: green for auto or
/// accepted, red for cloud-flagged or rejected.
std::vector<std::uint8_t> render_overlay(const Image & patch, const std::vector<catalog::PatchAnnotation> & anns,
                                         const catalog::EffectiveView & view);

}  // namespace shipfuse::review
