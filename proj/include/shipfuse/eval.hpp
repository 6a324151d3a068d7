#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "shipfuse/box.hpp"

namespace shipfuse::eval
{

struct GroundTruthPoint
{
  std::uint32_t mmsi = 0;
  double col = 0.0;
  double row = 0.0;
  double length_m = 0.0;
  std::string image_id;
};

/// Hit flag per gt: the point lies inside some box, boundaries included.
std::vector<bool> retrieval(const std::vector<Box> & detections, const std::vector<GroundTruthPoint> & gts);

/// Detections whose box contains no gt point.
std::int64_t count_false_alarms(const std::vector<Box> & detections, const std::vector<GroundTruthPoint> & gts);

struct BinSpec
{
  double width_m = 25.0;
  double lo_m = 30.0;
  double hi_m = 400.0;

  int regular_bins() const;
};

enum class BinKind { Underflow, Regular, Overflow };

/// Index into the bin list of `tally`: 0 is underflow (L < lo), then the
/// regular bins floor((L - lo) / width), the last one closed at hi, then overflow (L > hi).
std::size_t bin_index(const BinSpec & spec, double length_m);

struct Bin
{
  BinKind kind = BinKind::Regular;
  double lo = 0.0;
  std::optional<double> hi;  // absent for overflow
  std::int64_t n_gt = 0;
  std::int64_t n_detected = 0;

  std::optional<double> rate() const;
};

/// Per-group counters; merge is associative and commutative.
struct Tally
{
  std::int64_t n_gt = 0;
  std::int64_t n_detected = 0;
  std::int64_t n_detections = 0;
  std::int64_t false_alarms = 0;
  std::vector<Bin> bins;

  explicit Tally(const BinSpec & spec = {});
  void add(const std::vector<Box> & detections, const std::vector<GroundTruthPoint> & gts, const BinSpec & spec);
  Tally & merge(const Tally & other);
  std::optional<double> rate() const;
};

struct GroupKey
{
  std::string regime = "detector";
  std::string location;
  std::string provider;

  auto operator<=>(const GroupKey &) const = default;
};

std::string group_name(const GroupKey & k);

using Report = std::map<GroupKey, Tally>;

nlohmann::json to_json(const Report & report, const BinSpec & spec);

/// Table-shaped CSV: one row per regime, a rate/n_gt/n_detected column triple
/// per location x provider.
std::string to_csv(const Report & report);

/// Bar chart of per-bin rates; empty bins are drawn as outlined placeholders.
std::string to_svg(const GroupKey & key, const Tally & tally);

/// Writes report.json, report.csv and bins_<group>.svg into `dir`.
void write_report(const std::string & dir, const Report & report, const BinSpec & spec);

}  // namespace shipfuse::eval
