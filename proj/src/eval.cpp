#include "shipfuse/eval.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "shipfuse/error.hpp"

namespace shipfuse::eval
{

namespace
{

std::string fmt(double v)
{
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fmt_rate(const std::optional<double> & r)
{
  return r ? fmt(*r) : std::string();
}

nlohmann::json json_rate(const std::optional<double> & r)
{
  return r ? nlohmann::json(*r) : nlohmann::json(nullptr);
}

std::string_view kind_name(BinKind k)
{
  switch (k) {
    case BinKind::Underflow:
      return "underflow";
    case BinKind::Overflow:
      return "overflow";
    default:
      return "regular";
  }
}

void write_text(const std::filesystem::path & path, const std::string & text)
{
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
}

}  // namespace

std::vector<bool> retrieval(const std::vector<Box> & detections, const std::vector<GroundTruthPoint> & gts)
{
  std::vector<bool> hits(gts.size(), false);
  for (std::size_t i = 0; i < gts.size(); ++i) {
    for (const Box & b : detections) {
      if (b.contains(gts[i].col, gts[i].row)) {
        hits[i] = true;
        break;
      }
    }
  }
  return hits;
}

std::int64_t count_false_alarms(const std::vector<Box> & detections, const std::vector<GroundTruthPoint> & gts)
{
  std::int64_t n = 0;
  for (const Box & b : detections) {
    bool any = false;
    for (const auto & g : gts) {
      if (b.contains(g.col, g.row)) {
        any = true;
        break;
      }
    }
    n += any ? 0 : 1;
  }
  return n;
}

int BinSpec::regular_bins() const
{
  if (!(width_m > 0.0) || !(hi_m > lo_m)) {
    throw ConfigError("eval bins need width > 0 and hi > lo");
  }
  return static_cast<int>(std::ceil((hi_m - lo_m) / width_m));
}

std::size_t bin_index(const BinSpec & spec, double length_m)
{
  const int n = spec.regular_bins();
  if (length_m < spec.lo_m) {
    return 0;
  }
  if (length_m > spec.hi_m) {
    return static_cast<std::size_t>(n) + 1;
  }
  const int k = std::min(n - 1, static_cast<int>(std::floor((length_m - spec.lo_m) / spec.width_m)));
  return static_cast<std::size_t>(k) + 1;
}

std::optional<double> Bin::rate() const
{
  if (n_gt == 0) {
    return std::nullopt;
  }
  return static_cast<double>(n_detected) / static_cast<double>(n_gt);
}

Tally::Tally(const BinSpec & spec)
{
  const int n = spec.regular_bins();
  bins.push_back({BinKind::Underflow, 0.0, spec.lo_m});
  for (int k = 0; k < n; ++k) {
    const double lo = spec.lo_m + k * spec.width_m;
    bins.push_back({BinKind::Regular, lo, std::min(spec.hi_m, lo + spec.width_m)});
  }
  bins.push_back({BinKind::Overflow, spec.hi_m, std::nullopt});
}

void Tally::add(const std::vector<Box> & detections, const std::vector<GroundTruthPoint> & gts, const BinSpec & spec)
{
  const auto hits = retrieval(detections, gts);
  for (std::size_t i = 0; i < gts.size(); ++i) {
    Bin & b = bins.at(bin_index(spec, gts[i].length_m));
    ++b.n_gt;
    ++n_gt;
    if (hits[i]) {
      ++b.n_detected;
      ++n_detected;
    }
  }
  n_detections += static_cast<std::int64_t>(detections.size());
  false_alarms += count_false_alarms(detections, gts);
}

Tally & Tally::merge(const Tally & other)
{
  if (bins.size() != other.bins.size()) {
    throw ConfigError("cannot merge tallies with different binning");
  }
  n_gt += other.n_gt;
  n_detected += other.n_detected;
  n_detections += other.n_detections;
  false_alarms += other.false_alarms;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    bins[i].n_gt += other.bins[i].n_gt;
    bins[i].n_detected += other.bins[i].n_detected;
  }
  return *this;
}

std::optional<double> Tally::rate() const
{
  if (n_gt == 0) {
    return std::nullopt;
  }
  return static_cast<double>(n_detected) / static_cast<double>(n_gt);
}

std::string group_name(const GroupKey & k)
{
  std::string s = k.regime + "_" + k.location + "_" + k.provider;
  for (char & c : s) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    if (!ok) {
      c = '-';
    }
  }
  return s;
}

nlohmann::json to_json(const Report & report, const BinSpec & spec)
{
  nlohmann::json groups = nlohmann::json::array();
  for (const auto & [key, t] : report) {
    nlohmann::json bins = nlohmann::json::array();
    for (const Bin & b : t.bins) {
      bins.push_back({
        {"kind", kind_name(b.kind)},
        {"length_lo", b.lo},
        {"length_hi", b.hi ? nlohmann::json(*b.hi) : nlohmann::json(nullptr)},
        {"n_gt", b.n_gt},
        {"n_detected", b.n_detected},
        {"rate", json_rate(b.rate())},
      });
    }
    groups.push_back({
      {"regime", key.regime},
      {"location", key.location},
      {"provider", key.provider},
      {"n_gt", t.n_gt},
      {"n_detected", t.n_detected},
      {"rate", json_rate(t.rate())},
      {"n_detections", t.n_detections},
      {"false_alarms", t.false_alarms},
      {"bins", bins},
    });
  }
  return {
    {"bin_spec", {{"width_m", spec.width_m}, {"lo_m", spec.lo_m}, {"hi_m", spec.hi_m}}},
    {"groups", groups},
  };
}

std::string to_csv(const Report & report)
{
  std::set<std::pair<std::string, std::string>> columns;
  std::set<std::string> regimes;
  for (const auto & [key, t] : report) {
    columns.insert({key.location, key.provider});
    regimes.insert(key.regime);
  }
  std::ostringstream out;
  out << "regime";
  for (const auto & [loc, prov] : columns) {
    const std::string c = loc + "/" + prov;
    out << ',' << c << " rate," << c << " n_gt," << c << " n_detected";
  }
  out << '\n';
  for (const auto & regime : regimes) {
    out << regime;
    for (const auto & [loc, prov] : columns) {
      const auto it = report.find(GroupKey{regime, loc, prov});
      if (it == report.end()) {
        out << ",,,";
        continue;
      }
      const Tally & t = it->second;
      out << ',' << fmt_rate(t.rate()) << ',' << t.n_gt << ',' << t.n_detected;
    }
    out << '\n';
  }
  return out.str();
}

std::string to_svg(const GroupKey & key, const Tally & tally)
{
  constexpr int bar_w = 36;
  constexpr int gap = 6;
  constexpr int plot_h = 200;
  constexpr int left = 40;
  constexpr int top = 30;
  const int n = static_cast<int>(tally.bins.size());
  const int width = left + n * (bar_w + gap) + 20;
  const int height = top + plot_h + 70;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  s << "<text x=\"" << left << "\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">" << key.regime << " "
    << key.location << " " << key.provider << " detection rate by length (m)</text>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << width - 10 << "\" y2=\"" << top + plot_h
    << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const int y = top + plot_h - tick * plot_h / 4;
    s << "<text x=\"4\" y=\"" << y + 4 << "\" font-family=\"sans-serif\" font-size=\"10\">" << tick * 25
      << "%</text>\n";
  }
  for (int i = 0; i < n; ++i) {
    const Bin & b = tally.bins[i];
    const int x = left + i * (bar_w + gap) + gap;
    const auto r = b.rate();
    if (r) {
      const int h = static_cast<int>(std::lround(*r * plot_h));
      s << "<rect x=\"" << x << "\" y=\"" << top + plot_h - h << "\" width=\"" << bar_w << "\" height=\"" << h
        << "\" fill=\"steelblue\"/>\n";
    }
    else {
      s << "<rect x=\"" << x << "\" y=\"" << top << "\" width=\"" << bar_w << "\" height=\"" << plot_h
        << "\" fill=\"none\" stroke=\"#bbb\" stroke-dasharray=\"3,3\"/>\n";
    }
    std::string label;
    if (b.kind == BinKind::Underflow) {
      label = "<" + fmt(*b.hi);
    }
    else if (b.kind == BinKind::Overflow) {
      label = ">" + fmt(b.lo);
    }
    else {
      label = fmt(b.lo);
    }
    s << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << top + plot_h + 14
      << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">" << label << "</text>\n";
    s << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << top + plot_h + 28
      << "\" font-family=\"sans-serif\" font-size=\"9\" fill=\"#555\" text-anchor=\"middle\">n=" << b.n_gt
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void write_report(const std::string & dir, const Report & report, const BinSpec & spec)
{
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_text(fs::path(dir) / "report.json", to_json(report, spec).dump(2) + "\n");
  write_text(fs::path(dir) / "report.csv", to_csv(report));
  for (const auto & [key, t] : report) {
    write_text(fs::path(dir) / ("bins_" + group_name(key) + ".svg"), to_svg(key, t));
  }
}

}  // namespace shipfuse::eval
