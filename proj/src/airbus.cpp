#include "shipfuse/airbus.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include "shipfuse/csv.hpp"
#include "shipfuse/error.hpp"
#include "shipfuse/kernels.hpp"

namespace shipfuse::airbus
{

// ---------------------------------------------------------------- RLE

std::vector<Run> parse_rle(std::string_view text, int width, int height)
{
  std::vector<std::int64_t> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
    if (i == text.size()) {
      break;
    }
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) {
      ++j;
    }
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + j, v);
    if (ec != std::errc() || ptr != text.data() + j) {
      throw RleError("RLE token is not an integer: " + std::string(text.substr(i, j - i)));
    }
    if (v <= 0) {
      throw RleError("RLE tokens must be positive");
    }
    tokens.push_back(v);
    i = j;
  }
  if (tokens.size() % 2 != 0) {
    throw RleError("RLE has an odd number of tokens");
  }
  const std::int64_t total = static_cast<std::int64_t>(width) * height;
  std::vector<Run> runs;
  runs.reserve(tokens.size() / 2);
  std::int64_t next_free = 1;
  for (std::size_t k = 0; k < tokens.size(); k += 2) {
    const Run r{tokens[k], tokens[k + 1]};
    if (r.start < next_free) {
      throw RleError("RLE runs overlap or are out of order at start " + std::to_string(r.start));
    }
    if (r.start + r.length - 1 > total) {
      throw RleError("RLE run exceeds the " + std::to_string(width) + "x" + std::to_string(height) + " grid");
    }
    next_free = r.start + r.length;
    runs.push_back(r);
  }
  return runs;
}

Mask decode_rle(std::string_view text, int width, int height)
{
  Mask m(width, height, 0);
  for (const Run & r : parse_rle(text, width, height)) {
    for (std::int64_t p = r.start - 1; p < r.start - 1 + r.length; ++p) {
      m.at(static_cast<int>(p / height), static_cast<int>(p % height)) = 1;
    }
  }
  return m;
}

std::string encode_rle(const Mask & mask)
{
  std::string out;
  std::int64_t run_start = -1;
  std::int64_t p = 0;
  auto flush = [&](std::int64_t end) {
    if (run_start >= 0) {
      if (!out.empty()) {
        out += ' ';
      }
      out += std::to_string(run_start + 1) + ' ' + std::to_string(end - run_start);
      run_start = -1;
    }
  };
  for (int x = 0; x < mask.width(); ++x) {
    for (int y = 0; y < mask.height(); ++y, ++p) {
      if (mask.at(x, y)) {
        if (run_start < 0) {
          run_start = p;
        }
      } else {
        flush(p);
      }
    }
  }
  flush(p);
  return out;
}

// ---------------------------------------------------------------- geometry

std::array<std::pair<double, double>, 4> RotatedRect::corners() const
{
  const double t = angle_deg * std::numbers::pi / 180.0;
  const double ux = std::cos(t), uy = std::sin(t);
  const double ha = side_a / 2.0, hb = side_b / 2.0;
  return {{
    {center_x - ha * ux + hb * uy, center_y - ha * uy - hb * ux},
    {center_x + ha * ux + hb * uy, center_y + ha * uy - hb * ux},
    {center_x + ha * ux - hb * uy, center_y + ha * uy + hb * ux},
    {center_x - ha * ux - hb * uy, center_y - ha * uy + hb * ux},
  }};
}

std::vector<IPoint> pixel_corners(const Mask & mask)
{
  std::vector<IPoint> pts;
  for (int x = 0; x < mask.width(); ++x) {
    int y = 0;
    while (y < mask.height()) {
      if (!mask.at(x, y)) {
        ++y;
        continue;
      }
      const int y0 = y;
      while (y < mask.height() && mask.at(x, y)) {
        ++y;
      }
      pts.push_back({x, y0});
      pts.push_back({x + 1, y0});
      pts.push_back({x, y});
      pts.push_back({x + 1, y});
    }
  }
  return pts;
}

std::vector<IPoint> run_corners(const std::vector<Run> & runs, int height)
{
  std::vector<IPoint> pts;
  for (const Run & r : runs) {
    std::int64_t p = r.start - 1;
    const std::int64_t end = r.start - 1 + r.length;
    while (p < end) {
      const std::int64_t col = p / height;
      const std::int64_t row0 = p % height;
      const std::int64_t seg_end = std::min(end, (col + 1) * height);
      const std::int64_t row1 = row0 + (seg_end - p);
      pts.push_back({col, row0});
      pts.push_back({col + 1, row0});
      pts.push_back({col, row1});
      pts.push_back({col + 1, row1});
      p = seg_end;
    }
  }
  return pts;
}

namespace
{

__int128 cross(const IPoint & o, const IPoint & a, const IPoint & b)
{
  return static_cast<__int128>(a.x - o.x) * (b.y - o.y) - static_cast<__int128>(a.y - o.y) * (b.x - o.x);
}

}  // namespace

std::vector<IPoint> convex_hull(std::vector<IPoint> p)
{
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
  if (p.size() < 3) {
    return p;
  }
  std::vector<IPoint> h(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p[i]) <= 0) {
      --k;
    }
    h[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, lower = k + 1; i > 0; --i) {
    while (k >= lower && cross(h[k - 2], h[k - 1], p[i - 1]) <= 0) {
      --k;
    }
    h[k++] = p[i - 1];
  }
  h.resize(k - 1);
  return h;
}

RotatedRect min_area_rect(const std::vector<IPoint> & corners)
{
  const std::vector<IPoint> h = convex_hull(corners);
  if (h.size() < 3) {
    throw EmptyMask();
  }
  struct Candidate
  {
    __int128 num = -1;  // extent_u * extent_v, area = num / den
    __int128 den = 1;
    RotatedRect rect;
  };
  Candidate best;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const IPoint & a = h[i];
    const IPoint & b = h[(i + 1) % h.size()];
    const std::int64_t ex = b.x - a.x, ey = b.y - a.y;
    __int128 u_lo = 0, u_hi = 0, v_lo = 0, v_hi = 0;
    bool first = true;
    for (const IPoint & p : h) {
      const __int128 u = static_cast<__int128>(p.x) * ex + static_cast<__int128>(p.y) * ey;
      const __int128 v = static_cast<__int128>(ex) * p.y - static_cast<__int128>(ey) * p.x;
      if (first) {
        u_lo = u_hi = u;
        v_lo = v_hi = v;
        first = false;
      } else {
        u_lo = std::min(u_lo, u), u_hi = std::max(u_hi, u);
        v_lo = std::min(v_lo, v), v_hi = std::max(v_hi, v);
      }
    }
    const __int128 den = static_cast<__int128>(ex) * ex + static_cast<__int128>(ey) * ey;
    const __int128 num = (u_hi - u_lo) * (v_hi - v_lo);

    const double len = std::sqrt(static_cast<double>(den));
    RotatedRect r;
    r.side_a = static_cast<double>(u_hi - u_lo) / len;
    r.side_b = static_cast<double>(v_hi - v_lo) / len;
    const double um = static_cast<double>(u_hi + u_lo) / 2.0, vm = static_cast<double>(v_hi + v_lo) / 2.0;
    const double d2 = static_cast<double>(den);
    r.center_x = (um * ex - vm * ey) / d2;
    r.center_y = (um * ey + vm * ex) / d2;
    double angle = std::atan2(static_cast<double>(ey), static_cast<double>(ex)) * 180.0 / std::numbers::pi;
    while (angle >= 45.0) {
      angle -= 90.0;
      std::swap(r.side_a, r.side_b);
    }
    while (angle < -45.0) {
      angle += 90.0;
      std::swap(r.side_a, r.side_b);
    }
    r.angle_deg = angle;

    if (best.num < 0) {
      best = {num, den, r};
      continue;
    }
    const __int128 lhs = num * best.den, rhs = best.num * den;
    if (lhs < rhs || (lhs == rhs && std::abs(r.angle_deg) < std::abs(best.rect.angle_deg))) {
      best = {num, den, r};
    }
  }
  return best.rect;
}

RotatedRect min_area_rect(const Mask & mask)
{
  return min_area_rect(pixel_corners(mask));
}

double diameter_px(const std::vector<IPoint> & corners)
{
  const std::vector<IPoint> h = convex_hull(corners);
  if (h.empty()) {
    throw EmptyMask();
  }
  std::int64_t best = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    for (std::size_t j = i + 1; j < h.size(); ++j) {
      const std::int64_t dx = h[i].x - h[j].x, dy = h[i].y - h[j].y;
      best = std::max(best, dx * dx + dy * dy);
    }
  }
  return std::sqrt(static_cast<double>(best));
}

Box fit_bbox(const Mask & mask)
{
  int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y)) {
        x0 = std::min(x0, x), y0 = std::min(y0, y), x1 = std::max(x1, x), y1 = std::max(y1, y);
      }
    }
  }
  if (x1 < 0) {
    throw EmptyMask();
  }
  return {double(x0), double(y0), double(x1 + 1), double(y1 + 1)};
}

Box fit_bbox(const std::vector<Run> & runs, int height)
{
  const auto pts = run_corners(runs, height);
  if (pts.empty()) {
    throw EmptyMask();
  }
  Box b{double(pts[0].x), double(pts[0].y), double(pts[0].x), double(pts[0].y)};
  for (const IPoint & p : pts) {
    b.x_min = std::min(b.x_min, double(p.x)), b.y_min = std::min(b.y_min, double(p.y));
    b.x_max = std::max(b.x_max, double(p.x)), b.y_max = std::max(b.y_max, double(p.y));
  }
  return b;
}

std::vector<AnnotationBox> filter_by_length(const std::vector<AnnotationBox> & in, double min_m, FilterCounts * counts)
{
  std::vector<AnnotationBox> out;
  FilterCounts c;
  for (const AnnotationBox & a : in) {
    if (a.length_m > min_m) {
      out.push_back(a);
      ++c.kept;
    } else {
      ++c.dropped;
    }
  }
  if (counts) {
    *counts = c;
  }
  return out;
}

// ---------------------------------------------------------------- Kaggle index

IndexResult process_index(std::istream & csv, double min_length_m, double m_per_px, LengthMode mode)
{
  IndexResult out;
  std::string line;
  if (!std::getline(csv, line)) {
    return out;
  }
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  const auto header = split_csv_line(line);
  int id_col = -1, rle_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string h = to_lower(trim(header[i]));
    if (h == "imageid") {
      id_col = static_cast<int>(i);
    } else if (h == "encodedpixels") {
      rle_col = static_cast<int>(i);
    }
  }
  if (id_col < 0 || rle_col < 0) {
    throw ConfigError("Airbus index needs ImageId and EncodedPixels columns");
  }
  std::unordered_map<std::string, bool> images;  // image id -> has a kept annotation
  while (std::getline(csv, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (trim(line).empty()) {
      continue;
    }
    ++out.summary.rows;
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) <= std::max(id_col, rle_col)) {
      ++out.summary.bad_rows;
      continue;
    }
    const std::string id(trim(fields[id_col]));
    auto [it, inserted] = images.try_emplace(id, false);
    const std::string_view rle = trim(fields[rle_col]);
    if (rle.empty()) {
      continue;
    }
    ++out.summary.ship_rows;
    try {
      const auto runs = parse_rle(rle);
      const auto corners = run_corners(runs);
      const RotatedRect rect = min_area_rect(corners);
      const double len_px = mode == LengthMode::MinAreaRect ? rect.length_px() : diameter_px(corners);
      const double length_m = len_px * m_per_px;
      if (!(length_m > min_length_m)) {
        continue;
      }
      AirbusAnnotation a;
      a.image_id = id;
      a.rect = rect;
      a.annotation.box = fit_bbox(runs);
      a.annotation.length_m = length_m;
      out.kept.push_back(std::move(a));
      it->second = true;
    } catch (const Error &) {
      ++out.summary.bad_rows;
    }
  }
  out.summary.images_total = images.size();
  out.summary.annotations_kept = out.kept.size();
  out.summary.images_kept =
    static_cast<std::size_t>(std::count_if(images.begin(), images.end(), [](const auto & kv) { return kv.second; }));
  return out;
}

// ---------------------------------------------------------------- augmentation

std::string_view to_string(AugmentKind k)
{
  switch (k) {
    case AugmentKind::Rotate:
      return "rotate";
    case AugmentKind::Blur:
      return "blur";
    case AugmentKind::Scale:
      break;
  }
  return "scale";
}

AugmentKind augment_kind_from_string(std::string_view s)
{
  if (s == "scale") {
    return AugmentKind::Scale;
  }
  if (s == "rotate") {
    return AugmentKind::Rotate;
  }
  if (s == "blur") {
    return AugmentKind::Blur;
  }
  throw ConfigError("unknown augmentation: " + std::string(s));
}

namespace
{

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s)
{
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

std::mt19937_64 item_rng(std::uint64_t seed, std::string_view item_id)
{
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ fnv1a(item_id)));
}

double uniform(std::mt19937_64 & rng, double lo, double hi)
{
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

AugmentSpec sample_augment(AugmentKind kind, std::mt19937_64 & rng, const AugmentRanges & r)
{
  switch (kind) {
    case AugmentKind::Scale:
      return {kind, uniform(rng, r.scale_lo, r.scale_hi)};
    case AugmentKind::Rotate:
      return {kind, uniform(rng, r.rotate_lo, r.rotate_hi)};
    case AugmentKind::Blur:
      return {kind, uniform(rng, r.blur_lo, r.blur_hi)};
  }
  throw ConfigError("unknown augmentation kind");
}

std::pair<double, double> cos_sin_deg(double degrees)
{
  const double q = degrees / 90.0;
  if (q == std::floor(q) && std::abs(q) < 1e15) {
    switch (((static_cast<long long>(q) % 4) + 4) % 4) {
      case 0:
        return {1.0, 0.0};
      case 1:
        return {0.0, 1.0};
      case 2:
        return {-1.0, 0.0};
      default:
        return {0.0, -1.0};
    }
  }
  const double t = degrees * std::numbers::pi / 180.0;
  return {std::cos(t), std::sin(t)};
}

Box rotate_box(const Box & b, double degrees, double cx, double cy)
{
  const auto [c, s] = cos_sin_deg(degrees);
  const double xs[4] = {b.x_min, b.x_max, b.x_max, b.x_min};
  const double ys[4] = {b.y_min, b.y_min, b.y_max, b.y_max};
  Box out{1e300, 1e300, -1e300, -1e300};
  for (int i = 0; i < 4; ++i) {
    const double dx = xs[i] - cx, dy = ys[i] - cy;
    const double x = cx + c * dx - s * dy;
    const double y = cy + s * dx + c * dy;
    out.x_min = std::min(out.x_min, x), out.x_max = std::max(out.x_max, x);
    out.y_min = std::min(out.y_min, y), out.y_max = std::max(out.y_max, y);
  }
  return out;
}

Augmented augment(const Image & image, const std::vector<AnnotationBox> & boxes, const AugmentSpec & spec,
                  const AugmentRanges & ranges)
{
  auto check = [&](double lo, double hi, const char * what) {
    if (!(spec.value >= lo && spec.value <= hi)) {
      throw ConfigError(std::string(what) + " " + std::to_string(spec.value) + " outside [" + std::to_string(lo) +
                        ", " + std::to_string(hi) + "]");
    }
  };
  Augmented out;
  switch (spec.kind) {
    case AugmentKind::Scale: {
      check(ranges.scale_lo, ranges.scale_hi, "scale");
      const int w = std::max(1, static_cast<int>(std::lround(image.width * spec.value)));
      const int h = std::max(1, static_cast<int>(std::lround(image.height * spec.value)));
      out.image = kernels::parallel::resize_bilinear(image, w, h);
      const double fx = static_cast<double>(w) / image.width, fy = static_cast<double>(h) / image.height;
      for (AnnotationBox a : boxes) {
        a.box = {a.box.x_min * fx, a.box.y_min * fy, a.box.x_max * fx, a.box.y_max * fy};
        if (a.center_x) {
          *a.center_x *= fx;
        }
        if (a.center_y) {
          *a.center_y *= fy;
        }
        out.boxes.push_back(a);
      }
      break;
    }
    case AugmentKind::Rotate: {
      check(ranges.rotate_lo, ranges.rotate_hi, "rotation");
      const auto [c, s] = cos_sin_deg(spec.value);
      out.image = kernels::parallel::rotate_about_center(image, c, s);
      const double cx = image.width / 2.0, cy = image.height / 2.0;
      const Box frame{0.0, 0.0, double(image.width), double(image.height)};
      for (AnnotationBox a : boxes) {
        const Box r = rotate_box(a.box, spec.value, cx, cy);
        if (intersection_area(r, frame) < 0.5 * r.area()) {
          ++out.dropped;
          continue;
        }
        a.box = intersect(r, frame);
        if (a.center_x && a.center_y) {
          const double dx = *a.center_x - cx, dy = *a.center_y - cy;
          a.center_x = cx + c * dx - s * dy;
          a.center_y = cy + s * dx + c * dy;
        }
        out.boxes.push_back(a);
      }
      break;
    }
    case AugmentKind::Blur:
      check(ranges.blur_lo, ranges.blur_hi, "blur sigma");
      out.image = kernels::parallel::gaussian_blur(image, spec.value);
      out.boxes = boxes;
      break;
  }
  return out;
}

}  // namespace shipfuse::airbus
