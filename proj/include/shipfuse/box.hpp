#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace shipfuse
{

/// Axis-aligned box in pixel space. A pixel (i, j) spans [i, i+1) x [j, j+1),
/// so `x_max`/`y_max` are exclusive edges.
struct Box
{
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
  bool valid() const { return x_min < x_max && y_min < y_max; }
  double center_x() const { return 0.5 * (x_min + x_max); }
  double center_y() const { return 0.5 * (y_min + y_max); }

  bool contains(double x, double y) const
  {
    return x_min <= x && x <= x_max && y_min <= y && y <= y_max;
  }

  Box translated(double dx, double dy) const
  {
    return {x_min + dx, y_min + dy, x_max + dx, y_max + dy};
  }

  auto operator<=>(const Box &) const = default;
};

/// Overlap area of two boxes; zero when disjoint.
inline double intersection_area(const Box & a, const Box & b)
{
  const double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (w <= 0.0 || h <= 0.0) {
    return 0.0;
  }
  return w * h;
}

inline Box intersect(const Box & a, const Box & b)
{
  return {
    std::max(a.x_min, b.x_min), std::max(a.y_min, b.y_min), std::min(a.x_max, b.x_max),
    std::min(a.y_max, b.y_max)};
}

enum class Curation { Auto, Accepted, Rejected };

std::string_view to_string(Curation c);
Curation curation_from_string(std::string_view s);

/// Weak annotation: a ship-sized box plus the AIS metadata that produced it.
struct AnnotationBox
{
  Box box;
  std::uint32_t mmsi = 0;
  double length_m = 0.0;
  double cloud_fraction = 0.0;
  bool cloud_flagged = false;
  Curation curation = Curation::Auto;
  // Projected AIS position (pixel space); box center unless the box was clipped.
  std::optional<double> center_x;
  std::optional<double> center_y;

  bool operator==(const AnnotationBox &) const = default;
};

}  // namespace shipfuse
