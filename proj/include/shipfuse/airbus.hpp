#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <istream>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "shipfuse/box.hpp"
#include "shipfuse/image.hpp"

namespace shipfuse::airbus
{

inline constexpr int kGridSize = 768;
inline constexpr double kMetersPerPixel = 1.5;

/// Run over a column-major, 1-indexed pixel sequence.
struct Run
{
  std::int64_t start = 1;
  std::int64_t length = 1;
  bool operator==(const Run &) const = default;
};

/// Parses "start length start length ..." and checks ordering and bounds.
std::vector<Run> parse_rle(std::string_view text, int width = kGridSize, int height = kGridSize);
Mask decode_rle(std::string_view text, int width = kGridSize, int height = kGridSize);
/// Canonical encoding: ascending, maximal runs.
std::string encode_rle(const Mask & mask);

/// Rotated rectangle in pixel-corner geometry (pixel (i, j) spans [i, i+1) x [j, j+1)).
/// `angle_deg` is the direction of side_a, measured from +x towards +y, in [-45, 45).
struct RotatedRect
{
  double center_x = 0.0;
  double center_y = 0.0;
  double side_a = 0.0;
  double side_b = 0.0;
  double angle_deg = 0.0;

  double length_px() const { return std::max(side_a, side_b); }
  double length_m(double m_per_px = kMetersPerPixel) const { return length_px() * m_per_px; }
  double area() const { return side_a * side_b; }
  std::array<std::pair<double, double>, 4> corners() const;
};

struct IPoint
{
  std::int64_t x = 0;
  std::int64_t y = 0;
  auto operator<=>(const IPoint &) const = default;
};

/// Corner points whose hull equals the hull of all set pixels.
std::vector<IPoint> pixel_corners(const Mask & mask);
std::vector<IPoint> run_corners(const std::vector<Run> & runs, int height = kGridSize);
/// Counter-clockwise (in x-right/y-down axes: clockwise on screen) hull without collinear points.
std::vector<IPoint> convex_hull(std::vector<IPoint> points);

/// Minimum-area enclosing rectangle over hull-edge-aligned candidates; ties go to the smaller |angle|.
RotatedRect min_area_rect(const std::vector<IPoint> & corners);
RotatedRect min_area_rect(const Mask & mask);

/// Largest corner-to-corner distance of the set pixels.
double diameter_px(const std::vector<IPoint> & corners);

/// Tight axis-aligned box of set pixels, exclusive max.
Box fit_bbox(const Mask & mask);
Box fit_bbox(const std::vector<Run> & runs, int height = kGridSize);

struct FilterCounts
{
  std::size_t kept = 0;
  std::size_t dropped = 0;
};

/// Keeps annotations strictly longer than `min_m`.
std::vector<AnnotationBox> filter_by_length(const std::vector<AnnotationBox> & in, double min_m, FilterCounts * counts);

// ---------------------------------------------------------------- Kaggle index

enum class LengthMode { MinAreaRect, Diameter };

struct AirbusAnnotation
{
  std::string image_id;
  AnnotationBox annotation;
  RotatedRect rect;
};

struct IndexSummary
{
  std::size_t rows = 0;
  std::size_t ship_rows = 0;
  std::size_t images_total = 0;
  std::size_t images_kept = 0;       // images with at least one kept annotation
  std::size_t annotations_kept = 0;
  std::size_t bad_rows = 0;
};

struct IndexResult
{
  std::vector<AirbusAnnotation> kept;
  IndexSummary summary;
};

/// Reads an "ImageId,EncodedPixels" index, fits every mask and applies the length filter.
IndexResult process_index(std::istream & csv, double min_length_m = 50.0, double m_per_px = kMetersPerPixel,
                          LengthMode mode = LengthMode::MinAreaRect);

// ---------------------------------------------------------------- augmentation

enum class AugmentKind { Scale, Rotate, Blur };
std::string_view to_string(AugmentKind k);
AugmentKind augment_kind_from_string(std::string_view s);

struct AugmentRanges
{
  double scale_lo = 0.5, scale_hi = 0.7;
  double rotate_lo = -45.0, rotate_hi = 45.0;
  double blur_lo = 0.0, blur_hi = 0.5;
};

struct AugmentSpec
{
  AugmentKind kind = AugmentKind::Scale;
  double value = 1.0;  // scale factor, degrees, or sigma in pixels
};

struct Augmented
{
  Image image;
  std::vector<AnnotationBox> boxes;
  std::size_t dropped = 0;
};

/// Deterministic per-item stream seeded from (global seed, item id).
std::mt19937_64 item_rng(std::uint64_t seed, std::string_view item_id);
/// Uniform in [lo, hi] from the top 53 bits of one draw.
double uniform(std::mt19937_64 & rng, double lo, double hi);
AugmentSpec sample_augment(AugmentKind kind, std::mt19937_64 & rng, const AugmentRanges & ranges = {});

/// Throws ConfigError when the value lies outside the ranges.
Augmented augment(const Image & image, const std::vector<AnnotationBox> & boxes, const AugmentSpec & spec,
                  const AugmentRanges & ranges = {});

/// Exact for multiples of 90 degrees.
std::pair<double, double> cos_sin_deg(double degrees);

/// Axis-aligned hull of a box's corners rotated by `degrees` about (cx, cy),
/// in the same sense as `augment` rotates pixels.
Box rotate_box(const Box & b, double degrees, double cx, double cy);

}  // namespace shipfuse::airbus
