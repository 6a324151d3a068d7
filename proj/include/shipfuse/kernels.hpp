#pragma once

// Pixel kernels. Every kernel has a straightforward serial reference in
// `kernels::serial` and an OpenMP version in `kernels::parallel`; the two are
// required to agree bit-for-bit (see tests/test_kernels.cpp, bench/).

#include <array>
#include <cstdint>
#include <vector>

#include "shipfuse/image.hpp"

namespace shipfuse::kernels
{

/// Integer pixel rectangle [x0, x1) x [y0, y1).
struct PixelRect
{
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;
  std::int64_t area() const
  {
    return x1 > x0 && y1 > y0 ? static_cast<std::int64_t>(x1 - x0) * (y1 - y0) : 0;
  }
};

using Histogram256 = std::array<std::uint64_t, 256>;

/// Per-band sample ranges for the 8-bit stretch: samples <= lo map to 0, >= hi to 255.
struct StretchRange
{
  std::uint16_t lo = 0;
  std::uint16_t hi = 255;
};

namespace serial
{
std::int64_t count_nonzero(const Mask & mask, const PixelRect & rect);
Plane<std::uint8_t> luminance(const Image & image);
Histogram256 histogram(const Plane<std::uint8_t> & plane);
Image crop_pad(const Image & image, int x0, int y0, int size);
Image resize_bilinear(const Image & image, int out_width, int out_height);
Image rotate_about_center(const Image & image, double cos_t, double sin_t);
Image gaussian_blur(const Image & image, double sigma);
Image stretch_to_8bit(const Image & image, const std::vector<StretchRange> & ranges);
}  // namespace serial

namespace parallel
{
std::int64_t count_nonzero(const Mask & mask, const PixelRect & rect);
Plane<std::uint8_t> luminance(const Image & image);
Histogram256 histogram(const Plane<std::uint8_t> & plane);
Image crop_pad(const Image & image, int x0, int y0, int size);
Image resize_bilinear(const Image & image, int out_width, int out_height);
Image rotate_about_center(const Image & image, double cos_t, double sin_t);
Image gaussian_blur(const Image & image, double sigma);
Image stretch_to_8bit(const Image & image, const std::vector<StretchRange> & ranges);
}  // namespace parallel

/// Normalized 1-D Gaussian taps, radius ceil(3 sigma); sigma == 0 gives {1}.
std::vector<double> gaussian_taps(double sigma);

/// Percentile bounds of a band (fractions in [0, 1]) from its full histogram.
StretchRange percentile_range(const Plane<std::uint16_t> & band, double lo_fraction, double hi_fraction);

}  // namespace shipfuse::kernels
