#pragma once

// Per-pixel helpers shared by the serial and OpenMP kernels so both produce
// identical arithmetic.

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "shipfuse/image.hpp"

namespace shipfuse::kernels::detail
{

inline std::uint16_t round_to_sample(double v, int bit_depth)
{
  const double max_value = static_cast<double>((1 << bit_depth) - 1);
  return static_cast<std::uint16_t>(std::clamp(std::floor(v + 0.5), 0.0, max_value));
}

/// Bilinear sample at index-space (u, v) with edge clamping.
inline double sample_clamped(const Plane<std::uint16_t> & p, double u, double v)
{
  u = std::clamp(u, 0.0, static_cast<double>(p.width() - 1));
  v = std::clamp(v, 0.0, static_cast<double>(p.height() - 1));
  const int x0 = static_cast<int>(std::floor(u));
  const int y0 = static_cast<int>(std::floor(v));
  const int x1 = std::min(x0 + 1, p.width() - 1);
  const int y1 = std::min(y0 + 1, p.height() - 1);
  const double fx = u - x0;
  const double fy = v - y0;
  const double top = p.at(x0, y0) * (1 - fx) + p.at(x1, y0) * fx;
  const double bottom = p.at(x0, y1) * (1 - fx) + p.at(x1, y1) * fx;
  return top * (1 - fy) + bottom * fy;
}

/// Bilinear sample at index-space (u, v); samples outside the plane are zero.
inline double sample_zero(const Plane<std::uint16_t> & p, double u, double v)
{
  const double fu = std::floor(u);
  const double fv = std::floor(v);
  if (fu < -1.0 || fv < -1.0 || fu > p.width() || fv > p.height()) {
    return 0.0;
  }
  const int x0 = static_cast<int>(fu);
  const int y0 = static_cast<int>(fv);
  const double fx = u - fu;
  const double fy = v - fv;
  auto px = [&](int x, int y) -> double {
    return (x >= 0 && y >= 0 && x < p.width() && y < p.height()) ? p.at(x, y) : 0.0;
  };
  const double top = px(x0, y0) * (1 - fx) + px(x0 + 1, y0) * fx;
  const double bottom = px(x0, y0 + 1) * (1 - fx) + px(x0 + 1, y0 + 1) * fx;
  return top * (1 - fy) + bottom * fy;
}

inline int clamp_index(int i, int n)
{
  return std::clamp(i, 0, n - 1);
}

inline std::uint8_t luma(std::uint16_t r, std::uint16_t g, std::uint16_t b)
{
  return static_cast<std::uint8_t>(std::min<std::uint32_t>(255, (299u * r + 587u * g + 114u * b + 500u) / 1000u));
}

inline std::uint16_t stretch_sample(std::uint16_t v, std::uint16_t lo, std::uint16_t hi)
{
  if (v <= lo) {
    return 0;
  }
  if (v >= hi) {
    return 255;
  }
  const std::uint64_t span = hi - lo;
  return static_cast<std::uint16_t>(((v - lo) * 510ull + span) / (2 * span));
}

}  // namespace shipfuse::kernels::detail
