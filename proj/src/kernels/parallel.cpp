#include <algorithm>
#include <cmath>

#include "detail.hpp"
#include "shipfuse/error.hpp"
#include "shipfuse/kernels.hpp"

namespace shipfuse::kernels::parallel
{

std::int64_t count_nonzero(const Mask & mask, const PixelRect & rect)
{
  const int x0 = std::max(rect.x0, 0), y0 = std::max(rect.y0, 0);
  const int x1 = std::min(rect.x1, mask.width()), y1 = std::min(rect.y1, mask.height());
  std::int64_t n = 0;
#pragma omp parallel for reduction(+ : n) schedule(static)
  for (int y = y0; y < y1; ++y) {
    const auto row = mask.row(y);
    for (int x = x0; x < x1; ++x) {
      n += row[x] != 0;
    }
  }
  return n;
}

Plane<std::uint8_t> luminance(const Image & image)
{
  Plane<std::uint8_t> out(image.width, image.height);
  const int shift = image.bit_depth > 8 ? image.bit_depth - 8 : 0;
  const int channels = image.channels();
#pragma omp parallel for schedule(static)
  for (int y = 0; y < image.height; ++y) {
    auto dst = out.row(y);
    for (int x = 0; x < image.width; ++x) {
      if (channels >= 3) {
        dst[x] = detail::luma(image.bands[0].at(x, y) >> shift, image.bands[1].at(x, y) >> shift,
                              image.bands[2].at(x, y) >> shift);
      } else if (channels >= 1) {
        dst[x] = static_cast<std::uint8_t>(std::min(255, image.bands[0].at(x, y) >> shift));
      }
    }
  }
  return out;
}

Histogram256 histogram(const Plane<std::uint8_t> & plane)
{
  Histogram256 total{};
  const auto & data = plane.data();
  const auto n = static_cast<std::int64_t>(data.size());
#pragma omp parallel
  {
    Histogram256 local{};
#pragma omp for schedule(static) nowait
    for (std::int64_t i = 0; i < n; ++i) {
      ++local[data[i]];
    }
#pragma omp critical
    for (std::size_t k = 0; k < local.size(); ++k) {
      total[k] += local[k];
    }
  }
  return total;
}

Image crop_pad(const Image & image, int x0, int y0, int size)
{
  Image out(size, size, image.channels(), image.bit_depth);
  const int xs = std::max(0, -x0), xe = std::min(size, image.width - x0);
  for (int b = 0; b < image.channels(); ++b) {
#pragma omp parallel for schedule(static)
    for (int y = 0; y < size; ++y) {
      const int sy = y0 + y;
      if (sy < 0 || sy >= image.height || xe <= xs) {
        continue;
      }
      const auto src = image.bands[b].row(sy);
      auto dst = out.bands[b].row(y);
      std::copy(src.begin() + (x0 + xs), src.begin() + (x0 + xe), dst.begin() + xs);
    }
  }
  return out;
}

Image resize_bilinear(const Image & image, int out_width, int out_height)
{
  Image out(out_width, out_height, image.channels(), image.bit_depth);
  const double rx = static_cast<double>(image.width) / out_width;
  const double ry = static_cast<double>(image.height) / out_height;
  for (int b = 0; b < image.channels(); ++b) {
#pragma omp parallel for schedule(static)
    for (int y = 0; y < out_height; ++y) {
      const double v = (y + 0.5) * ry - 0.5;
      auto dst = out.bands[b].row(y);
      for (int x = 0; x < out_width; ++x) {
        const double u = (x + 0.5) * rx - 0.5;
        dst[x] = detail::round_to_sample(detail::sample_clamped(image.bands[b], u, v), image.bit_depth);
      }
    }
  }
  return out;
}

Image rotate_about_center(const Image & image, double cos_t, double sin_t)
{
  Image out(image.width, image.height, image.channels(), image.bit_depth);
  const double cx = image.width / 2.0, cy = image.height / 2.0;
  for (int b = 0; b < image.channels(); ++b) {
#pragma omp parallel for schedule(static)
    for (int y = 0; y < image.height; ++y) {
      auto dst = out.bands[b].row(y);
      for (int x = 0; x < image.width; ++x) {
        const double px = x + 0.5 - cx, py = y + 0.5 - cy;
        const double u = cx + cos_t * px + sin_t * py - 0.5;
        const double v = cy - sin_t * px + cos_t * py - 0.5;
        dst[x] = detail::round_to_sample(detail::sample_zero(image.bands[b], u, v), image.bit_depth);
      }
    }
  }
  return out;
}

Image gaussian_blur(const Image & image, double sigma)
{
  const std::vector<double> taps = gaussian_taps(sigma);
  const int r = static_cast<int>(taps.size() / 2);
  const int w = image.width, h = image.height;
  Image out(w, h, image.channels(), image.bit_depth);
  std::vector<double> tmp(static_cast<std::size_t>(w) * h);
  for (int b = 0; b < image.channels(); ++b) {
    const auto & src = image.bands[b];
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
      const auto row = src.row(y);
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int k = -r; k <= r; ++k) {
          acc += taps[k + r] * row[detail::clamp_index(x + k, w)];
        }
        tmp[static_cast<std::size_t>(y) * w + x] = acc;
      }
    }
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
      auto dst = out.bands[b].row(y);
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int k = -r; k <= r; ++k) {
          acc += taps[k + r] * tmp[static_cast<std::size_t>(detail::clamp_index(y + k, h)) * w + x];
        }
        dst[x] = detail::round_to_sample(acc, image.bit_depth);
      }
    }
  }
  return out;
}

Image stretch_to_8bit(const Image & image, const std::vector<StretchRange> & ranges)
{
  if (ranges.size() != image.bands.size()) {
    throw ConfigError("stretch needs one range per band");
  }
  Image out(image.width, image.height, image.channels(), 8);
  for (int b = 0; b < image.channels(); ++b) {
    const auto & src = image.bands[b].data();
    auto & dst = out.bands[b].data();
    const auto n = static_cast<std::int64_t>(src.size());
    const StretchRange range = ranges[b];
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      dst[i] = detail::stretch_sample(src[i], range.lo, range.hi);
    }
  }
  return out;
}

}  // namespace shipfuse::kernels::parallel
