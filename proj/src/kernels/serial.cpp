#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "detail.hpp"
#include "shipfuse/error.hpp"
#include "shipfuse/kernels.hpp"

namespace shipfuse::kernels
{

std::vector<double> gaussian_taps(double sigma)
{
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw ConfigError("gaussian sigma must be finite and >= 0");
  }
  if (sigma == 0.0) {
    return {1.0};
  }
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    taps[k + radius] = std::exp(-0.5 * (k * k) / (sigma * sigma));
    sum += taps[k + radius];
  }
  for (double & t : taps) {
    t /= sum;
  }
  return taps;
}

StretchRange percentile_range(const Plane<std::uint16_t> & band, double lo_fraction, double hi_fraction)
{
  if (band.empty()) {
    return {0, 0};
  }
  std::vector<std::uint64_t> hist(65536, 0);
  for (std::uint16_t v : band.data()) {
    ++hist[v];
  }
  const auto n = static_cast<double>(band.data().size());
  auto value_at = [&](double fraction) {
    const auto target = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(fraction * n)));
    std::uint64_t cumulative = 0;
    for (std::size_t v = 0; v < hist.size(); ++v) {
      cumulative += hist[v];
      if (cumulative >= target) {
        return static_cast<std::uint16_t>(v);
      }
    }
    return static_cast<std::uint16_t>(65535);
  };
  return {value_at(lo_fraction), value_at(hi_fraction)};
}

namespace serial
{

std::int64_t count_nonzero(const Mask & mask, const PixelRect & rect)
{
  const int x0 = std::max(rect.x0, 0), y0 = std::max(rect.y0, 0);
  const int x1 = std::min(rect.x1, mask.width()), y1 = std::min(rect.y1, mask.height());
  std::int64_t n = 0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      n += mask.at(x, y) != 0;
    }
  }
  return n;
}

Plane<std::uint8_t> luminance(const Image & image)
{
  Plane<std::uint8_t> out(image.width, image.height);
  const int shift = image.bit_depth > 8 ? image.bit_depth - 8 : 0;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      if (image.channels() >= 3) {
        out.at(x, y) = detail::luma(image.bands[0].at(x, y) >> shift, image.bands[1].at(x, y) >> shift,
                                    image.bands[2].at(x, y) >> shift);
      } else if (image.channels() >= 1) {
        out.at(x, y) = static_cast<std::uint8_t>(std::min(255, image.bands[0].at(x, y) >> shift));
      }
    }
  }
  return out;
}

Histogram256 histogram(const Plane<std::uint8_t> & plane)
{
  Histogram256 h{};
  for (std::uint8_t v : plane.data()) {
    ++h[v];
  }
  return h;
}

Image crop_pad(const Image & image, int x0, int y0, int size)
{
  Image out(size, size, image.channels(), image.bit_depth);
  for (int b = 0; b < image.channels(); ++b) {
    for (int y = 0; y < size; ++y) {
      const int sy = y0 + y;
      if (sy < 0 || sy >= image.height) {
        continue;
      }
      for (int x = 0; x < size; ++x) {
        const int sx = x0 + x;
        if (sx >= 0 && sx < image.width) {
          out.bands[b].at(x, y) = image.bands[b].at(sx, sy);
        }
      }
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
    for (int y = 0; y < out_height; ++y) {
      const double v = (y + 0.5) * ry - 0.5;
      for (int x = 0; x < out_width; ++x) {
        const double u = (x + 0.5) * rx - 0.5;
        out.bands[b].at(x, y) = detail::round_to_sample(detail::sample_clamped(image.bands[b], u, v), image.bit_depth);
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
    for (int y = 0; y < image.height; ++y) {
      for (int x = 0; x < image.width; ++x) {
        const double px = x + 0.5 - cx, py = y + 0.5 - cy;
        const double u = cx + cos_t * px + sin_t * py - 0.5;
        const double v = cy - sin_t * px + cos_t * py - 0.5;
        out.bands[b].at(x, y) = detail::round_to_sample(detail::sample_zero(image.bands[b], u, v), image.bit_depth);
      }
    }
  }
  return out;
}

Image gaussian_blur(const Image & image, double sigma)
{
  const std::vector<double> taps = gaussian_taps(sigma);
  const int r = static_cast<int>(taps.size() / 2);
  Image out(image.width, image.height, image.channels(), image.bit_depth);
  std::vector<double> tmp(static_cast<std::size_t>(image.width) * image.height);
  for (int b = 0; b < image.channels(); ++b) {
    const auto & src = image.bands[b];
    for (int y = 0; y < image.height; ++y) {
      for (int x = 0; x < image.width; ++x) {
        double acc = 0.0;
        for (int k = -r; k <= r; ++k) {
          acc += taps[k + r] * src.at(detail::clamp_index(x + k, image.width), y);
        }
        tmp[static_cast<std::size_t>(y) * image.width + x] = acc;
      }
    }
    for (int y = 0; y < image.height; ++y) {
      for (int x = 0; x < image.width; ++x) {
        double acc = 0.0;
        for (int k = -r; k <= r; ++k) {
          acc += taps[k + r] * tmp[static_cast<std::size_t>(detail::clamp_index(y + k, image.height)) * image.width + x];
        }
        out.bands[b].at(x, y) = detail::round_to_sample(acc, image.bit_depth);
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
    for (std::size_t i = 0; i < src.size(); ++i) {
      dst[i] = detail::stretch_sample(src[i], ranges[b].lo, ranges[b].hi);
    }
  }
  return out;
}

}  // namespace serial
}  // namespace shipfuse::kernels
