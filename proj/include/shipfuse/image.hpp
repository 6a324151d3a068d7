#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace shipfuse
{

/// Dense row-major single-channel plane.
template <typename T>
class Plane
{
public:
  Plane() = default;
  Plane(int width, int height, T fill = T{})
  : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill)
  {
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }

  T & at(int x, int y)
  {
    assert(x >= 0 && x < width_ && y >= 0 && y < height_);
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  const T & at(int x, int y) const
  {
    assert(x >= 0 && x < width_ && y >= 0 && y < height_);
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  std::span<T> row(int y) { return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)}; }
  std::span<const T> row(int y) const
  {
    return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
  }

  std::vector<T> & data() { return data_; }
  const std::vector<T> & data() const { return data_; }

  bool operator==(const Plane &) const = default;

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using Mask = Plane<std::uint8_t>;

/// Multi-band image with 8- or 16-bit samples held in 16-bit planes.
struct Image
{
  int width = 0;
  int height = 0;
  int bit_depth = 8;
  std::vector<Plane<std::uint16_t>> bands;

  Image() = default;
  Image(int w, int h, int n_bands, int depth = 8)
  : width(w), height(h), bit_depth(depth), bands(n_bands, Plane<std::uint16_t>(w, h))
  {
  }

  int channels() const { return static_cast<int>(bands.size()); }
  bool operator==(const Image &) const = default;
};

}  // namespace shipfuse
