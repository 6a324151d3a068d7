#include <cmath>
#include <random>

#include "doctest.h"
#include "shipfuse/error.hpp"
#include "shipfuse/kernels.hpp"

using namespace shipfuse;
namespace k = shipfuse::kernels;

namespace
{

Image random_image(int w, int h, int bands, int depth, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  Image img(w, h, bands, depth);
  std::uniform_int_distribution<int> d(0, (1 << depth) - 1);
  for (auto & band : img.bands) {
    for (auto & v : band.data()) {
      v = static_cast<std::uint16_t>(d(rng));
    }
  }
  return img;
}

}  // namespace

TEST_CASE("parallel kernels agree with the serial reference")
{
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const Image img = random_image(97 + static_cast<int>(seed), 61, seed % 2 ? 3 : 1, seed == 3 ? 16 : 8, seed);
    CAPTURE(seed);
    CHECK(k::serial::luminance(img) == k::parallel::luminance(img));
    CHECK(k::serial::histogram(k::serial::luminance(img)) == k::parallel::histogram(k::serial::luminance(img)));
    CHECK(k::serial::crop_pad(img, -7, 20, 80) == k::parallel::crop_pad(img, -7, 20, 80));
    CHECK(k::serial::crop_pad(img, 300, 300, 10) == k::parallel::crop_pad(img, 300, 300, 10));
    CHECK(k::serial::resize_bilinear(img, 57, 33) == k::parallel::resize_bilinear(img, 57, 33));
    const double t = 0.37 * static_cast<double>(seed);
    CHECK(k::serial::rotate_about_center(img, std::cos(t), std::sin(t)) ==
          k::parallel::rotate_about_center(img, std::cos(t), std::sin(t)));
    CHECK(k::serial::gaussian_blur(img, 0.4) == k::parallel::gaussian_blur(img, 0.4));
    std::vector<k::StretchRange> ranges(img.channels(), k::StretchRange{10, 200});
    CHECK(k::serial::stretch_to_8bit(img, ranges) == k::parallel::stretch_to_8bit(img, ranges));

    Mask mask(img.width, img.height);
    for (std::size_t i = 0; i < mask.data().size(); ++i) {
      mask.data()[i] = img.bands[0].data()[i] & 1;
    }
    const k::PixelRect rect{-3, 5, 50, 400};
    CHECK(k::serial::count_nonzero(mask, rect) == k::parallel::count_nonzero(mask, rect));
  }
}

TEST_CASE("count_nonzero clips to the mask")
{
  Mask m(10, 10, 1);
  CHECK(k::serial::count_nonzero(m, {-5, -5, 3, 4}) == 12);
  CHECK(k::serial::count_nonzero(m, {20, 20, 30, 30}) == 0);
  CHECK(k::serial::count_nonzero(m, {0, 0, 10, 10}) == 100);
}

TEST_CASE("identity rotation and 90 degree rotation are exact")
{
  const Image img = random_image(40, 40, 1, 8, 9);
  CHECK(k::serial::rotate_about_center(img, 1.0, 0.0) == img);
  // Output (x, y) samples source (y, W-1-x) for this quarter turn.
  const Image r = k::serial::rotate_about_center(img, 0.0, 1.0);
  bool exact = true;
  for (int y = 0; y < 40; ++y) {
    for (int x = 0; x < 40; ++x) {
      exact = exact && r.bands[0].at(x, y) == img.bands[0].at(y, 39 - x);
    }
  }
  CHECK(exact);
  const Image back = k::serial::rotate_about_center(r, 0.0, -1.0);
  CHECK(back == img);
}

TEST_CASE("half-scale resize averages 2x2 blocks")
{
  Image img(4, 2, 1);
  const std::uint16_t v[8] = {0, 10, 20, 30, 100, 110, 120, 130};
  for (int i = 0; i < 8; ++i) {
    img.bands[0].data()[i] = v[i];
  }
  const Image half = k::serial::resize_bilinear(img, 2, 1);
  CHECK(half.bands[0].at(0, 0) == 55);
  CHECK(half.bands[0].at(1, 0) == 75);
  CHECK(k::serial::resize_bilinear(img, 4, 2) == img);
}

TEST_CASE("gaussian taps")
{
  CHECK(k::gaussian_taps(0.0) == std::vector<double>{1.0});
  const auto t = k::gaussian_taps(0.5);
  CHECK(t.size() == 5);
  double sum = 0.0;
  for (double x : t) {
    sum += x;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(t[0] == doctest::Approx(std::exp(-8.0) / (std::exp(-8.0) * 2 + std::exp(-2.0) * 2 + 1)));
  CHECK_THROWS_AS(k::gaussian_taps(-1.0), ConfigError);
  const Image img = random_image(20, 20, 2, 8, 4);
  CHECK(k::serial::gaussian_blur(img, 0.0) == img);
  Image flat(15, 15, 1);
  for (auto & x : flat.bands[0].data()) {
    x = 77;
  }
  CHECK(k::serial::gaussian_blur(flat, 0.5) == flat);
}

TEST_CASE("percentile stretch")
{
  Image img(100, 1, 1, 16);
  for (int i = 0; i < 100; ++i) {
    img.bands[0].at(i, 0) = static_cast<std::uint16_t>(1000 + 10 * i);
  }
  const auto r = k::percentile_range(img.bands[0], 0.02, 0.98);
  CHECK(r.lo == 1010);
  CHECK(r.hi == 1970);
  const Image s = k::serial::stretch_to_8bit(img, {r});
  CHECK(s.bit_depth == 8);
  CHECK(s.bands[0].at(0, 0) == 0);
  CHECK(s.bands[0].at(1, 0) == 0);
  CHECK(s.bands[0].at(99, 0) == 255);
  CHECK(s.bands[0].at(50, 0) == 130);  // 490 * 255 / 960 = 130.16
}
