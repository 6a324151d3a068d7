#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "shipfuse/kernels.hpp"

using namespace shipfuse;
namespace k = shipfuse::kernels;

namespace
{

const Image & scene()
{
  static const Image img = [] {
    Image out(2000, 2000, 3, 8);
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> d(0, 255);
    for (auto & band : out.bands) {
      for (auto & v : band.data()) {
        v = static_cast<std::uint16_t>(d(rng));
      }
    }
    return out;
  }();
  return img;
}

const Plane<std::uint8_t> & scene_luminance()
{
  static const Plane<std::uint8_t> lum = k::serial::luminance(scene());
  return lum;
}

template <class F>
void run(benchmark::State & state, F && f)
{
  for (auto _ : state) {
    benchmark::DoNotOptimize(f());
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t{scene().width} * scene().height);
}

}  // namespace

#define SHIPFUSE_BENCH_PAIR(name, expr)                                   \
  static void BM_serial_##name(benchmark::State & state)                  \
  {                                                                       \
    using namespace k::serial;                                            \
    run(state, [&] { return expr; });                                     \
  }                                                                       \
  static void BM_parallel_##name(benchmark::State & state)                \
  {                                                                       \
    using namespace k::parallel;                                          \
    run(state, [&] { return expr; });                                     \
  }                                                                       \
  BENCHMARK(BM_serial_##name)->Unit(benchmark::kMillisecond)->UseRealTime(); \
  BENCHMARK(BM_parallel_##name)->Unit(benchmark::kMillisecond)->UseRealTime()

SHIPFUSE_BENCH_PAIR(luminance, luminance(scene()));
SHIPFUSE_BENCH_PAIR(histogram, histogram(scene_luminance()));
SHIPFUSE_BENCH_PAIR(crop_pad, crop_pad(scene(), 1600, 1600, 800));
SHIPFUSE_BENCH_PAIR(resize_half, resize_bilinear(scene(), 1000, 1000));
SHIPFUSE_BENCH_PAIR(rotate_30, rotate_about_center(scene(), std::cos(0.5236), std::sin(0.5236)));
SHIPFUSE_BENCH_PAIR(blur_sigma_2, gaussian_blur(scene(), 2.0));
SHIPFUSE_BENCH_PAIR(stretch, stretch_to_8bit(scene(), std::vector<k::StretchRange>(3, {20, 230})));

BENCHMARK_MAIN();
