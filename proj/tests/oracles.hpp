#pragma once

// Brute-force reference implementations shared by the unit tests and the
// acceptance run. They are deliberately naive and share no code with the
// library beyond its value types.

#include <algorithm>
#include <cmath>
#include <random>
#include <tuple>
#include <utility>
#include <vector>

#include "shipfuse/box.hpp"
#include "shipfuse/detect.hpp"
#include "shipfuse/image.hpp"
#include "shipfuse/raster.hpp"

namespace testing_support
{

struct RectOracle
{
  double area;
  double side_u, side_v;
};

// Tries every direction defined by a pair of set-pixel corners.
inline RectOracle brute_min_rect(const shipfuse::Mask & m)
{
  std::vector<std::pair<double, double>> pts;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (m.at(x, y)) {
        pts.push_back({double(x), double(y)});
        pts.push_back({double(x + 1), double(y)});
        pts.push_back({double(x), double(y + 1)});
        pts.push_back({double(x + 1), double(y + 1)});
      }
    }
  }
  RectOracle best{1e300, 0, 0};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      double ex = pts[j].first - pts[i].first, ey = pts[j].second - pts[i].second;
      const double n = std::hypot(ex, ey);
      if (n == 0) {
        continue;
      }
      ex /= n, ey /= n;
      double u0 = 1e300, u1 = -1e300, v0 = 1e300, v1 = -1e300;
      for (auto [x, y] : pts) {
        const double u = x * ex + y * ey, v = -x * ey + y * ex;
        u0 = std::min(u0, u), u1 = std::max(u1, u), v0 = std::min(v0, v), v1 = std::max(v1, v);
      }
      const double area = (u1 - u0) * (v1 - v0);
      if (area < best.area) {
        best = {area, u1 - u0, v1 - v0};
      }
    }
  }
  return best;
}

inline shipfuse::Mask random_blob(std::mt19937_64 & rng, int size)
{
  shipfuse::Mask m(size, size, 0);
  std::uniform_int_distribution<int> d(0, size - 1);
  const int n = std::uniform_int_distribution<int>(1, 6)(rng);
  for (int i = 0; i < n; ++i) {
    m.at(d(rng), d(rng)) = 1;
  }
  return m;
}

inline double brute_cloud_fraction(const shipfuse::Box & b, const shipfuse::Mask & m)
{
  const int x0 = std::max(0, static_cast<int>(std::lround(std::clamp(b.x_min, 0.0, double(m.width())))));
  const int x1 = std::min(m.width(), static_cast<int>(std::lround(std::clamp(b.x_max, 0.0, double(m.width())))));
  const int y0 = std::max(0, static_cast<int>(std::lround(std::clamp(b.y_min, 0.0, double(m.height())))));
  const int y1 = std::min(m.height(), static_cast<int>(std::lround(std::clamp(b.y_max, 0.0, double(m.height())))));
  long cloudy = 0, total = 0;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (x >= x0 && x < x1 && y >= y0 && y < y1) {
        ++total;
        cloudy += m.at(x, y) ? 1 : 0;
      }
    }
  }
  return total == 0 ? 1.0 : double(cloudy) / double(total);
}

// Andrew's monotone chain; returns counter-clockwise hull.
inline std::vector<std::pair<double, double>> hull(std::vector<std::pair<double, double>> p)
{
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
  if (p.size() < 3) {
    return p;
  }
  auto cross = [](auto o, auto a, auto b) {
    return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
  };
  std::vector<std::pair<double, double>> h(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(h[k - 2], h[k - 1], p[i - 1]) <= 0) --k;
    h[k++] = p[i - 1];
  }
  h.resize(k - 1);
  return h;
}

/// True when (x, y) lies in the closed region of the points' hull (degenerate hulls use the bounding box).
inline bool in_hull(const std::vector<std::pair<double, double>> & pts, double x, double y)
{
  const auto h = hull(pts);
  if (h.size() < 3) {
    double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
    for (auto [px, py] : pts) {
      lo_x = std::min(lo_x, px), hi_x = std::max(hi_x, px), lo_y = std::min(lo_y, py), hi_y = std::max(hi_y, py);
    }
    return x >= lo_x - 1e-12 && x <= hi_x + 1e-12 && y >= lo_y - 1e-12 && y <= hi_y + 1e-12;
  }
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto a = h[i], b = h[(i + 1) % h.size()];
    if ((b.first - a.first) * (y - a.second) - (b.second - a.second) * (x - a.first) < -1e-15) {
      return false;
    }
  }
  return true;
}

// Independent coverage check: paint every planned tile into a boolean grid.
inline bool covers_exactly(int w, int h, const std::vector<shipfuse::raster::Origin> & plan, int size)
{
  std::vector<char> hit(static_cast<std::size_t>(w) * h, 0);
  for (const auto & o : plan) {
    if (o.x < 0 || o.y < 0) {
      return false;
    }
    if ((w >= size && o.x + size > w) || (h >= size && o.y + size > h)) {
      return false;
    }
    for (int y = o.y; y < std::min(h, o.y + size); ++y) {
      for (int x = o.x; x < std::min(w, o.x + size); ++x) {
        hit[static_cast<std::size_t>(y) * w + x] = 1;
      }
    }
  }
  return std::all_of(hit.begin(), hit.end(), [](char c) { return c == 1; });
}

// Repeatedly picks the best remaining box by a full scan and drops its overlaps.
inline std::vector<shipfuse::detect::Detection> brute_nms(std::vector<shipfuse::detect::Detection> d, double thr,
                                                          double floor)
{
  using shipfuse::Box;
  using shipfuse::detect::Detection;
  std::vector<Detection> pool;
  for (const auto & x : d) {
    if (!(x.confidence < floor)) {
      pool.push_back(x);
    }
  }
  std::vector<Detection> out;
  while (!pool.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pool.size(); ++i) {
      const auto & a = pool[i];
      const auto & b = pool[best];
      const double aa = (a.box.x_max - a.box.x_min) * (a.box.y_max - a.box.y_min);
      const double ba = (b.box.x_max - b.box.x_min) * (b.box.y_max - b.box.y_min);
      const auto ka = std::make_tuple(-a.confidence, -aa, a.box.x_min, a.box.y_min, a.box.x_max, a.box.y_max);
      const auto kb = std::make_tuple(-b.confidence, -ba, b.box.x_min, b.box.y_min, b.box.x_max, b.box.y_max);
      if (ka < kb) {
        best = i;
      }
    }
    const Detection head = pool[best];
    out.push_back(head);
    std::vector<Detection> rest;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (i == best) {
        continue;
      }
      const Box & a = head.box;
      const Box & b = pool[i].box;
      const double iw = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
      const double ih = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
      const double inter = iw * ih;
      const double u = a.area() + b.area() - inter;
      if (!(u > 0 && inter / u > thr)) {
        rest.push_back(pool[i]);
      }
    }
    pool = rest;
  }
  return out;
}

inline std::vector<shipfuse::detect::Detection> random_nms_scene(std::mt19937_64 & rng)
{
  std::uniform_int_distribution<int> n_d(0, 50), pos(0, 60), size(1, 25), conf_step(0, 20);
  std::vector<shipfuse::detect::Detection> d(n_d(rng));
  for (auto & x : d) {
    const double x0 = pos(rng), y0 = pos(rng);
    x.box = {x0, y0, x0 + size(rng), y0 + size(rng)};
    x.confidence = conf_step(rng) / 20.0;  // coarse steps force ties
  }
  return d;
}

}  // namespace testing_support
