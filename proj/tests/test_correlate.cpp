#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "shipfuse/annotation_json.hpp"
#include "shipfuse/correlate.hpp"
#include "shipfuse/error.hpp"
#include "synthetic_scene.hpp"

using namespace shipfuse;
using namespace shipfuse::correlate;
using testing_support::kSceneTime;

namespace
{

ais::AisRecord report(std::uint32_t mmsi, std::int64_t dt, double lat, double lon, int status, double length)
{
  ais::AisRecord r;
  r.mmsi = mmsi;
  r.timestamp = kSceneTime + dt;
  r.lat = lat;
  r.lon = lon;
  r.nav_status = status;
  r.length_m = length;
  return r;
}

}  // namespace

TEST_CASE("stationary selection averages in-window reports")
{
  const std::vector<ais::AisRecord> rs = {
    report(367123456, -60, 37.79550, -122.28010, 5, 294),
    report(367123456, 0, 37.79551, -122.28011, 5, 294),
    report(367123456, 60, 37.79552, -122.28012, 5, 294),
  };
  const Selection s = select_stationary(rs, kSceneTime);
  REQUIRE(s.observations.size() == 1);
  const auto & o = s.observations[0];
  CHECK(o.n_reports == 3);
  CHECK(o.mean_lat == doctest::Approx(37.79551).epsilon(1e-12));
  CHECK(o.mean_lon == doctest::Approx(-122.28011).epsilon(1e-12));
  CHECK(o.length_m == 294);
  CHECK(o.nav_status == 5);
  CHECK(o.t_start == kSceneTime - 60);
  CHECK(o.t_end == kSceneTime + 60);
  CHECK(s.warnings.empty());
}

TEST_CASE("stationary selection exclusion rules")
{
  CHECK(select_stationary(std::vector{report(1, 0, 10, 10, 0, 200)}, kSceneTime).observations.empty());
  CHECK(select_stationary(std::vector{report(1, 0, 10, 10, 1, 25)}, kSceneTime).observations.empty());
  CHECK(select_stationary(std::vector{report(1, 0, 10, 10, 1, 30)}, kSceneTime).observations.empty());
  CHECK(select_stationary(std::vector{report(1, 0, 10, 10, 1, 30.5)}, kSceneTime).observations.size() == 1);
  CHECK(select_stationary(std::vector{report(1, 200, 10, 10, 5, 200)}, kSceneTime).observations.empty());
  CHECK(select_stationary(std::vector{report(1, 150, 10, 10, 5, 200)}, kSceneTime).observations.size() == 1);
  CHECK(select_stationary(std::vector{report(1, -150, 10, 10, 5, 200)}, kSceneTime).observations.size() == 1);
  CHECK(select_stationary(std::vector{report(1, -151, 10, 10, 5, 200)}, kSceneTime).observations.empty());
  // Sailing (8) is kept by default and excludable through config.
  CHECK(select_stationary(std::vector{report(1, 0, 10, 10, 8, 200)}, kSceneTime).observations.size() == 1);
  Params p;
  p.excluded_status = {0, 8};
  CHECK(select_stationary(std::vector{report(1, 0, 10, 10, 8, 200)}, kSceneTime, p).observations.empty());

  const std::vector mixed = {report(7, -10, 10, 10, 5, 200), report(7, 10, 10, 10, 0, 200)};
  const Selection s = select_stationary(mixed, kSceneTime);
  CHECK(s.observations.empty());
  CHECK(s.dropped_mixed_status == 1);

  auto no_len = report(9, 0, 10, 10, 5, 0);
  no_len.length_m.reset();
  CHECK(select_stationary(std::vector{no_len}, kSceneTime).observations.empty());
  CHECK(select_stationary(std::vector<ais::AisRecord>{}, kSceneTime).observations.empty());

  // Spread warning: 0.01 deg latitude is ~1.1 km, far beyond 2x 200 m.
  const std::vector drift = {report(5, -10, 10.0, 10, 5, 200), report(5, 10, 10.01, 10, 5, 200)};
  CHECK(select_stationary(drift, kSceneTime).warnings.size() == 1);
}

TEST_CASE("selection properties on random report clusters")
{
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> n_d(1, 8), mmsi_d(1, 4), dt_d(-400, 400), status_d(0, 15);
  std::uniform_real_distribution<double> jitter(-1e-3, 1e-3), len_d(10, 400);
  int in_hull_checks = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<ais::AisRecord> rs;
    const int n = n_d(rng) * 3;
    const double lat0 = 40 + jitter(rng) * 1000, lon0 = -70 + jitter(rng) * 1000;
    const double len = len_d(rng);
    for (int i = 0; i < n; ++i) {
      const std::uint32_t m = mmsi_d(rng);
      rs.push_back(report(m, dt_d(rng), lat0 + jitter(rng), lon0 + jitter(rng), status_d(rng) % 8 == 0 ? 0 : 5, len));
    }
    const Selection s = select_stationary(rs, kSceneTime);
    std::set<std::uint32_t> in_window;
    for (const auto & r : rs) {
      if (std::abs(r.timestamp - kSceneTime) <= 150) {
        in_window.insert(r.mmsi);
      }
    }
    CHECK(s.observations.size() <= in_window.size());
    std::set<std::uint32_t> seen;
    for (const auto & o : s.observations) {
      CHECK(seen.insert(o.mmsi).second);
      CHECK(o.n_reports >= 1);
      CHECK(o.nav_status != 0);
      CHECK(o.length_m > 30);
      std::vector<std::pair<double, double>> pts;
      for (const auto & r : rs) {
        if (r.mmsi == o.mmsi && std::abs(r.timestamp - kSceneTime) <= 150) {
          CHECK(r.nav_status != 0);
          pts.push_back({r.lon, r.lat});
        }
      }
      REQUIRE(static_cast<int>(pts.size()) == o.n_reports);
      const auto h = testing_support::hull(pts);
      if (h.size() >= 3) {
        bool inside = true;
        for (std::size_t i = 0; i < h.size(); ++i) {
          const auto a = h[i], b = h[(i + 1) % h.size()];
          const double cr = (b.first - a.first) * (o.mean_lat - a.second) - (b.second - a.second) * (o.mean_lon - a.first);
          inside = inside && cr >= -1e-15;
        }
        CHECK(inside);
        ++in_hull_checks;
      } else {
        double lo_x = 1e9, hi_x = -1e9, lo_y = 1e9, hi_y = -1e9;
        for (auto [x, y] : pts) {
          lo_x = std::min(lo_x, x), hi_x = std::max(hi_x, x), lo_y = std::min(lo_y, y), hi_y = std::max(hi_y, y);
        }
        CHECK(o.mean_lon >= lo_x - 1e-12);
        CHECK(o.mean_lon <= hi_x + 1e-12);
        CHECK(o.mean_lat >= lo_y - 1e-12);
        CHECK(o.mean_lat <= hi_y + 1e-12);
      }
    }
  }
  CHECK(in_hull_checks > 100);
}

TEST_CASE("make_box sizes, clipping and off-image")
{
  const geo::GeoRef g3 = testing_support::scene_georef(3.0);
  ShipObservation o;
  o.mmsi = 1;
  o.length_m = 300;
  const auto ll = geo::pixel_to_geo(g3, 400, 400);
  o.mean_lat = ll.lat;
  o.mean_lon = ll.lon;
  const AnnotationBox b = make_box(o, g3, 3.0, 1.0, 800, 800);
  CHECK(b.box.width() == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(b.box.height() == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(b.box.center_x() == doctest::Approx(400.0).epsilon(1e-9));
  const geo::GeoRef g10 = testing_support::scene_georef(10.0);
  const auto ll10 = geo::pixel_to_geo(g10, 400, 400);
  o.mean_lat = ll10.lat;
  o.mean_lon = ll10.lon;
  const AnnotationBox v = make_box(o, g10, 10.0, 2.0, 800, 800);
  CHECK(v.box.width() == doctest::Approx(60.0).epsilon(1e-9));

  // Centre at (10,10) with a half-width of 100 px is clipped at 0 but kept.
  o.length_m = 600;
  const auto corner = geo::pixel_to_geo(g3, 10, 10);
  o.mean_lat = corner.lat;
  o.mean_lon = corner.lon;
  const AnnotationBox c = make_box(o, g3, 3.0, 1.0, 800, 800);
  CHECK(c.box.x_min == 0.0);
  CHECK(c.box.y_min == 0.0);
  CHECK(c.box.x_max == doctest::Approx(110.0).epsilon(1e-9));
  CHECK(*c.center_x == doctest::Approx(10.0).epsilon(1e-9));

  const auto far = geo::pixel_to_geo(g3, -150, 400);
  o.mean_lat = far.lat;
  o.mean_lon = far.lon;
  CHECK_THROWS_AS(make_box(o, g3, 3.0, 1.0, 800, 800), OffImage);
  const auto near = geo::pixel_to_geo(g3, -50, 400);
  o.mean_lat = near.lat;
  o.mean_lon = near.lon;
  CHECK_NOTHROW(make_box(o, g3, 3.0, 1.0, 800, 800));
}

TEST_CASE("cloud fraction rules")
{
  Mask clear(100, 100, 0);
  CHECK(cloud_fraction({10, 10, 30, 30}, clear) == 0.0);
  Mask half(100, 100, 0);
  for (int y = 0; y < 100; ++y) {
    for (int x = 50; x < 100; ++x) {
      half.at(x, y) = 1;
    }
  }
  CHECK(cloud_fraction({40, 0, 60, 10}, half) == 0.5);
  CHECK(cloud_fraction({200, 200, 300, 300}, half) == 1.0);
  // 10x10 box with 20 cloudy pixels is exactly 0.20 and stays unflagged.
  Mask edge(100, 100, 0);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 2; ++x) {
      edge.at(x, y) = 1;
    }
  }
  const double f = cloud_fraction({0, 0, 10, 10}, edge);
  CHECK(f == 0.20);
  CHECK_FALSE(f > Params{}.cloud_threshold);
  edge.at(5, 5) = 1;
  CHECK(cloud_fraction({0, 0, 10, 10}, edge) > Params{}.cloud_threshold);
}

TEST_CASE("cloud fraction matches a per-pixel oracle and is monotone")
{
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> pos(-30, 130), sz(0.2, 80);
  std::bernoulli_distribution cloudy(0.3);
  for (int i = 0; i < 200; ++i) {
    Mask m(97, 83);
    for (auto & v : m.data()) {
      v = cloudy(rng);
    }
    const double x = pos(rng), y = pos(rng);
    const Box b{x, y, x + sz(rng), y + sz(rng)};
    const double f = cloud_fraction(b, m);
    CHECK(f == testing_support::brute_cloud_fraction(b, m));
    Mask bigger = m;
    for (auto & v : bigger.data()) {
      v = v || cloudy(rng);
    }
    CHECK(cloud_fraction(b, bigger) >= f);
  }
}

TEST_CASE("annotate synthetic scenes")
{
  using testing_support::SyntheticShip;
  const std::vector<SyntheticShip> five = {
    {100.5, 100.5, 90}, {300.5, 200.5, 150}, {500.5, 500.5, 60}, {650.5, 300.5, 120, true}, {200.5, 650.5, 200, true}};
  const auto clear = testing_support::make_scene(800, 3.0, five, false);
  const AnnotateResult r = annotate_image(clear.bundle, clear.records);
  CHECK(r.boxes.size() == 5);
  CHECK(r.vis_boxes.size() == 5);
  CHECK(r.counters.matched == 5);
  CHECK(r.counters.flagged == 0);
  for (const auto & b : r.boxes) {
    CHECK(b.curation == Curation::Auto);
    CHECK(b.box.valid());
  }
  CHECK(r.vis_boxes[1].box.width() == doctest::Approx(2 * r.boxes[1].box.width()));

  const auto cloudy = testing_support::make_scene(800, 3.0, five, true);
  const AnnotateResult c = annotate_image(cloudy.bundle, cloudy.records);
  CHECK(c.boxes.size() == 5);
  CHECK(c.counters.flagged == 2);
  CHECK(c.boxes[3].cloud_flagged);
  CHECK(c.boxes[4].cloud_flagged);
  CHECK_FALSE(c.boxes[0].cloud_flagged);

  const AnnotateResult again = annotate_image(cloudy.bundle, AisIndex(cloudy.records));
  CHECK(again.boxes == c.boxes);
  CHECK(again.counters == c.counters);

  const AnnotateResult none = annotate_image(cloudy.bundle, std::vector<ais::AisRecord>{});
  CHECK(none.boxes.empty());
  CHECK(none.counters == Counters{});
}

TEST_CASE("annotation json round trip")
{
  AnnotationRecord r;
  r.image_id = "sf_2016_a";
  r.annotation.box = {1.5, 2.5, 30.25, 40};
  r.annotation.mmsi = 367123456;
  r.annotation.length_m = 294;
  r.annotation.cloud_fraction = 0.25;
  r.annotation.cloud_flagged = true;
  r.annotation.center_x = 15.875;
  r.annotation.center_y = 21.25;
  const auto j = to_json(r);
  for (const char * key : {"image_id", "mmsi", "box", "length_m", "cloud_fraction", "flagged", "curation"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["curation"] == "auto");
  CHECK(annotation_from_json(j) == r);
  CHECK(annotation_from_json(nlohmann::json::parse(j.dump())) == r);
  CHECK_THROWS_AS(annotation_from_json(nlohmann::json{{"image_id", "x"}}), FormatError);
}
