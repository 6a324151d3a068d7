#include <filesystem>
#include <random>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "shipfuse/detect.hpp"
#include "shipfuse/error.hpp"

using namespace shipfuse;
using namespace shipfuse::detect;
namespace fs = std::filesystem;

namespace
{

Image sea(int w, int h, std::uint16_t v = 30)
{
  Image img(w, h, 3, 8);
  for (auto & b : img.bands) {
    std::fill(b.data().begin(), b.data().end(), v);
  }
  return img;
}

void blob(Image & img, int x0, int y0, int w, int h, std::uint16_t v = 220)
{
  for (auto & b : img.bands) {
    for (int y = y0; y < y0 + h; ++y) {
      for (int x = x0; x < x0 + w; ++x) {
        b.at(x, y) = v;
      }
    }
  }
}

// Reference NMS: repeatedly pick the best remaining detection by the stated
// order and remove everything overlapping it, recomputing the order each time.
fs::path fixture_script()
{
  return fs::path(SHIPFUSE_TEST_DIR) / "fixtures" / "echo_detector.py";
}

}  // namespace

TEST_CASE("otsu threshold")
{
  kernels::Histogram256 h{};
  h[30] = 1000;
  CHECK_FALSE(otsu_threshold(h));
  h[220] = 50;
  const auto t = otsu_threshold(h);
  REQUIRE(t);
  CHECK(*t >= 30);
  CHECK(*t < 220);
  CHECK(*t == 30);
}

TEST_CASE("baseline detector on synthetic tiles")
{
  CHECK(detect_baseline(sea(200, 200)).empty());
  Image one = sea(200, 200);
  blob(one, 50, 70, 20, 6);
  const auto d1 = detect_baseline(one);
  REQUIRE(d1.size() == 1);
  CHECK(d1[0].box == Box{50, 70, 70, 76});
  CHECK(d1[0].confidence == doctest::Approx(190.0 / 255.0));
  CHECK(d1[0].space == Space::Tile);

  Image two = one;
  blob(two, 120, 120, 15, 5);
  const auto d2 = detect_baseline(two);
  CHECK(d2.size() == 2);

  Image speck = one;
  blob(speck, 150, 20, 2, 2);
  CHECK(detect_baseline(speck).size() == 1);  // below min_area_px
  BaselineParams tiny;
  tiny.min_area_px = 1;
  CHECK(detect_baseline(speck, tiny).size() == 2);

  // Diagonal neighbours are separate under 4-connectivity.
  Image diag = sea(20, 20);
  blob(diag, 5, 5, 1, 1);
  blob(diag, 6, 6, 1, 1);
  CHECK(detect_baseline(diag, tiny).size() == 2);

  BaselineParams fixed;
  fixed.mode = ThresholdMode::Fixed;
  fixed.fixed_threshold = 250;
  CHECK(detect_baseline(two, fixed).empty());
  BaselineParams bad;
  bad.min_area_px = 0;
  CHECK_THROWS_AS(detect_baseline(two, bad), ConfigError);
}

TEST_CASE("space translation")
{
  Detection d;
  d.box = {10, 10, 20, 20};
  d.confidence = 0.5;
  d.space = Space::Tile;
  const Detection img = to_image_space(d, {600, 0});
  CHECK(img.box == Box{610, 10, 620, 20});
  CHECK(img.space == Space::Image);
  CHECK(to_image_space(d, {0, 0}).box == d.box);
  CHECK(to_tile_space(img, {600, 0}).box == d.box);
}

TEST_CASE("iou")
{
  const Box a{0, 0, 2, 2}, b{1, 1, 3, 3}, c{5, 5, 6, 6};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, b) == doctest::Approx(1.0 / 7.0));
  CHECK(iou(a, c) == 0.0);
  CHECK(iou(a, b) == iou(b, a));
  CHECK(iou({0, 0, 2, 2}, {2, 0, 4, 2}) == 0.0);
}

TEST_CASE("nms examples")
{
  Detection a{{0, 0, 10, 10}, 0.9};
  CHECK(nms({a}) == std::vector<Detection>{a});
  Detection dup{{0, 0, 10, 10}, 0.8};
  CHECK(nms({dup, a}) == std::vector<Detection>{a});
  Detection low{{50, 50, 60, 60}, 0.19};
  CHECK(nms({low}).empty());
  Detection edge{{50, 50, 60, 60}, 0.20};
  CHECK(nms({edge}).size() == 1);
  // Equal confidence: larger area wins, then lexicographic box.
  Detection big{{0, 0, 12, 12}, 0.5}, small{{0, 0, 11, 11}, 0.5};
  CHECK(nms({small, big})[0] == big);
  Detection l1{{0, 0, 10, 10}, 0.5}, l2{{1, 0, 11, 10}, 0.5};
  CHECK(nms({l2, l1})[0] == l1);
}

TEST_CASE("nms matches the reference and its invariants on random scenes")
{
  std::mt19937_64 rng(99);
  for (int s = 0; s < 300; ++s) {
    auto scene = testing_support::random_nms_scene(rng);
    std::shuffle(scene.begin(), scene.end(), rng);
    const auto out = nms(scene);
    CHECK(out == testing_support::brute_nms(scene, 0.5, 0.20));
    CHECK(nms(out) == out);
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(std::find(scene.begin(), scene.end(), out[i]) != scene.end());
      for (std::size_t j = i + 1; j < out.size(); ++j) {
        CHECK(iou(out[i].box, out[j].box) <= 0.5);
      }
      if (i > 0) {
        CHECK(out[i - 1].confidence >= out[i].confidence);
      }
    }
  }
}

TEST_CASE("duplicate across overlapping tiles collapses to one detection")
{
  Image img = sea(1400, 800);
  blob(img, 680, 400, 40, 8);  // inside the 600..800 overlap
  const auto dets = detect_tiled(img);
  REQUIRE(dets.size() == 1);
  CHECK(dets[0].box == Box{680, 400, 720, 408});
}

TEST_CASE("external detector protocol")
{
  const fs::path dir = fs::temp_directory_path() / "shipfuse_test_exchange";
  fs::remove_all(dir);
  const Image a = sea(64, 64), b = sea(64, 64, 40);
  const std::vector<TileRequest> tiles = {{"scene/0_0", {0, 0}, &a}, {"scene/600_0", {600, 0}, &b}};
  ExternalSpec spec;
  spec.exchange_dir = dir.string();
  spec.timeout_s = 20;
  spec.command = "python3 " + fixture_script().string() + " {request_dir}";
  const auto got = run_external(tiles, spec);
  REQUIRE(got.size() == 2);
  REQUIRE(got.at("scene/600_0").size() == 2);
  CHECK(got.at("scene/600_0")[1].box == Box{100.5, 40, 160, 52.25});
  CHECK(got.at("scene/600_0")[1].confidence == 0.35);
  CHECK(got.at("scene/600_0")[0].origin == raster::Origin{600, 0});
  CHECK(to_image_space(got.at("scene/600_0")[0], {600, 0}).box == Box{610, 10, 620, 20});
  CHECK(fs::exists(dir / "request.json"));
  CHECK(fs::exists(dir / "tiles" / "1.png"));

  spec.command = "python3 " + fixture_script().string() + " {request_dir} bad_confidence";
  CHECK_THROWS_AS(run_external(tiles, spec), ProtocolError);
  spec.command = "python3 " + fixture_script().string() + " {request_dir} unknown_tile";
  CHECK_THROWS_AS(run_external(tiles, spec), ProtocolError);
  spec.command = "python3 " + fixture_script().string() + " {request_dir} partial";
  const auto partial = run_external(tiles, spec);
  CHECK(partial.at("scene/0_0").empty());
  CHECK(partial.at("scene/600_0").empty());
  spec.command = "python3 " + fixture_script().string() + " {request_dir} empty_file";
  const auto empty = run_external(tiles, spec);
  CHECK(empty.at("scene/0_0").empty());
  spec.command = "python3 " + fixture_script().string() + " {request_dir} fail";
  CHECK_THROWS_AS(run_external(tiles, spec), ProtocolError);
  spec.command = "python3 " + fixture_script().string() + " {request_dir} sleep";
  spec.timeout_s = 0.5;
  CHECK_THROWS_AS(run_external(tiles, spec), ExternalTimeout);
  spec.command.clear();
  spec.timeout_s = 0.2;
  CHECK_THROWS_AS(run_external(tiles, spec), ExternalTimeout);
  fs::remove_all(dir);
}

TEST_CASE("response validation")
{
  const Image a = sea(8, 8);
  const std::vector<TileRequest> tiles = {{"t", {0, 0}, &a}};
  using nlohmann::json;
  CHECK_THROWS_AS(parse_response(json::array(), tiles), ProtocolError);
  CHECK_THROWS_AS(parse_response(json{{"t", {{{"box", {5, 5, 5, 6}}, {"confidence", 0.5}}}}}, tiles), ProtocolError);
  CHECK_THROWS_AS(parse_response(json{{"t", {{{"box", {1, 2, 3}}, {"confidence", 0.5}}}}}, tiles), ProtocolError);
  CHECK_THROWS_AS(parse_response(json{{"t", {{{"box", {1, 2, 3, 4}}, {"confidence", -0.1}}}}}, tiles), ProtocolError);
  CHECK_THROWS_AS(parse_response(json{{"t", {{{"box", {1, 2, 3, 4}}}}}}, tiles), ProtocolError);
  CHECK(parse_response(json{{"t", json::array()}}, tiles).at("t").empty());
}
