#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "shipfuse/config.hpp"
#include "shipfuse/error.hpp"

using namespace shipfuse;
using nlohmann::json;
namespace fs = std::filesystem;

TEST_CASE("default tree round trips")
{
  const Config c;
  const json j = to_json(c);
  CHECK(j["raster"]["tile_size"] == 800);
  CHECK(j["raster"]["overlap"] == 200);
  CHECK(j["correlate"]["window_s"] == 300.0);
  CHECK(j["correlate"]["cloud_threshold"] == 0.20);
  CHECK(j["detect"]["iou_threshold"] == 0.5);
  CHECK(j["detect"]["confidence_floor"] == 0.20);
  CHECK(j["eval"]["bin_width_m"] == 25.0);
  CHECK(j["airbus"]["min_length_m"] == 50.0);
  CHECK(to_json(config_from_json(j)) == j);
  CHECK(to_json(config_from_json(json::object())) == j);
}

TEST_CASE("partial trees overlay the base")
{
  const Config c = config_from_json(json::parse(R"({"raster": {"tile_size": 512, "overlap": 64},
                                                    "correlate": {"excluded_status": [0, 8]},
                                                    "detect": {"threshold_mode": "fixed", "fixed_threshold": 90}})"));
  CHECK(c.raster.tile_size == 512);
  CHECK(c.raster.overlap == 64);
  CHECK(c.raster.stretch_lo == 0.02);
  CHECK(c.correlate.excluded_status == std::set<int>{0, 8});
  CHECK(c.detect.baseline.mode == detect::ThresholdMode::Fixed);
  CHECK(c.detect.baseline.fixed_threshold == 90);
  CHECK(c.tiled_params().tile_size == 512);
  CHECK(c.tiled_params().overlap == 64);
}

TEST_CASE("unknown keys and bad values are rejected")
{
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"raster": {"tile": 512}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"rasters": {}})")), ConfigError);
  CHECK_NOTHROW(config_from_json(json::parse(R"({"raster": {}, "detect": {"external": {}}})")));
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"raster": {"tile_size": "big"}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"raster": {"overlap": 800}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"detect": {"threshold_mode": "median"}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"eval": {"bin_width_m": 0}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse("[1, 2]")), ConfigError);
}

TEST_CASE("dotted overrides")
{
  Config c;
  apply_override(c, "raster.tile_size=400");
  apply_override(c, "raster.overlap=100");
  apply_override(c, "export.policy=lenient");
  apply_override(c, "detect.external.command=python3 det.py {request_dir}");
  apply_override(c, "runtime.seed=17");
  CHECK(c.raster.tile_size == 400);
  CHECK(c.raster.overlap == 100);
  CHECK(c.export_.policy == "lenient");
  CHECK(c.detect.external.command == "python3 det.py {request_dir}");
  CHECK(c.runtime.seed == 17u);
  CHECK_THROWS_AS(apply_override(c, "raster.tile_size"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "raster.nothing=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "raster.overlap=400"), ConfigError);
}

TEST_CASE("config files")
{
  const fs::path dir = fs::temp_directory_path() / "shipfuse_test_config";
  fs::create_directories(dir);
  Config c;
  c.review.port = 9000;
  c.eval.width_m = 50;
  {
    std::ofstream out(dir / "c.json");
    out << to_json(c).dump(2);
  }
  CHECK(to_json(load_config((dir / "c.json").string())) == to_json(c));
  {
    std::ofstream out(dir / "bad.json");
    out << "{ not json";
  }
  CHECK_THROWS_AS(load_config((dir / "bad.json").string()), ConfigError);
  CHECK_THROWS_AS(load_config((dir / "missing.json").string()), ConfigError);
  fs::remove_all(dir);
}
