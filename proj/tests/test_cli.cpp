#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "shipfuse/geo.hpp"
#include "shipfuse/image_io.hpp"
#include "shipfuse/timeutil.hpp"
#include "synthetic_scene.hpp"

using namespace shipfuse;
using nlohmann::json;
namespace fs = std::filesystem;

namespace
{

struct Result
{
  int status;
  std::string output;
};

Result cli(const fs::path & root, const std::string & args)
{
  const fs::path log = root.parent_path() / "cli_output.txt";
  const std::string cmd = std::string(SHIPFUSE_CLI) + " --root " + root.string() + " " + args + " > " + log.string() +
                          " 2>&1";
  const int raw = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, ss.str()};
}

json read_json(const fs::path & p)
{
  std::ifstream in(p);
  return json::parse(in);
}

}  // namespace

TEST_CASE("command-line pipeline over a synthetic scene")
{
  const fs::path work = fs::temp_directory_path() / "shipfuse_cli";
  fs::remove_all(work);
  const fs::path in = work / "inputs", root = work / "root";
  fs::create_directories(in);
  fs::create_directories(root);

  const auto ships = testing_support::acceptance_ships();
  const auto scene = testing_support::make_scene(2000, 3.0, ships, true);
  io::write_png((in / "bay_0701.png").string(), scene.bundle.image);
  io::write_mask_png((in / "bay_0701_udm.png").string(), *scene.bundle.cloud_mask);
  geo::Sidecar sc;
  sc.georef = scene.bundle.georef;
  sc.width = sc.height = 2000;
  sc.timestamp = scene.bundle.timestamp;
  sc.provider = scene.bundle.provider;
  sc.gsd_m = 3.0;
  geo::save_sidecar(sc, (in / "bay_0701.json").string());
  {
    std::ofstream csv(in / "cadastre.csv");
    csv << "MMSI,BaseDateTime,LAT,LON,Status,Length\n";
    for (const auto & r : scene.records) {
      char line[160];
      std::snprintf(line, sizeof(line), "%u,%s,%.10f,%.10f,moored,%.1f\n", r.mmsi,
                    format_iso8601(r.timestamp).c_str(), r.lat, r.lon, r.length_m.value_or(0));
      csv << line;
    }
  }

  auto r = cli(root, "ingest-ais " + (in / "cadastre.csv").string());
  CHECK_MESSAGE(r.status == 0, r.output);
  r = cli(root, "annotate --image " + (in / "bay_0701.png").string() + " --sidecar " + (in / "bay_0701.json").string() +
                  " --mask " + (in / "bay_0701_udm.png").string() + " --location bay --render");
  CHECK_MESSAGE(r.status == 0, r.output);
  CHECK(fs::exists(root / "annotations" / "bay_0701.jsonl"));
  CHECK(fs::exists(root / "vis" / "bay_0701.png"));
  r = cli(root, "--jobs 2 tile");
  CHECK_MESSAGE(r.status == 0, r.output);
  CHECK(read_json(root / "manifest.json")["patches"].size() == 9);
  r = cli(root, "detect");
  CHECK_MESSAGE(r.status == 0, r.output);
  r = cli(root, "evaluate --regime baseline");
  CHECK_MESSAGE(r.status == 0, r.output);
  const json report = read_json(root / "reports" / "report.json");
  REQUIRE(report["groups"].size() == 1);
  CHECK(report["groups"][0]["n_gt"] == 10);
  CHECK(report["groups"][0]["rate"] == 1.0);

  r = cli(root, "stats --json");
  CHECK_MESSAGE(r.status == 0, r.output);
  const json stats = json::parse(r.output);
  CHECK(stats["ships"] == 12);
  CHECK(stats["ships_valid"] == 10);
  CHECK(stats["flagged"] == 5);  // patches holding one of the two clouded ships

  r = cli(root, "export --policy lenient --out " + (work / "bundle").string());
  CHECK_MESSAGE(r.status == 0, r.output);
  CHECK(read_json(work / "bundle" / "manifest.json")["counts"]["patches"] == 9);
  r = cli(root, "export --out " + (work / "strict").string());
  CHECK_MESSAGE(r.status == 0, r.output);
  CHECK(read_json(work / "strict" / "manifest.json")["counts"]["patches"] == 0);

  r = cli(root, "--set raster.tile_size=400 --set raster.overlap=50 dump-config");
  CHECK_MESSAGE(r.status == 0, r.output);
  CHECK(json::parse(r.output)["raster"]["tile_size"] == 400);
  CHECK(cli(root, "--set raster.bogus=1 stats").status == 2);
  CHECK(cli(root, "export --policy loose --out " + (work / "x").string()).status == 2);
  fs::remove_all(work);
}
