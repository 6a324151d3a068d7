#include <omp.h>

#include <csignal>
#include <iomanip>
#include <set>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "shipfuse/catalog.hpp"
#include "shipfuse/config.hpp"
#include "shipfuse/error.hpp"
#include "shipfuse/pipeline.hpp"
#include "shipfuse/review_service.hpp"

using namespace shipfuse;
namespace fs = std::filesystem;
using nlohmann::json;

namespace
{

struct Globals
{
  std::string root = ".";
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::vector<std::string> overrides;
};

Config resolve_config(const Globals & g)
{
  Config c = g.config_path.empty() ? Config{} : load_config(g.config_path);
  for (const auto & o : g.overrides) {
    apply_override(c, o);
  }
  if (g.seed) {
    c.runtime.seed = *g.seed;
  }
  if (g.jobs) {
    c.runtime.jobs = *g.jobs;
  }
  validate(c);
  if (c.runtime.jobs > 0) {
    omp_set_num_threads(c.runtime.jobs);
  }
  return c;
}

void print_table(const catalog::Stats & s)
{
  std::set<std::string> locs;
  std::set<std::string> provs;
  for (const auto & [k, g] : s.groups) {
    locs.insert(k.location + " " + k.year);
    provs.insert(k.provider);
  }
  auto row = [&](const char * title, auto cell) {
    std::cout << title << "\n" << std::left << std::setw(12) << "";
    for (const auto & l : locs) {
      std::cout << std::setw(16) << l;
    }
    std::cout << "\n";
    for (const auto & p : provs) {
      std::cout << std::setw(12) << p;
      for (const auto & l : locs) {
        std::string text = "-";
        for (const auto & [k, g] : s.groups) {
          if (k.provider == p && k.location + " " + k.year == l) {
            text = cell(g);
          }
        }
        std::cout << std::setw(16) << text;
      }
      std::cout << "\n";
    }
    std::cout << "\n";
  };
  row("images (all/valid)", [](const catalog::GroupStats & g) {
    return std::to_string(g.images) + "/" + std::to_string(g.images_valid);
  });
  row("ships (all/valid)", [](const catalog::GroupStats & g) {
    return std::to_string(g.ships) + "/" + std::to_string(g.ships_valid);
  });
  row("patches/ships", [](const catalog::GroupStats & g) {
    return std::to_string(g.patches_annotated) + "/" + std::to_string(g.patch_ships);
  });
  std::cout << "curation: " << s.total.undecided << " undecided, " << s.total.accepted << " accepted, "
            << s.total.rejected << " rejected, " << s.total.flagged << " flagged\n";
}

review::ReviewService * g_service = nullptr;

void on_signal(int)
{
  if (g_service) {
    g_service->stop();
  }
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"AIS and satellite imagery fusion for ship detection datasets"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--root", g.root, "dataset root directory")->capture_default_str();
  app.add_option("--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "seed for augmentation sampling");
  app.add_option("--jobs", g.jobs, "OpenMP threads (0 = default)")->check(CLI::NonNegativeNumber);
  app.add_option("--set", g.overrides, "config override section.key=value (repeatable)");

  // ingest-ais
  auto * ingest = app.add_subcommand("ingest-ais", "parse Cadastre CSV / NMEA into AIS JSON lines");
  std::vector<std::string> ais_inputs;
  std::string ais_out;
  ingest->add_option("inputs", ais_inputs, "*.csv or NMEA files")->required()->check(CLI::ExistingFile);
  ingest->add_option("--out", ais_out, "output JSON lines (default <root>/ais/records.jsonl)");

  // annotate
  auto * annotate = app.add_subcommand("annotate", "correlate AIS with catalog images");
  std::string ais_in, image, sidecar, mask, location, year, only;
  bool render = false;
  annotate->add_option("--ais", ais_in, "AIS JSON lines (default <root>/ais/records.jsonl)");
  annotate->add_option("--image", image, "import this image into the catalog first")->check(CLI::ExistingFile);
  annotate->add_option("--sidecar", sidecar, "sidecar of --image")->check(CLI::ExistingFile);
  annotate->add_option("--mask", mask, "cloud mask of --image")->check(CLI::ExistingFile);
  annotate->add_option("--location", location, "location tag of --image (e.g. SF, LB)");
  annotate->add_option("--year", year, "year directory of --image (default: from timestamp)");
  annotate->add_option("--image-id", only, "only this catalog image");
  annotate->add_flag("--render", render, "also write vis/<id>.png with visualization boxes");

  // tile
  auto * tile = app.add_subcommand("tile", "cut 8-bit patches and refresh manifest.json");
  std::string tile_only;
  tile->add_option("--image-id", tile_only, "only this catalog image");

  // airbus-prepare
  auto * prep = app.add_subcommand("airbus-prepare", "fit boxes to Airbus RLE masks and filter by length");
  std::string index_csv, prep_out;
  prep->add_option("index", index_csv, "ImageId,EncodedPixels CSV")->required()->check(CLI::ExistingFile);
  prep->add_option("--out", prep_out, "output JSON lines (default <root>/airbus/annotations.jsonl)");

  // augment
  auto * aug = app.add_subcommand("augment", "scale / rotate / blur augmentation of Airbus chips");
  std::string aug_images, aug_ann, aug_out;
  std::vector<std::string> aug_kinds = {"scale", "rotate", "blur"};
  aug->add_option("--images", aug_images, "directory of source images (PNG or TIFF)")->required();
  aug->add_option("--annotations", aug_ann, "annotation JSON lines (default <root>/airbus/annotations.jsonl)");
  aug->add_option("--out", aug_out, "output directory (default <root>/airbus/augmented)");
  aug->add_option("--kinds", aug_kinds, "subset of scale, rotate, blur")->delimiter(',');

  // detect
  auto * det = app.add_subcommand("detect", "run the detector over catalog images");
  std::string det_only, backend, command, exchange;
  det->add_option("--image-id", det_only, "only this catalog image");
  det->add_option("--backend", backend, "baseline or external");
  det->add_option("--command", command, "external detector command; {request_dir} is substituted");
  det->add_option("--exchange-dir", exchange, "external exchange directory (default <root>/exchange)");

  // evaluate
  auto * ev = app.add_subcommand("evaluate", "retrieval rate of detections against AIS positions");
  std::string regime = "detector", ev_out;
  ev->add_option("--regime", regime, "row label for the report (training regime)")->capture_default_str();
  ev->add_option("--out", ev_out, "report directory (default <root>/reports)");

  // serve-review
  auto * serve = app.add_subcommand("serve-review", "HTTP curation service");
  std::optional<int> port;
  std::string host, static_dir;
  serve->add_option("--port", port, "listen port");
  serve->add_option("--host", host, "listen address");
  serve->add_option("--static", static_dir, "review UI asset directory");

  // export
  auto * exp = app.add_subcommand("export", "write a curated dataset bundle");
  std::string policy, format, exp_out;
  exp->add_option("--policy", policy, "strict or lenient");
  exp->add_option("--format", format, "jsonl or coco");
  exp->add_option("--out", exp_out, "bundle directory")->required();

  // stats
  auto * st = app.add_subcommand("stats", "catalog statistics");
  bool as_json = false;
  st->add_flag("--json", as_json, "print JSON instead of tables");

  auto * dump = app.add_subcommand("dump-config", "print the effective configuration");

  CLI11_PARSE(app, argc, argv);

  try {
    const Config cfg = resolve_config(g);
    const fs::path root = g.root;

    if (*ingest) {
      std::vector<fs::path> files(ais_inputs.begin(), ais_inputs.end());
      pipeline::IngestSummary s;
      const auto records = pipeline::ingest_ais(files, cfg, &s);
      const fs::path out = ais_out.empty() ? root / "ais" / "records.jsonl" : fs::path(ais_out);
      pipeline::write_ais_jsonl(out, records);
      std::cout << "records " << s.records << " (csv rows " << s.csv_rows << ", csv rejects " << s.csv_rejects
                << ", nmea lines " << s.nmea.lines << ", checksum errors " << s.nmea.checksum_errors
                << ", format errors " << s.nmea.format_errors << ", unsupported " << s.nmea.unsupported
                << ", dropped fragments " << s.nmea.dropped_fragments << ")\n"
                << "wrote " << out.string() << "\n";
    }
    else if (*annotate) {
      std::optional<std::string> target = only.empty() ? std::nullopt : std::optional(only);
      if (!image.empty()) {
        if (sidecar.empty() || location.empty()) {
          throw ConfigError("--image needs --sidecar and --location");
        }
        target = catalog::import_image(root, image, sidecar, mask.empty() ? std::nullopt : std::optional<fs::path>(mask),
                                       location, year.empty() ? std::nullopt : std::optional(year));
      }
      const fs::path ais_path = ais_in.empty() ? root / "ais" / "records.jsonl" : fs::path(ais_in);
      const auto records = pipeline::read_ais_jsonl(ais_path);
      const auto s = pipeline::annotate_dataset(root, cfg, records, target, render);
      for (const auto & w : s.warnings) {
        std::cerr << "warning: " << w << "\n";
      }
      std::cout << "images " << s.images << ", observations " << s.counters.observations << ", matched "
                << s.counters.matched << ", off-image " << s.counters.off_image << ", cloud-flagged "
                << s.counters.flagged << "\n";
    }
    else if (*tile) {
      const auto s = pipeline::tile_dataset(root, cfg, tile_only.empty() ? std::nullopt : std::optional(tile_only));
      std::cout << "images " << s.images << ", patches " << s.patches << "\n";
    }
    else if (*prep) {
      const fs::path out = prep_out.empty() ? root / "airbus" / "annotations.jsonl" : fs::path(prep_out);
      const auto s = pipeline::airbus_prepare(index_csv, out, cfg);
      std::cout << "rows " << s.rows << ", ship rows " << s.ship_rows << ", bad rows " << s.bad_rows << "\n"
                << "images kept " << s.images_kept << " of " << s.images_total << ", annotations kept "
                << s.annotations_kept << "\n";
    }
    else if (*aug) {
      std::vector<airbus::AugmentKind> kinds;
      for (const auto & k : aug_kinds) {
        kinds.push_back(airbus::augment_kind_from_string(k));
      }
      const fs::path ann = aug_ann.empty() ? root / "airbus" / "annotations.jsonl" : fs::path(aug_ann);
      const fs::path out = aug_out.empty() ? root / "airbus" / "augmented" : fs::path(aug_out);
      const auto s = pipeline::augment_dataset(aug_images, ann, out, kinds, cfg);
      std::cout << "items " << s.items << ", outputs " << s.outputs << ", dropped boxes " << s.dropped_boxes
                << ", missing images " << s.missing_images << "\n";
    }
    else if (*det) {
      Config c = cfg;
      if (!backend.empty()) {
        c.detect.backend = backend;
      }
      if (!command.empty()) {
        c.detect.external.command = command;
      }
      if (!exchange.empty()) {
        c.detect.external.exchange_dir = exchange;
      }
      validate(c);
      const auto out = pipeline::detect_dataset(root, c, det_only.empty() ? std::nullopt : std::optional(det_only));
      for (const auto & [id, d] : out) {
        std::cout << id << ": " << d.size() << " detections\n";
      }
    }
    else if (*ev) {
      const auto r = pipeline::evaluate_dataset(root, cfg, regime);
      const fs::path out = ev_out.empty() ? root / "reports" : fs::path(ev_out);
      eval::write_report(out.string(), r.report, cfg.eval);
      for (const auto & [k, t] : r.report) {
        std::cout << k.regime << " " << k.location << " " << k.provider << ": " << t.n_detected << "/" << t.n_gt;
        if (t.rate()) {
          std::cout << " = " << *t.rate();
        }
        std::cout << " (false alarms " << t.false_alarms << ")\n";
      }
      if (r.skipped_outside) {
        std::cerr << "warning: " << r.skipped_outside << " ground-truth positions lie outside their image\n";
      }
      std::cout << "wrote " << out.string() << "\n";
    }
    else if (*serve) {
      review::ServiceOptions o;
      o.root = root;
      const std::string dir = static_dir.empty() ? cfg.review.static_dir : static_dir;
      if (!dir.empty()) {
        o.static_dir = dir;
      }
      o.page_size = cfg.review.page_size;
      o.min_inside = cfg.raster.min_inside;
      o.write_timeout_s = cfg.review.write_timeout_s;
      review::ReviewService service(o);
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      const std::string h = host.empty() ? cfg.review.host : host;
      const int p = port.value_or(cfg.review.port);
      std::cout << "serving " << root.string() << " on http://" << h << ":" << p << "/" << std::endl;
      service.run(h, p);
      g_service = nullptr;
    }
    else if (*exp) {
      const auto m = catalog::build_manifest(root, cfg.raster.min_inside);
      const auto v = catalog::apply_curation(m, catalog::read_curation_log(root / "curation.jsonl"));
      for (const auto & w : v.warnings) {
        std::cerr << "warning: " << w << "\n";
      }
      const auto s = catalog::export_dataset(root, m, v,
                                             catalog::policy_from_string(policy.empty() ? cfg.export_.policy : policy),
                                             catalog::format_from_string(format.empty() ? cfg.export_.format : format),
                                             exp_out);
      std::cout << "patches " << s.patches << ", annotations " << s.annotations << "\nwrote " << exp_out << "\n";
    }
    else if (*st) {
      const auto m = catalog::build_manifest(root, cfg.raster.min_inside);
      const auto v = catalog::apply_curation(m, catalog::read_curation_log(root / "curation.jsonl"));
      const auto s = catalog::compute_stats(m, v);
      if (as_json) {
        std::cout << catalog::to_json(s).dump(2) << "\n";
      }
      else {
        print_table(s);
      }
    }
    else if (*dump) {
      std::cout << to_json(cfg).dump(2) << "\n";
    }
  }
  catch (const Error & e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
