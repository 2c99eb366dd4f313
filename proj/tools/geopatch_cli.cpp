// geopatch command-line tool: info, synth, warp, sample, bench.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "geopatch/bench.hpp"
#include "geopatch/config.hpp"
#include "geopatch/dataset.hpp"
#include "geopatch/error.hpp"
#include "geopatch/raster_io.hpp"
#include "geopatch/sampler.hpp"
#include "geopatch/synth.hpp"
#include "geopatch/warp.hpp"

namespace fs = std::filesystem;
using namespace geopatch;

namespace {

// gdalwarp spells its long options with a single dash.
std::vector<std::string> normalize_args(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = argc - 1; i >= 1; --i) {
    std::string a = argv[i];
    if (a == "-t_srs" || a == "-te" || a == "-ts" || a == "-tr" || a == "-ot") {
      a = "-" + a;
    }
    args.push_back(a);
  }
  return args;  // CLI11 expects reverse order
}

void print_info(const fs::path& file) {
  const SceneMetadata m = parse_geotiff_header(file);
  const BoundingBox b = m.bounds();
  const Resolution r = m.res();
  std::cout << std::setprecision(15);
  std::cout << "file: " << m.path.string() << "\n";
  std::cout << "crs: " << m.crs.to_string() << "\n";
  std::cout << "bounds: " << b.minx << " " << b.miny << " " << b.maxx << " " << b.maxy << "\n";
  std::cout << "size: " << m.shape.cols << " x " << m.shape.rows << "\n";
  std::cout << "res: " << r.xres << " " << r.yres << "\n";
  std::cout << "bands: " << m.bands << "\n";
  std::cout << "type: " << to_string(m.sample_type) << "\n";
  std::cout << "nodata: " << (m.nodata ? std::to_string(*m.nodata) : std::string("none")) << "\n";
  std::cout << "layout: " << (m.block_layout.tiled ? "tiled " : "stripped ")
            << m.block_layout.block_width << " x " << m.block_layout.block_height << "\n";
  std::cout << "blocks: " << m.blocks_across() << " x " << m.blocks_down() << "\n";
  std::cout << "compression: " << (m.compression == Compression::Deflate ? "deflate" : "none")
            << "\n";
}

struct WarpArgs {
  std::string t_srs;
  std::vector<double> te;
  std::vector<std::int64_t> ts;
  std::vector<double> tr;
  std::string r = "nearest";
  std::string ot;
  std::string compress = "none";
  double max_error = 0.125;
  std::string src;
  std::string dst;
};

void run_warp(const WarpArgs& a) {
  const SceneMetadata src = parse_geotiff_header(a.src);
  const CrsDef dst_crs = a.t_srs.empty() ? src.crs : CrsDef::parse(a.t_srs);
  BoundingBox box = a.te.empty() ? transform_bbox(src.crs, dst_crs, src.bounds())
                                 : BoundingBox::from_xy(a.te[0], a.te[1], a.te[2], a.te[3]);
  GridShape shape;
  if (!a.ts.empty()) {
    shape = {a.ts[1], a.ts[0]};
  } else {
    const Resolution r = a.tr.empty() ? src.res() : Resolution(a.tr[0], a.tr[1]);
    shape = grid_shape(box, r);
    if (a.te.empty()) {
      // keep the requested resolution exact by moving the far edges
      box = BoundingBox::from_xy(box.minx, box.maxy - static_cast<double>(shape.rows) * r.yres,
                                 box.minx + static_cast<double>(shape.cols) * r.xres, box.maxy);
    }
  }
  if (shape.rows < 1 || shape.cols < 1) {
    throw Error(ErrorCode::InvalidArgument, "-ts needs positive sizes");
  }
  WarpFileOptions o;
  o.resample.method = parse_resample_method(a.r);
  o.resample.max_error_px = a.max_error;
  o.resample.policy = ExecPolicy::Parallel;
  if (!a.ot.empty()) {
    o.sample_type = parse_sample_type(a.ot);
  }
  if (a.compress == "deflate") {
    o.compression = Compression::Deflate;
  } else if (a.compress != "none") {
    throw Error(ErrorCode::InvalidArgument, "unknown compression '" + a.compress + "'");
  }
  BlockCache cache(BlockCache::capacity_from_env());
  warp_to_file(src, a.dst, dst_crs, box, shape, cache, o);
}

struct SampleArgs {
  std::string dataset;
  std::string sampler = "random";
  std::int64_t n = 10;
  std::uint64_t seed = 0;
  std::string out;
  double size = 224.0;
  double stride = 0.0;
  std::string unit = "px";
  std::int64_t batch_size = 1;
  std::string extent_mode = "scene-footprints";
};

std::string box_json_file(std::int64_t index, const std::string& role) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%06lld_%s.tif", static_cast<long long>(index), role.c_str());
  return buf;
}

void run_sample(const SampleArgs& a) {
  auto cache = std::make_shared<BlockCache>(BlockCache::capacity_from_env());
  const DatasetPtr d = open_dataset(fs::path(a.dataset), cache);
  d->set_exec_policy(ExecPolicy::Parallel);

  SamplerConfig cfg;
  cfg.patch_width = cfg.patch_height = a.size;
  cfg.stride_x = cfg.stride_y = a.stride > 0.0 ? a.stride : a.size / 2.0;
  cfg.unit = parse_patch_unit(a.unit);
  cfg.length = a.n;
  cfg.batch_size = a.batch_size;
  cfg.seed = a.seed;
  cfg.extent_mode = parse_extent_mode(a.extent_mode);
  const auto kind = parse_sampler_kind(a.sampler);
  const auto batches = make_sampler(kind, SamplerInput::from(*d), cfg)->batches();

  fs::create_directories(a.out);
  nlohmann::json samples = nlohmann::json::array();
  std::int64_t index = 0;
  for (std::size_t bi = 0; bi < batches.size() && index < a.n; ++bi) {
    for (const BoundingBox& box : batches[bi]) {
      if (index >= a.n) break;
      const Sample s = d->query(box);
      nlohmann::json files = nlohmann::json::object();
      nlohmann::json valid = nlohmann::json::object();
      for (const auto& [role, patch] : s.patches) {
        const std::string name = box_json_file(index, role);
        write_geotiff(fs::path(a.out) / name, patch);
        files[role] = name;
        valid[role] = patch.valid_count();
      }
      samples.push_back({{"index", index},
                         {"batch", bi},
                         {"bbox", {box.minx, box.miny, box.maxx, box.maxy}},
                         {"files", files},
                         {"valid_pixels", valid},
                         {"all_invalid", s.all_invalid}});
      ++index;
    }
  }
  const Resolution res = d->res();
  nlohmann::json manifest = {{"sampler", a.sampler},
                             {"seed", a.seed},
                             {"n", index},
                             {"crs", d->crs().to_string()},
                             {"res", {res.xres, res.yres}},
                             {"roles", d->roles()},
                             {"samples", samples},
                             {"sequence_hash", sequence_hash(batches)}};
  std::ofstream out(fs::path(a.out) / "manifest.json", std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write manifest in " + a.out);
  }
  out << manifest.dump(2) << "\n";
}

void run_bench(const std::string& config, const std::string& out_path) {
  const BenchConfig cfg = BenchConfig::load(config);
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write " + out_path);
  }
  out << BenchReport::kCsvHeader << "\n" << std::flush;
  run_benchmark(cfg, [&](const BenchRow& row) {
    BenchReport::write_csv_row(out, row);
    out.flush();
    std::cerr << to_string(row.sampler) << " batch=" << row.batch_size << " mode="
              << to_string(row.mode) << " seed=" << row.seed << ": " << std::fixed
              << std::setprecision(1) << row.patches_per_sec << " patches/s, hit rate "
              << std::setprecision(3)
              << (row.cache_hits + row.cache_misses == 0
                      ? 0.0
                      : static_cast<double>(row.cache_hits) /
                            static_cast<double>(row.cache_hits + row.cache_misses))
              << ", sequence " << std::hex << row.sequence_hash << std::dec << "\n";
    std::cerr.unsetf(std::ios::fixed);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Georeferenced patch sampling engine"};
  app.require_subcommand(1);

  std::string info_file;
  auto* info = app.add_subcommand("info", "Print raster metadata");
  info->add_option("file", info_file, "GeoTIFF file")->required();

  std::string synth_spec;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate synthetic rasters from a spec file");
  synth->add_option("spec", synth_spec, "Synth config")->required();
  synth->add_option("-o,--out", synth_out, "Output directory")->required();

  WarpArgs wa;
  auto* warp = app.add_subcommand("warp", "Reproject and resample a raster onto a target grid");
  warp->add_option("--t_srs", wa.t_srs, "Target CRS, EPSG:nnnn");
  warp->add_option("--te", wa.te, "Target extent: xmin ymin xmax ymax")->expected(4);
  auto* ts = warp->add_option("--ts", wa.ts, "Target size: width height")->expected(2);
  warp->add_option("--tr", wa.tr, "Target resolution: xres yres")->expected(2)->excludes(ts);
  warp->add_option("-r", wa.r, "Resampling: nearest | bilinear")
      ->check(CLI::IsMember({"nearest", "near", "bilinear"}));
  warp->add_option("--ot", wa.ot, "Output sample type: u8 | u16 | i16 | f32");
  warp->add_option("--compress", wa.compress, "none | deflate");
  warp->add_option("--max-error", wa.max_error, "Transform approximation error in pixels");
  warp->add_option("src", wa.src, "Source raster")->required();
  warp->add_option("dst", wa.dst, "Destination raster")->required();

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Write sampled patches and a manifest");
  sample->add_option("--dataset", sa.dataset, "Dataset config")->required();
  sample->add_option("--sampler", sa.sampler, "random | random-batch | grid")
      ->check(CLI::IsMember({"random", "random-batch", "grid"}));
  sample->add_option("--n", sa.n, "Number of patches")->check(CLI::PositiveNumber);
  sample->add_option("--seed", sa.seed, "Sampler seed");
  sample->add_option("-o,--out", sa.out, "Output directory")->required();
  sample->add_option("--size", sa.size, "Patch size")->check(CLI::PositiveNumber);
  sample->add_option("--stride", sa.stride, "Grid stride (default size / 2)");
  sample->add_option("--unit", sa.unit, "Unit of size and stride: px | crs")
      ->check(CLI::IsMember({"px", "pixels", "crs"}));
  sample->add_option("--batch-size", sa.batch_size, "Batch size")->check(CLI::PositiveNumber);
  sample->add_option("--extent-mode", sa.extent_mode, "hull | scene-footprints")
      ->check(CLI::IsMember({"hull", "scene-footprints"}));

  std::string bench_config;
  std::string bench_out = "report.csv";
  auto* bench = app.add_subcommand("bench", "Run the sampling throughput benchmark");
  bench->add_option("--config", bench_config, "Bench config")->required();
  bench->add_option("-o,--out", bench_out, "CSV report");

  try {
    app.parse(normalize_args(argc, argv));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*info) {
      print_info(info_file);
    } else if (*synth) {
      for (const auto& p : synth_from_config(Config::load(synth_spec), synth_out)) {
        std::cout << p.string() << "\n";
      }
    } else if (*warp) {
      run_warp(wa);
    } else if (*sample) {
      run_sample(sa);
    } else if (*bench) {
      run_bench(bench_config, bench_out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
