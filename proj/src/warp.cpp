#include "geopatch/warp.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "geopatch/error.hpp"

namespace geopatch {

namespace {

constexpr double kSnapEps = 1e-9;

struct SrcCoord {
  double row = 0.0;
  double col = 0.0;
  bool ok = false;
};

bool is_nodata(float v, double nodata) noexcept {
  return std::isnan(nodata) ? std::isnan(v) : static_cast<double>(v) == nodata;
}

// Fractional source pixel coordinates along one destination row.
class RowMapper {
 public:
  RowMapper(const CrsDef& dst_crs, const CrsDef& src_crs, const GeoTransform& src_gt,
            double max_error_px)
      : tr_(dst_crs, src_crs), src_gt_(src_gt), max_err_(max_error_px) {}

  void map_row(double y, double x0, double step, std::span<SrcCoord> out) const {
    const auto n = static_cast<std::int64_t>(out.size());
    if (n == 0) {
      return;
    }
    if (tr_.is_identity()) {
      for (std::int64_t i = 0; i < n; ++i) {
        const PixelCoord p = src_gt_.world_to_pixel(x0 + static_cast<double>(i) * step, y);
        out[i] = {p.row, p.col, true};
      }
      return;
    }
    if (max_err_ <= 0.0 || n < 3) {
      for (std::int64_t i = 0; i < n; ++i) {
        out[i] = exact(x0 + static_cast<double>(i) * step, y);
      }
      return;
    }
    out[0] = exact(x0, y);
    out[n - 1] = exact(x0 + static_cast<double>(n - 1) * step, y);
    approximate(y, x0, step, 0, n - 1, out);
  }

 private:
  SrcCoord exact(double x, double y) const {
    try {
      const ProjXY q = tr_({x, y});
      const PixelCoord p = src_gt_.world_to_pixel(q.x, q.y);
      return {p.row, p.col, true};
    } catch (const Error&) {
      return {};
    }
  }

  // Endpoints i0 and i1 are already filled.
  void approximate(double y, double x0, double step, std::int64_t i0, std::int64_t i1,
                   std::span<SrcCoord> out) const {
    if (i1 - i0 < 2) {
      return;
    }
    const std::int64_t mid = (i0 + i1) / 2;
    out[mid] = exact(x0 + static_cast<double>(mid) * step, y);
    const SrcCoord a = out[i0];
    const SrcCoord b = out[i1];
    if (a.ok && b.ok && out[mid].ok) {
      const double t = static_cast<double>(mid - i0) / static_cast<double>(i1 - i0);
      const double er = std::abs(a.row + t * (b.row - a.row) - out[mid].row);
      const double ec = std::abs(a.col + t * (b.col - a.col) - out[mid].col);
      if (er <= max_err_ && ec <= max_err_) {
        const double span = static_cast<double>(i1 - i0);
        for (std::int64_t i = i0 + 1; i < i1; ++i) {
          if (i == mid) {
            continue;
          }
          const double u = static_cast<double>(i - i0) / span;
          out[i] = {a.row + u * (b.row - a.row), a.col + u * (b.col - a.col), true};
        }
        return;
      }
    }
    approximate(y, x0, step, i0, mid, out);
    approximate(y, x0, step, mid, i1, out);
  }

  PointTransformer tr_;
  GeoTransform src_gt_;
  double max_err_;
};

// Writes all bands of one destination pixel; returns validity.
bool sample_nearest(const Patch& src, double frow, double fcol, float* out,
                    std::size_t plane) noexcept {
  const double i = std::floor(frow);
  const double j = std::floor(fcol);
  if (!(i >= 0.0 && j >= 0.0 && i < static_cast<double>(src.rows()) &&
        j < static_cast<double>(src.cols()))) {
    return false;
  }
  const auto ii = static_cast<std::int64_t>(i);
  const auto jj = static_cast<std::int64_t>(j);
  if (!src.is_valid(ii, jj)) {
    return false;
  }
  for (int b = 0; b < src.bands; ++b) {
    out[b * plane] = src.at(b, ii, jj);
  }
  return true;
}

bool sample_bilinear(const Patch& src, double frow, double fcol, float* out,
                     std::size_t plane) noexcept {
  const double fy = frow - 0.5;
  const double fx = fcol - 0.5;
  if (!(fy > -1.0 && fx > -1.0 && fy < static_cast<double>(src.rows()) &&
        fx < static_cast<double>(src.cols()))) {
    return false;
  }
  const double y0 = std::floor(fy);
  const double x0 = std::floor(fx);
  const double wy = fy - y0;
  const double wx = fx - x0;
  const auto i0 = static_cast<std::int64_t>(y0);
  const auto j0 = static_cast<std::int64_t>(x0);
  struct Tap {
    std::int64_t i, j;
    double w;
  };
  const Tap taps[4] = {{i0, j0, (1.0 - wy) * (1.0 - wx)},
                       {i0, j0 + 1, (1.0 - wy) * wx},
                       {i0 + 1, j0, wy * (1.0 - wx)},
                       {i0 + 1, j0 + 1, wy * wx}};
  double wsum = 0.0;
  Tap used[4];
  int nused = 0;
  for (const Tap& t : taps) {
    if (t.w > 0.0 && t.i >= 0 && t.j >= 0 && t.i < src.rows() && t.j < src.cols() &&
        src.is_valid(t.i, t.j)) {
      used[nused++] = t;
      wsum += t.w;
    }
  }
  if (nused == 0) {
    return false;
  }
  for (int b = 0; b < src.bands; ++b) {
    double acc = 0.0;
    for (int k = 0; k < nused; ++k) {
      acc += used[k].w * static_cast<double>(src.at(b, used[k].i, used[k].j));
    }
    out[b * plane] = static_cast<float>(acc / wsum);
  }
  return true;
}

}  // namespace

ResampleMethod parse_resample_method(std::string_view text) {
  if (text == "nearest" || text == "near") return ResampleMethod::Nearest;
  if (text == "bilinear") return ResampleMethod::Bilinear;
  throw Error(ErrorCode::ParseError, "unknown resampling method '" + std::string(text) + "'");
}

std::string_view to_string(ResampleMethod m) noexcept {
  return m == ResampleMethod::Nearest ? "nearest" : "bilinear";
}

Patch read_window(const SceneMetadata& scene, const BoundingBox& window, BlockCache& cache,
                  int pad_pixels, float fill) {
  const GeoTransform& gt = scene.transform;
  const PixelCoord tl = gt.world_to_pixel(window.minx, window.maxy);
  const PixelCoord br = gt.world_to_pixel(window.maxx, window.miny);
  auto col_lo = static_cast<std::int64_t>(std::floor(tl.col + kSnapEps)) - pad_pixels;
  auto row_lo = static_cast<std::int64_t>(std::floor(tl.row + kSnapEps)) - pad_pixels;
  auto col_hi = static_cast<std::int64_t>(std::ceil(br.col - kSnapEps)) + pad_pixels;
  auto row_hi = static_cast<std::int64_t>(std::ceil(br.row - kSnapEps)) + pad_pixels;
  col_hi = std::max(col_hi, col_lo + 1);
  row_hi = std::max(row_hi, row_lo + 1);

  const Resolution res = scene.res();
  BoundingBox bbox{gt.origin_x + static_cast<double>(col_lo) * gt.dx,
                   gt.origin_x + static_cast<double>(col_hi) * gt.dx,
                   gt.origin_y + static_cast<double>(row_hi) * gt.dy,
                   gt.origin_y + static_cast<double>(row_lo) * gt.dy,
                   window.mint,
                   window.maxt};
  Patch patch = Patch::empty(scene.bands, bbox, scene.crs, res, fill);
  patch.sample_type = scene.sample_type;
  patch.shape = {row_hi - row_lo, col_hi - col_lo};
  patch.samples.assign(static_cast<std::size_t>(scene.bands) * patch.plane_size(), fill);
  patch.valid.assign(patch.plane_size(), 0);

  const std::int64_t r0 = std::max<std::int64_t>(row_lo, 0);
  const std::int64_t r1 = std::min<std::int64_t>(row_hi, scene.shape.rows);
  const std::int64_t c0 = std::max<std::int64_t>(col_lo, 0);
  const std::int64_t c1 = std::min<std::int64_t>(col_hi, scene.shape.cols);
  if (r0 >= r1 || c0 >= c1) {
    return patch;
  }

  const std::int64_t bw = scene.block_layout.block_width;
  const std::int64_t bh = scene.block_layout.block_height;
  const std::size_t plane = patch.plane_size();
  const std::int64_t pcols = patch.cols();
  for (int band = 0; band < scene.bands; ++band) {
    float* dst_plane = patch.samples.data() + static_cast<std::size_t>(band) * plane;
    for (std::int64_t brow = r0 / bh; brow <= (r1 - 1) / bh; ++brow) {
      for (std::int64_t bcol = c0 / bw; bcol <= (c1 - 1) / bw; ++bcol) {
        const auto block = read_block(scene, band, brow, bcol, cache);
        const std::int64_t rr0 = std::max(r0, brow * bh);
        const std::int64_t rr1 = std::min(r1, (brow + 1) * bh);
        const std::int64_t cc0 = std::max(c0, bcol * bw);
        const std::int64_t cc1 = std::min(c1, (bcol + 1) * bw);
        for (std::int64_t r = rr0; r < rr1; ++r) {
          float* dst = dst_plane + (r - row_lo) * pcols + (cc0 - col_lo);
          block->read_row(r - brow * bh, cc0 - bcol * bw,
                          std::span<float>(dst, static_cast<std::size_t>(cc1 - cc0)));
        }
      }
    }
  }

  for (std::int64_t r = r0; r < r1; ++r) {
    for (std::int64_t c = c0; c < c1; ++c) {
      const std::size_t idx = static_cast<std::size_t>((r - row_lo) * pcols + (c - col_lo));
      bool valid = true;
      if (scene.nodata) {
        valid = false;
        for (int b = 0; b < scene.bands && !valid; ++b) {
          valid = !is_nodata(patch.samples[b * plane + idx], *scene.nodata);
        }
      }
      patch.valid[idx] = valid ? 1 : 0;
      if (!valid) {
        for (int b = 0; b < scene.bands; ++b) {
          patch.samples[b * plane + idx] = fill;
        }
      }
    }
  }
  return patch;
}

Patch resample(const Patch& src, const CrsDef& dst_crs, const BoundingBox& dst_bbox,
               const Resolution& dst_res, const ResampleOptions& options) {
  Patch dst = Patch::empty(src.bands, dst_bbox, dst_crs, dst_res, options.fill);
  dst.sample_type = src.sample_type;
  const GeoTransform dst_gt = dst.transform();
  const RowMapper mapper(dst_crs, src.crs, src.transform(), options.max_error_px);
  const std::int64_t cols = dst.cols();
  const std::size_t plane = dst.plane_size();
  const bool nearest = options.method == ResampleMethod::Nearest;

  kernels::for_each_row(options.policy, dst.rows(), [&](std::int64_t row) {
    std::vector<SrcCoord> coords(static_cast<std::size_t>(cols));
    const WorldPoint first = dst_gt.pixel_to_world(static_cast<double>(row) + 0.5, 0.5);
    mapper.map_row(first.y, first.x, dst_gt.dx, coords);
    for (std::int64_t c = 0; c < cols; ++c) {
      const std::size_t idx = static_cast<std::size_t>(row * cols + c);
      const SrcCoord& sc = coords[static_cast<std::size_t>(c)];
      bool ok = false;
      if (sc.ok) {
        float* out = dst.samples.data() + idx;
        ok = nearest ? sample_nearest(src, sc.row, sc.col, out, plane)
                     : sample_bilinear(src, sc.row, sc.col, out, plane);
      }
      dst.valid[idx] = ok ? 1 : 0;
      if (!ok) {
        for (int b = 0; b < dst.bands; ++b) {
          dst.samples[b * plane + idx] = options.fill;
        }
      }
    }
  });
  return dst;
}

namespace kernels {

Patch resample_reference(const Patch& src, const CrsDef& dst_crs, const BoundingBox& dst_bbox,
                         const Resolution& dst_res, ResampleMethod method, float fill) {
  Patch dst = Patch::empty(src.bands, dst_bbox, dst_crs, dst_res, fill);
  dst.sample_type = src.sample_type;
  const GeoTransform dst_gt = dst.transform();
  const GeoTransform src_gt = src.transform();
  for (std::int64_t i = 0; i < dst.rows(); ++i) {
    for (std::int64_t j = 0; j < dst.cols(); ++j) {
      const WorldPoint w =
          dst_gt.pixel_to_world(static_cast<double>(i) + 0.5, static_cast<double>(j) + 0.5);
      ProjXY s{};
      try {
        s = transform_point(dst_crs, src.crs, {w.x, w.y});
      } catch (const Error&) {
        continue;
      }
      const PixelCoord f = src_gt.world_to_pixel(s.x, s.y);
      std::vector<double> value(static_cast<std::size_t>(src.bands), 0.0);
      bool ok = false;
      if (method == ResampleMethod::Nearest) {
        const auto r = static_cast<std::int64_t>(std::floor(f.row));
        const auto c = static_cast<std::int64_t>(std::floor(f.col));
        if (r >= 0 && c >= 0 && r < src.rows() && c < src.cols() && src.is_valid(r, c)) {
          for (int b = 0; b < src.bands; ++b) {
            value[b] = src.at(b, r, c);
          }
          ok = true;
        }
      } else {
        const double fy = f.row - 0.5;
        const double fx = f.col - 0.5;
        const double y0 = std::floor(fy);
        const double x0 = std::floor(fx);
        double wsum = 0.0;
        for (int di = 0; di < 2; ++di) {
          for (int dj = 0; dj < 2; ++dj) {
            const double wy = di == 0 ? 1.0 - (fy - y0) : fy - y0;
            const double wx = dj == 0 ? 1.0 - (fx - x0) : fx - x0;
            const double w = wy * wx;
            const auto r = static_cast<std::int64_t>(y0) + di;
            const auto c = static_cast<std::int64_t>(x0) + dj;
            if (w <= 0.0 || r < 0 || c < 0 || r >= src.rows() || c >= src.cols() ||
                !src.is_valid(r, c)) {
              continue;
            }
            wsum += w;
            for (int b = 0; b < src.bands; ++b) {
              value[b] += w * static_cast<double>(src.at(b, r, c));
            }
          }
        }
        if (wsum > 0.0) {
          for (auto& v : value) {
            v /= wsum;
          }
          ok = true;
        }
      }
      if (ok) {
        dst.valid[static_cast<std::size_t>(i * dst.cols() + j)] = 1;
        for (int b = 0; b < src.bands; ++b) {
          dst.at(b, i, j) = static_cast<float>(value[b]);
        }
      }
    }
  }
  return dst;
}

}  // namespace kernels

BoundingBox source_window(const CrsDef& scene_crs, const CrsDef& dst_crs,
                          const BoundingBox& dst_bbox) {
  return transform_bbox(dst_crs, scene_crs, dst_bbox);
}

Patch warp_scene(const SceneMetadata& scene, const CrsDef& dst_crs, const BoundingBox& dst_bbox,
                 const Resolution& dst_res, BlockCache& cache, const ResampleOptions& options) {
  BoundingBox window;
  try {
    window = source_window(scene.crs, dst_crs, dst_bbox);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::OutOfDomain) {
      throw;
    }
    window = scene.bounds();  // fall back to the whole scene; unmappable pixels become invalid
  }
  BoundingBox scene_box = scene.bounds();
  scene_box.mint = window.mint;
  scene_box.maxt = window.maxt;
  if (!window.intersects(scene_box)) {
    Patch out = Patch::empty(scene.bands, dst_bbox, dst_crs, dst_res, options.fill);
    out.sample_type = scene.sample_type;
    return out;
  }
  const Patch src = read_window(scene, window, cache, 1, options.fill);
  return resample(src, dst_crs, dst_bbox, dst_res, options);
}

void warp_to_file(const SceneMetadata& scene, const std::filesystem::path& dst,
                  const CrsDef& dst_crs, const BoundingBox& dst_bbox, const GridShape& shape,
                  BlockCache& cache, const WarpFileOptions& options) {
  if (shape.rows < 1 || shape.cols < 1 || !(dst_bbox.width() > 0.0) ||
      !(dst_bbox.height() > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "warp target grid is empty");
  }
  const Resolution res(dst_bbox.width() / static_cast<double>(shape.cols),
                       dst_bbox.height() / static_cast<double>(shape.rows));
  const GeoTransform gt{dst_bbox.minx, dst_bbox.maxy, res.xres, -res.yres};
  const std::optional<double> nodata = options.nodata ? options.nodata : scene.nodata;
  ResampleOptions ro = options.resample;
  if (nodata) {
    ro.fill = static_cast<float>(*nodata);
  }
  TiledTiffWriter writer(dst, {shape, scene.bands, options.sample_type.value_or(scene.sample_type),
                               gt, dst_crs, nodata, options.tile_size, options.compression});
  for (std::int64_t tr = 0; tr < writer.tile_rows(); ++tr) {
    const std::int64_t n = writer.rows_in_tile_row(tr);
    const double maxy = gt.origin_y + static_cast<double>(tr * options.tile_size) * gt.dy;
    BoundingBox strip{dst_bbox.minx, dst_bbox.maxx, maxy + static_cast<double>(n) * gt.dy, maxy,
                      dst_bbox.mint, dst_bbox.maxt};
    const Patch p = warp_scene(scene, dst_crs, strip, res, cache, ro);
    if (p.rows() != n || p.cols() != shape.cols) {
      throw Error(ErrorCode::InvalidArgument, "strip grid does not match the target grid");
    }
    writer.write_tile_row(tr, p.samples);
  }
  writer.finish();
}

}  // namespace geopatch
