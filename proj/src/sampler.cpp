#include "geopatch/sampler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "geopatch/dataset.hpp"
#include "geopatch/error.hpp"

namespace geopatch {

namespace {

constexpr double kTol = 1e-9;

struct Size2 {
  double w;
  double h;
};

Size2 patch_size(const SamplerConfig& cfg, const Resolution& res) {
  if (cfg.unit == PatchUnit::Pixels) {
    return {cfg.patch_width * res.xres, cfg.patch_height * res.yres};
  }
  return {cfg.patch_width, cfg.patch_height};
}

Size2 stride_size(const SamplerConfig& cfg, const Resolution& res) {
  if (cfg.unit == PatchUnit::Pixels) {
    return {cfg.stride_x * res.xres, cfg.stride_y * res.yres};
  }
  return {cfg.stride_x, cfg.stride_y};
}

bool fits(const BoundingBox& b, const Size2& p) {
  return b.width() >= p.w * (1.0 - kTol) && b.height() >= p.h * (1.0 - kTol);
}

std::vector<BoundingBox> clip_to_roi(const std::vector<BoundingBox>& boxes,
                                     const std::optional<BoundingBox>& roi) {
  if (!roi) {
    return boxes;
  }
  std::vector<BoundingBox> out;
  for (const auto& b : boxes) {
    if (b.intersects(*roi)) {
      out.push_back(bbox_intersection(b, *roi));
    }
  }
  return out;
}

// Places an interval of length `len` starting at lo + u * (hi - lo - len),
// kept inside [lo, hi].
std::pair<double, double> place(double lo, double hi, double len, double u) {
  if (len >= hi - lo) {
    return {lo, hi};
  }
  double a = lo + u * ((hi - lo) - len);
  double b = a + len;
  if (b > hi) {
    b = hi;
    a = hi - len;
  }
  if (a < lo) {
    a = lo;
  }
  return {a, b};
}

BoundingBox random_box(const BoundingBox& extent, const Size2& p, Pcg32& rng) {
  const double ux = rng.uniform();
  const double uy = rng.uniform();
  const auto [x0, x1] = place(extent.minx, extent.maxx, p.w, ux);
  const auto [y0, y1] = place(extent.miny, extent.maxy, p.h, uy);
  return {x0, x1, y0, y1, extent.mint, extent.maxt};
}

// Area-weighted choice among `boxes`.
std::size_t pick(const std::vector<BoundingBox>& boxes, const std::vector<double>& cumulative,
                 Pcg32& rng) {
  const double u = rng.uniform() * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()),
                               boxes.size() - 1);
}

std::vector<double> cumulative_area(const std::vector<BoundingBox>& boxes) {
  std::vector<double> c;
  double total = 0.0;
  for (const auto& b : boxes) {
    total += b.area();
    c.push_back(total);
  }
  return c;
}

std::vector<double> axis_offsets(double extent, double patch, double stride) {
  std::vector<double> out;
  if (extent < patch * (1.0 - kTol)) {
    out.push_back((extent - patch) / 2.0);
    return out;
  }
  const auto n = static_cast<std::int64_t>(std::floor((extent - patch) / stride + kTol)) + 1;
  for (std::int64_t k = 0; k < n; ++k) {
    out.push_back(static_cast<double>(k) * stride);
  }
  const double last_end = out.back() + patch;
  if (last_end < extent - kTol * std::max(1.0, extent)) {
    out.push_back(extent - patch);
  }
  return out;
}

class BatchedSampler final : public GeoSampler {
 public:
  BatchedSampler(SamplerKind kind, SamplerInput in, SamplerConfig cfg)
      : kind_(kind), in_(std::move(in)), cfg_(std::move(cfg)) {}

  std::vector<std::vector<BoundingBox>> batches() const override {
    if (kind_ == SamplerKind::RandomBatch) {
      return random_batch_sampler(in_, cfg_);
    }
    const auto boxes =
        kind_ == SamplerKind::Random ? random_sampler(in_, cfg_) : grid_sampler(in_, cfg_);
    std::vector<std::vector<BoundingBox>> out;
    const auto bs = static_cast<std::size_t>(cfg_.batch_size);
    for (std::size_t i = 0; i < boxes.size(); i += bs) {
      out.emplace_back(boxes.begin() + static_cast<std::ptrdiff_t>(i),
                       boxes.begin() + static_cast<std::ptrdiff_t>(std::min(i + bs, boxes.size())));
    }
    return out;
  }

 private:
  SamplerKind kind_;
  SamplerInput in_;
  SamplerConfig cfg_;
};

}  // namespace

Pcg32::Pcg32(std::uint64_t seed) {
  state_ = 0;
  inc_ = (kStream << 1u) | 1u;
  next();
  state_ += seed;
  next();
}

std::uint32_t Pcg32::next() noexcept {
  const std::uint64_t old = state_;
  state_ = old * 6364136223846793005ULL + inc_;
  const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
  const auto rot = static_cast<std::uint32_t>(old >> 59u);
  return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
}

double Pcg32::uniform() noexcept {
  const std::uint64_t hi = next();
  const std::uint64_t lo = next();
  return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1.0p-53;
}

SamplerKind parse_sampler_kind(std::string_view text) {
  if (text == "random") return SamplerKind::Random;
  if (text == "random-batch") return SamplerKind::RandomBatch;
  if (text == "grid") return SamplerKind::Grid;
  throw Error(ErrorCode::ParseError, "unknown sampler '" + std::string(text) + "'");
}

std::string_view to_string(SamplerKind k) noexcept {
  switch (k) {
    case SamplerKind::Random:
      return "random";
    case SamplerKind::RandomBatch:
      return "random-batch";
    case SamplerKind::Grid:
      return "grid";
  }
  return "?";
}

ExtentMode parse_extent_mode(std::string_view text) {
  if (text == "hull") return ExtentMode::Hull;
  if (text == "scene-footprints") return ExtentMode::SceneFootprints;
  throw Error(ErrorCode::ParseError, "unknown extent mode '" + std::string(text) + "'");
}

PatchUnit parse_patch_unit(std::string_view text) {
  if (text == "px" || text == "pixels") return PatchUnit::Pixels;
  if (text == "crs") return PatchUnit::Crs;
  throw Error(ErrorCode::ParseError, "unknown patch unit '" + std::string(text) + "'");
}

void SamplerConfig::validate() const {
  if (!(patch_width > 0.0) || !(patch_height > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "patch size must be positive");
  }
  if (!(stride_x > 0.0) || !(stride_y > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "stride must be positive");
  }
  if (length < 1) {
    throw Error(ErrorCode::InvalidArgument, "length must be at least 1");
  }
  if (batch_size < 1) {
    throw Error(ErrorCode::InvalidArgument, "batch_size must be at least 1");
  }
  if (roi && !roi->is_valid()) {
    throw Error(ErrorCode::InvalidArgument, "roi is not a valid box");
  }
}

SamplerInput SamplerInput::from(const GeoDataset& d) {
  return {d.footprints(), d.bounds(), d.res()};
}

std::int64_t grid_positions(double extent, double patch, double stride) {
  return static_cast<std::int64_t>(axis_offsets(extent, patch, stride).size());
}

std::vector<BoundingBox> random_sampler(const SamplerInput& in, const SamplerConfig& cfg) {
  cfg.validate();
  const Size2 p = patch_size(cfg, in.res);
  Pcg32 rng(cfg.seed);
  std::vector<BoundingBox> out;
  out.reserve(static_cast<std::size_t>(cfg.length));

  if (cfg.extent_mode == ExtentMode::Hull) {
    const auto clipped = clip_to_roi({in.hull}, cfg.roi);
    if (clipped.empty() || !fits(clipped.front(), p)) {
      throw Error(ErrorCode::PatchLargerThanExtent, "patch does not fit the sampling extent");
    }
    for (std::int64_t i = 0; i < cfg.length; ++i) {
      out.push_back(random_box(clipped.front(), p, rng));
    }
    return out;
  }

  std::vector<BoundingBox> eligible;
  for (const auto& b : clip_to_roi(in.footprints, cfg.roi)) {
    if (fits(b, p)) {
      eligible.push_back(b);
    }
  }
  if (eligible.empty()) {
    throw Error(ErrorCode::PatchLargerThanExtent, "patch does not fit any scene footprint");
  }
  const auto cum = cumulative_area(eligible);
  for (std::int64_t i = 0; i < cfg.length; ++i) {
    out.push_back(random_box(eligible[pick(eligible, cum, rng)], p, rng));
  }
  return out;
}

std::vector<std::vector<BoundingBox>> random_batch_sampler(const SamplerInput& in,
                                                           const SamplerConfig& cfg,
                                                           std::vector<std::string>* warnings) {
  cfg.validate();
  const Size2 p = patch_size(cfg, in.res);
  std::vector<BoundingBox> eligible;
  for (const auto& b : clip_to_roi(in.footprints, cfg.roi)) {
    if (fits(b, p)) {
      eligible.push_back(b);
    } else if (warnings) {
      warnings->push_back("scene " + b.to_string() + " is smaller than the patch; skipped");
    }
  }
  if (eligible.empty()) {
    throw Error(ErrorCode::PatchLargerThanScene, "every scene is smaller than the patch");
  }
  const auto cum = cumulative_area(eligible);
  Pcg32 rng(cfg.seed);
  const std::int64_t nbatches = (cfg.length + cfg.batch_size - 1) / cfg.batch_size;
  std::vector<std::vector<BoundingBox>> out;
  out.reserve(static_cast<std::size_t>(nbatches));
  for (std::int64_t i = 0; i < nbatches; ++i) {
    const BoundingBox& scene = eligible[pick(eligible, cum, rng)];
    std::vector<BoundingBox> batch;
    for (std::int64_t k = 0; k < cfg.batch_size; ++k) {
      batch.push_back(random_box(scene, p, rng));
    }
    out.push_back(std::move(batch));
  }
  return out;
}

std::vector<BoundingBox> grid_sampler(const SamplerInput& in, const SamplerConfig& cfg) {
  cfg.validate();
  const Size2 p = patch_size(cfg, in.res);
  const Size2 s = stride_size(cfg, in.res);
  std::vector<BoundingBox> out;
  for (const auto& fp : clip_to_roi(in.footprints, cfg.roi)) {
    const auto xs = axis_offsets(fp.width(), p.w, s.w);
    const auto ys = axis_offsets(fp.height(), p.h, s.h);
    for (std::size_t i = 0; i < ys.size(); ++i) {
      const bool flush_y = i + 1 == ys.size() && i > 0;
      const double maxy = flush_y ? fp.miny + p.h : fp.maxy - ys[i];
      for (std::size_t j = 0; j < xs.size(); ++j) {
        const bool flush_x = j + 1 == xs.size() && j > 0;
        const double minx = flush_x ? fp.maxx - p.w : fp.minx + xs[j];
        out.push_back({minx, minx + p.w, maxy - p.h, maxy, fp.mint, fp.maxt});
      }
    }
  }
  return out;
}

std::unique_ptr<GeoSampler> make_sampler(SamplerKind kind, SamplerInput in, SamplerConfig cfg) {
  cfg.validate();
  return std::make_unique<BatchedSampler>(kind, std::move(in), std::move(cfg));
}

std::uint64_t sequence_hash(const std::vector<BoundingBox>& boxes) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffu;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& b : boxes) {
    mix(b.minx);
    mix(b.maxx);
    mix(b.miny);
    mix(b.maxy);
    mix(b.mint);
    mix(b.maxt);
  }
  return h;
}

std::uint64_t sequence_hash(const std::vector<std::vector<BoundingBox>>& batches) {
  std::vector<BoundingBox> flat;
  for (const auto& b : batches) {
    flat.insert(flat.end(), b.begin(), b.end());
  }
  return sequence_hash(flat);
}

}  // namespace geopatch
