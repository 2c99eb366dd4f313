#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geopatch/geo_core.hpp"

namespace geopatch {

class GeoDataset;

/// PCG32 (XSH RR 64/32) with a fixed stream, seeded like the reference
/// pcg32_srandom_r(seed, 54).
class Pcg32 {
 public:
  static constexpr std::uint64_t kStream = 54;

  explicit Pcg32(std::uint64_t seed = 0);

  std::uint32_t next() noexcept;
  /// Uniform double in [0, 1) built from two outputs.
  double uniform() noexcept;

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 0;
};

enum class PatchUnit { Pixels, Crs };
enum class ExtentMode { Hull, SceneFootprints };
enum class SamplerKind { Random, RandomBatch, Grid };

SamplerKind parse_sampler_kind(std::string_view text);
std::string_view to_string(SamplerKind k) noexcept;
ExtentMode parse_extent_mode(std::string_view text);
PatchUnit parse_patch_unit(std::string_view text);

struct SamplerConfig {
  double patch_width = 224.0;
  double patch_height = 224.0;
  double stride_x = 112.0;
  double stride_y = 112.0;
  /// Unit of patch and stride sizes; pixels are converted with the dataset resolution.
  PatchUnit unit = PatchUnit::Pixels;
  std::int64_t length = 4096;
  std::int64_t batch_size = 1;
  std::uint64_t seed = 0;
  std::optional<BoundingBox> roi;
  ExtentMode extent_mode = ExtentMode::SceneFootprints;

  void validate() const;
};

/// What samplers need to know about a dataset.
struct SamplerInput {
  std::vector<BoundingBox> footprints;
  BoundingBox hull;
  Resolution res;

  static SamplerInput from(const GeoDataset& d);
};

/// Number of grid positions along one axis, including the flush position.
std::int64_t grid_positions(double extent, double patch, double stride);

/// `cfg.length` boxes of exact patch size.
/// Errors: PatchLargerThanExtent.
std::vector<BoundingBox> random_sampler(const SamplerInput& in, const SamplerConfig& cfg);

/// ceil(length / batch_size) batches; all boxes of a batch lie in one scene.
/// Scenes smaller than the patch are skipped and reported in `warnings`.
/// Errors: PatchLargerThanScene when every scene is skipped.
std::vector<std::vector<BoundingBox>> random_batch_sampler(
    const SamplerInput& in, const SamplerConfig& cfg, std::vector<std::string>* warnings = nullptr);

/// Raster-order grid over every footprint, top-left first, with a flush
/// row and column against the far edges. `cfg.length` is ignored.
std::vector<BoundingBox> grid_sampler(const SamplerInput& in, const SamplerConfig& cfg);

/// Custom samplers implement this to plug into the CLI and benchmark.
class GeoSampler {
 public:
  virtual ~GeoSampler() = default;
  virtual std::vector<std::vector<BoundingBox>> batches() const = 0;
};

/// Random and grid samplers group consecutive boxes into batches of
/// `cfg.batch_size`.
std::unique_ptr<GeoSampler> make_sampler(SamplerKind kind, SamplerInput in, SamplerConfig cfg);

/// FNV-1a over the bit patterns of every box coordinate, in order.
std::uint64_t sequence_hash(const std::vector<std::vector<BoundingBox>>& batches);
std::uint64_t sequence_hash(const std::vector<BoundingBox>& boxes);

}  // namespace geopatch
