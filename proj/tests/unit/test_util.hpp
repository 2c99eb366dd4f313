#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "geopatch/patch.hpp"

namespace geopatch::test {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("geopatch_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Fully valid patch on the grid (bbox, res) filled by f(band, row, col).
template <class F>
Patch make_patch(int bands, const BoundingBox& bbox, const CrsDef& crs, const Resolution& res,
                 SampleType type, F&& f) {
  Patch p = Patch::empty(bands, bbox, crs, res);
  p.sample_type = type;
  std::fill(p.valid.begin(), p.valid.end(), std::uint8_t{1});
  for (int b = 0; b < bands; ++b) {
    for (std::int64_t r = 0; r < p.rows(); ++r) {
      for (std::int64_t c = 0; c < p.cols(); ++c) {
        p.at(b, r, c) = static_cast<float>(f(b, r, c));
      }
    }
  }
  return p;
}

}  // namespace geopatch::test
