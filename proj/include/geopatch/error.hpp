#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace geopatch {

enum class ErrorCode {
  InvalidArgument,
  EmptyIntersection,
  OutOfDomain,
  UnsupportedFormat,
  CorruptFile,
  IoError,
  ParseError,
  UnsupportedGeometry,
  NoScenesFound,
  QueryOutsideBounds,
  PatchLargerThanExtent,
  PatchLargerThanScene,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every engine failure surfaces as a geopatch::Error carrying a code that
/// callers can branch on; what() is "<CodeName>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace geopatch
