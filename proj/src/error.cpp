#include "geopatch/error.hpp"

namespace geopatch {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnsupportedGeometry: return "UnsupportedGeometry";
    case ErrorCode::NoScenesFound: return "NoScenesFound";
    case ErrorCode::QueryOutsideBounds: return "QueryOutsideBounds";
    case ErrorCode::PatchLargerThanExtent: return "PatchLargerThanExtent";
    case ErrorCode::PatchLargerThanScene: return "PatchLargerThanScene";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

}  // namespace geopatch
