#include "geopatch/sample_type.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "geopatch/error.hpp"

namespace geopatch {

std::size_t sample_size(SampleType t) noexcept {
  switch (t) {
    case SampleType::U8: return 1;
    case SampleType::U16: return 2;
    case SampleType::I16: return 2;
    case SampleType::F32: return 4;
  }
  return 0;
}

std::string_view to_string(SampleType t) noexcept {
  switch (t) {
    case SampleType::U8: return "u8";
    case SampleType::U16: return "u16";
    case SampleType::I16: return "i16";
    case SampleType::F32: return "f32";
  }
  return "?";
}

SampleType parse_sample_type(std::string_view text) {
  if (text == "u8") return SampleType::U8;
  if (text == "u16") return SampleType::U16;
  if (text == "i16") return SampleType::I16;
  if (text == "f32") return SampleType::F32;
  throw Error(ErrorCode::ParseError, "unknown sample type '" + std::string(text) + "'");
}

float quantize(float v, SampleType t) noexcept {
  switch (t) {
    case SampleType::U8: return std::clamp(std::nearbyint(v), 0.0f, 255.0f);
    case SampleType::U16: return std::clamp(std::nearbyint(v), 0.0f, 65535.0f);
    case SampleType::I16: return std::clamp(std::nearbyint(v), -32768.0f, 32767.0f);
    case SampleType::F32: return v;
  }
  return v;
}

}  // namespace geopatch
