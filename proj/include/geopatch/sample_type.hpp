#pragma once

#include <cstddef>
#include <string_view>

namespace geopatch {

enum class SampleType { U8, U16, I16, F32 };

std::size_t sample_size(SampleType t) noexcept;
std::string_view to_string(SampleType t) noexcept;
SampleType parse_sample_type(std::string_view text);
/// Round to nearest and clamp into the representable range of `t`.
float quantize(float v, SampleType t) noexcept;

}  // namespace geopatch
