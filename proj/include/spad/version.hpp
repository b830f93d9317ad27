#pragma once

#include <string_view>

namespace spad {

inline constexpr std::string_view kToolName = "spadchar";
inline constexpr std::string_view kToolVersion = "0.1.0";

}  // namespace spad
