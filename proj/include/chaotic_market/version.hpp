#pragma once

#include <string_view>

namespace chaotic_market {

inline constexpr std::string_view kVersion = "0.1.0";

}  // namespace chaotic_market
