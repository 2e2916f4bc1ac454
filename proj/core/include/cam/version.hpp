#pragma once

namespace cam {

inline constexpr const char* version = "0.1.0";

}  // namespace cam
