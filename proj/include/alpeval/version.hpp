#pragma once

namespace alpeval {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace alpeval
