#pragma once

namespace subcov {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace subcov
