#pragma once

namespace choquard {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace choquard
