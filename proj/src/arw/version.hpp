#pragma once

namespace arw {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace arw
