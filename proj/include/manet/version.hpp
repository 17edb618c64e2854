#pragma once

namespace manet {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace manet
