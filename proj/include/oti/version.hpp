#pragma once

namespace oti {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace oti
