#pragma once

namespace exitsim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace exitsim
