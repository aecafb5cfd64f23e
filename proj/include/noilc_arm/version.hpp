#pragma once

namespace noilc_arm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace noilc_arm
