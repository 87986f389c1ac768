#pragma once

namespace tbm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace tbm
