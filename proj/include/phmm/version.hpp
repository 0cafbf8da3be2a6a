#pragma once

namespace phmm {

inline constexpr const char* kVersion = "phmm 0.1.0";

}  // namespace phmm
