#pragma once

namespace netdyn {

inline constexpr const char* kToolName = "netdyn";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kPrngName = "xoshiro256starstar";

} // namespace netdyn
