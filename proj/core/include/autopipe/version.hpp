#pragma once

namespace autopipe {

inline constexpr const char* kToolName = "autopipe";
inline constexpr const char* kToolVersion = "0.1.0";

} // namespace autopipe
