#pragma once

namespace bimcore {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kToolName = "bimcore";

} // namespace bimcore
