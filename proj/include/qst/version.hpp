#pragma once

namespace qst {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kStateFormat = "pauli-state v1";
inline constexpr const char* kCountsFormat = "pauli-counts v1";

} // namespace qst
