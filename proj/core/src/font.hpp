#pragma once

#include <array>
#include <cstdint>

namespace dmriqc::detail {

inline constexpr int kGlyphWidth = 5;
inline constexpr int kGlyphHeight = 7;

/// Seven rows, bit 4 is the leftmost column.
auto glyph_rows(char c) -> const std::array<std::uint8_t, 7> &;

} // namespace dmriqc::detail
