// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace perimod {

/// All ones in the low `width_bits` bits (width_bits in [1,64]).
inline std::uint64_t width_mask(unsigned width_bits) {
    return width_bits >= 64 ? ~0ull : ((1ull << width_bits) - 1);
}

/// Parse a plain instance-format integer: decimal or 0x-prefixed hex,
/// surrounding whitespace allowed. No sign, no suffixes.
std::optional<std::uint64_t> parse_plain_int(std::string_view text);

/// Parse a C-style integer literal: decimal, 0x hex or leading-0 octal, with
/// optional U/L/UL/LL/ULL-style suffixes. Used on driver-code material.
std::optional<std::uint64_t> parse_c_literal(std::string_view text);

std::string to_hex(std::uint64_t v);

std::string_view trim(std::string_view s);

} // namespace perimod
