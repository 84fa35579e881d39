// SPDX-License-Identifier: Apache-2.0
#include "perimod/util.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

namespace perimod {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

namespace {

std::optional<std::uint64_t> parse_with_base(std::string_view digits, int base) {
    if (digits.empty())
        return std::nullopt;
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value, base);
    if (ec != std::errc{} || ptr != digits.data() + digits.size())
        return std::nullopt;
    return value;
}

} // namespace

std::optional<std::uint64_t> parse_plain_int(std::string_view text) {
    std::string_view s = trim(text);
    if (s.size() > 2 && (s.substr(0, 2) == "0x" || s.substr(0, 2) == "0X"))
        return parse_with_base(s.substr(2), 16);
    return parse_with_base(s, 10);
}

std::optional<std::uint64_t> parse_c_literal(std::string_view text) {
    std::string_view s = trim(text);
    if (s.empty())
        return std::nullopt;
    // strip integer suffixes (u/U, l/L, ll/LL in any legal combination)
    std::size_t end = s.size();
    int ls = 0, us = 0;
    while (end > 0) {
        char c = s[end - 1];
        if (c == 'u' || c == 'U') {
            if (++us > 1)
                return std::nullopt;
            --end;
        } else if (c == 'l' || c == 'L') {
            if (++ls > 2)
                return std::nullopt;
            --end;
        } else {
            break;
        }
    }
    s = s.substr(0, end);
    if (s.empty())
        return std::nullopt;
    if (s.size() > 2 && (s.substr(0, 2) == "0x" || s.substr(0, 2) == "0X"))
        return parse_with_base(s.substr(2), 16);
    if (s.size() > 1 && s[0] == '0')
        return parse_with_base(s.substr(1), 8);
    return parse_with_base(s, 10);
}

std::string to_hex(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace perimod
