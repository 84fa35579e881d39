// SPDX-License-Identifier: Apache-2.0
//
// Internal C-ish token scanner shared by the header scanner and the constant
// expression evaluator. Not installed.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace perimod::detail {

struct Token {
    enum class Kind { Ident, Number, Punct, End };
    Kind kind = Kind::End;
    std::string text;
    std::uint64_t value = 0; // Kind::Number
    int line = 0;
};

/// Replace comments with spaces, preserving newlines and length. String and
/// character literal contents are left untouched.
std::string strip_comments(std::string_view text);

/// Tokenize comment-stripped text. Unlexable input (bad literal, stray char)
/// puts a message in `error` and returns what was lexed so far.
std::vector<Token> lex(std::string_view text, std::string* error);

/// Words that may appear inside a cast like (unsigned long) or (uint32_t).
bool is_type_word(std::string_view w);

bool is_identifier(std::string_view s);

} // namespace perimod::detail
