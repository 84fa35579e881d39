// SPDX-License-Identifier: Apache-2.0
#include "lex.hpp"

#include "perimod/util.hpp"

#include <cctype>
#include <set>

namespace perimod::detail {

std::string strip_comments(std::string_view text) {
    std::string out(text);
    enum class St { Code, Line, Block, Str, Chr } st = St::Code;
    for (std::size_t i = 0; i < out.size(); ++i) {
        char c = out[i];
        char n = i + 1 < out.size() ? out[i + 1] : '\0';
        switch (st) {
        case St::Code:
            if (c == '/' && n == '/') {
                st = St::Line;
                out[i] = ' ';
            } else if (c == '/' && n == '*') {
                st = St::Block;
                out[i] = ' ';
            } else if (c == '"') {
                st = St::Str;
            } else if (c == '\'') {
                st = St::Chr;
            }
            break;
        case St::Line:
            if (c == '\n')
                st = St::Code;
            else
                out[i] = ' ';
            break;
        case St::Block:
            if (c == '*' && n == '/') {
                out[i] = ' ';
                out[i + 1] = ' ';
                ++i;
                st = St::Code;
            } else if (c != '\n') {
                out[i] = ' ';
            }
            break;
        case St::Str:
            if (c == '\\')
                ++i;
            else if (c == '"')
                st = St::Code;
            break;
        case St::Chr:
            if (c == '\\')
                ++i;
            else if (c == '\'')
                st = St::Code;
            break;
        }
    }
    return out;
}

bool is_type_word(std::string_view w) {
    static const std::set<std::string, std::less<>> words{
        "unsigned", "signed", "int",      "long",     "short",    "char",     "const",
        "uint8_t",  "uint16_t", "uint32_t", "uint64_t", "int8_t",  "int16_t",  "int32_t",
        "int64_t",  "u8",       "u16",      "u32",      "u64",     "s8",       "s16",
        "s32",      "s64",      "size_t",   "uintptr_t", "intptr_t", "uint",   "ulong",
    };
    return words.count(w) != 0;
}

bool is_identifier(std::string_view s) {
    if (s.empty())
        return false;
    if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_')
        return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_')
            return false;
    return true;
}

std::vector<Token> lex(std::string_view text, std::string* error) {
    std::vector<Token> out;
    int line = 1;
    std::size_t i = 0;
    auto peek = [&](std::size_t k) { return i + k < text.size() ? text[i + k] : '\0'; };
    while (i < text.size()) {
        char c = text[i];
        if (c == '\n') {
            ++line;
            ++i;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = i;
            while (i < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_'))
                ++i;
            out.push_back(Token{Token::Kind::Ident, std::string(text.substr(start, i - start)), 0,
                                line});
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t start = i;
            while (i < text.size() && (std::isalnum(static_cast<unsigned char>(text[i])) ||
                                       text[i] == '_' || text[i] == '.'))
                ++i;
            std::string lit(text.substr(start, i - start));
            auto v = perimod::parse_c_literal(lit);
            if (!v) {
                if (error)
                    *error = "bad integer literal '" + lit + "'";
                return out;
            }
            out.push_back(Token{Token::Kind::Number, lit, *v, line});
            continue;
        }
        // multi-char operators first
        std::string punct;
        if ((c == '<' && peek(1) == '<') || (c == '>' && peek(1) == '>')) {
            punct = std::string{c, c};
            i += 2;
        } else {
            punct = std::string{c};
            ++i;
        }
        out.push_back(Token{Token::Kind::Punct, punct, 0, line});
    }
    out.push_back(Token{Token::Kind::End, "", 0, line});
    return out;
}

} // namespace perimod::detail
