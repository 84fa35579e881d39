// SPDX-License-Identifier: Apache-2.0
//
// Constant-expression evaluation and the resolution cascade turning raw
// response strings into integers.

#include "perimod/resolver.hpp"

#include "lex.hpp"
#include "perimod/errors.hpp"
#include "perimod/util.hpp"

#include <functional>
#include <optional>

namespace perimod {

using detail::Token;

namespace {

using Lookup = std::function<std::optional<std::uint64_t>(std::string_view)>;

/// Recursive-descent parser over C operator precedence, evaluating as it
/// goes. Unsigned 64-bit wraparound; shift counts >= 64 yield 0; division and
/// modulo by zero are resolution failures.
struct ExprEval {
    const std::vector<Token>& t;
    const Lookup& lookup;
    std::size_t pos = 0;

    const Token& cur() const { return t[pos]; }

    bool punct(const char* p) const {
        return cur().kind == Token::Kind::Punct && cur().text == p;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ResolveError(what);
    }

    std::uint64_t parse() {
        std::uint64_t v = parse_or();
        if (cur().kind != Token::Kind::End)
            fail("unexpected token '" + cur().text + "' after expression");
        return v;
    }

    std::uint64_t parse_or() {
        std::uint64_t v = parse_xor();
        while (punct("|")) {
            ++pos;
            v |= parse_xor();
        }
        return v;
    }

    std::uint64_t parse_xor() {
        std::uint64_t v = parse_and();
        while (punct("^")) {
            ++pos;
            v ^= parse_and();
        }
        return v;
    }

    std::uint64_t parse_and() {
        std::uint64_t v = parse_shift();
        while (punct("&")) {
            ++pos;
            v &= parse_shift();
        }
        return v;
    }

    std::uint64_t parse_shift() {
        std::uint64_t v = parse_additive();
        while (punct("<<") || punct(">>")) {
            bool left = cur().text == "<<";
            ++pos;
            std::uint64_t s = parse_additive();
            if (s >= 64)
                v = 0;
            else
                v = left ? (v << s) : (v >> s);
        }
        return v;
    }

    std::uint64_t parse_additive() {
        std::uint64_t v = parse_mult();
        while (punct("+") || punct("-")) {
            bool add = cur().text == "+";
            ++pos;
            std::uint64_t rhs = parse_mult();
            v = add ? (v + rhs) : (v - rhs);
        }
        return v;
    }

    std::uint64_t parse_mult() {
        std::uint64_t v = parse_unary();
        while (punct("*") || punct("/") || punct("%")) {
            char op = cur().text[0];
            ++pos;
            std::uint64_t rhs = parse_unary();
            if (op == '*') {
                v *= rhs;
            } else {
                if (rhs == 0)
                    fail(op == '/' ? "division by zero" : "modulo by zero");
                v = op == '/' ? v / rhs : v % rhs;
            }
        }
        return v;
    }

    std::uint64_t parse_unary() {
        if (punct("-")) {
            ++pos;
            return 0 - parse_unary();
        }
        if (punct("~")) {
            ++pos;
            return ~parse_unary();
        }
        if (punct("+")) {
            ++pos;
            return parse_unary();
        }
        return parse_primary();
    }

    bool starts_operand(const Token& tok) const {
        if (tok.kind == Token::Kind::Number || tok.kind == Token::Kind::Ident)
            return true;
        if (tok.kind == Token::Kind::Punct)
            return tok.text == "(" || tok.text == "-" || tok.text == "~" || tok.text == "+";
        return false;
    }

    std::uint64_t parse_primary() {
        if (cur().kind == Token::Kind::Number) {
            std::uint64_t v = cur().value;
            ++pos;
            return v;
        }
        if (cur().kind == Token::Kind::Ident) {
            auto v = lookup(cur().text);
            if (!v)
                fail("unknown identifier '" + cur().text + "'");
            ++pos;
            return *v;
        }
        if (punct("(")) {
            // A parenthesized type name followed by an operand is a cast;
            // casts are no-ops here and are simply skipped.
            std::size_t j = pos + 1;
            while (t[j].kind == Token::Kind::Ident && detail::is_type_word(t[j].text))
                ++j;
            if (j > pos + 1 && t[j].kind == Token::Kind::Punct && t[j].text == ")" &&
                starts_operand(t[j + 1])) {
                pos = j + 1;
                return parse_unary();
            }
            ++pos;
            std::uint64_t v = parse_or();
            if (!punct(")"))
                fail("missing ')'");
            ++pos;
            return v;
        }
        if (cur().kind == Token::Kind::End)
            fail("unexpected end of expression");
        fail("unexpected token '" + cur().text + "'");
    }
};

std::uint64_t eval_text(std::string_view text, const Lookup& lookup) {
    std::string err;
    std::vector<Token> tokens = detail::lex(text, &err);
    if (!err.empty())
        throw ResolveError(err);
    if (tokens.size() == 1)
        throw ResolveError("empty expression");
    ExprEval ev{tokens, lookup, 0};
    return ev.parse();
}

} // namespace

namespace detail_eval {

std::uint64_t eval_with_lookup(std::string_view text, const Lookup& lookup) {
    return eval_text(text, lookup);
}

} // namespace detail_eval

std::uint64_t eval_const_expr(std::string_view text, const SymbolTable& table) {
    return eval_text(text, [&table](std::string_view name) -> std::optional<std::uint64_t> {
        const Symbol* s = table.lookup(name);
        if (!s)
            return std::nullopt;
        return s->value;
    });
}

std::uint64_t resolve_value(std::string_view text, const SymbolTable& table) {
    std::string_view s = trim(text);
    std::vector<std::string> trace;

    if (auto v = parse_c_literal(s)) {
        return *v;
    }
    trace.push_back("literal: '" + std::string(s) + "' is not an integer literal");

    if (detail::is_identifier(s)) {
        if (const Symbol* sym = table.lookup(s))
            return sym->value;
        trace.push_back("symbol: '" + std::string(s) + "' not found in the symbol table");
    } else {
        trace.push_back("symbol: not a single identifier");
    }

    try {
        return eval_const_expr(s, table);
    } catch (const ResolveError& e) {
        trace.push_back(std::string("expression: ") + e.what());
    }

    std::string msg = "cannot resolve '" + std::string(s) + "'";
    for (const auto& step : trace)
        msg += "\n  " + step;
    throw ResolveError(msg, std::move(trace));
}

ValueResolver symbol_resolver(const SymbolTable& table) {
    return [&table](const nlohmann::ordered_json& scalar,
                    const std::string& path) -> std::uint64_t {
        if (scalar.is_number_unsigned())
            return scalar.get<std::uint64_t>();
        if (scalar.is_number_integer()) {
            auto v = scalar.get<std::int64_t>();
            if (v < 0)
                throw ResolveError(path + ": negative value");
            return static_cast<std::uint64_t>(v);
        }
        if (scalar.is_string())
            return resolve_value(scalar.get<std::string>(), table);
        throw ResolveError(path + ": expected an integer or a resolvable string");
    };
}

std::variant<ModelInstance, std::vector<DeviceInstance>>
resolve_instance(const nlohmann::ordered_json& raw, const SymbolTable& table,
                 const SchemaRegistry& registry, const ParseOptions& opts, ParseReport* report) {
    ValueResolver resolver = symbol_resolver(table);
    if (raw.is_object() && raw.contains("instances"))
        return build_device_instances(raw, registry, opts, resolver, report);
    return build_model_instance(raw, registry, opts, resolver, report);
}

} // namespace perimod
