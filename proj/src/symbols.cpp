// SPDX-License-Identifier: Apache-2.0
//
// Harvesting integer constants from driver sources: object-like macros,
// enumerators, and const-qualified integer globals. No full preprocessing:
// conditional compilation branches are all visible and later definitions win.

#include "perimod/resolver.hpp"

#include "lex.hpp"
#include "perimod/errors.hpp"
#include "perimod/util.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace perimod {

using detail::Token;

void SymbolTable::insert(std::string name, Symbol sym) {
    syms_[std::move(name)] = sym;
}

const Symbol* SymbolTable::lookup(std::string_view name) const {
    auto it = syms_.find(name);
    return it == syms_.end() ? nullptr : &it->second;
}

namespace {

struct Definition {
    enum class Kind { Macro, Enumerator, Global };
    Kind kind = Kind::Macro;
    std::string name;
    std::string body;  // expression text; empty for an implicit enumerator
    int prev = -1;     // previous enumerator definition index (implicit +1)
    bool first_enumerator = false;
    std::string location;
    std::optional<std::uint64_t> value;
    std::vector<std::string> refs;
    std::string last_error;
};

SymbolOrigin origin_of(Definition::Kind k) {
    switch (k) {
    case Definition::Kind::Macro: return SymbolOrigin::Macro;
    case Definition::Kind::Enumerator: return SymbolOrigin::Enumerator;
    case Definition::Kind::Global: return SymbolOrigin::GlobalConst;
    }
    return SymbolOrigin::Macro;
}

std::vector<std::string> identifiers_in(const std::string& body) {
    std::string err;
    std::vector<std::string> out;
    for (const auto& tok : detail::lex(body, &err))
        if (tok.kind == Token::Kind::Ident && !detail::is_type_word(tok.text))
            out.push_back(tok.text);
    return out;
}

struct Scanner {
    std::vector<Definition>& defs;
    std::vector<std::string>& warnings;
    std::map<std::string, std::string> first_seen; // name -> location

    void note_definition(const std::string& name, const std::string& loc) {
        auto [it, fresh] = first_seen.emplace(name, loc);
        if (!fresh) {
            warnings.push_back("'" + name + "' redefined at " + loc + " (previous definition at " +
                               it->second + "); the last definition wins");
            it->second = loc;
        }
    }

    void scan_directive(const std::string& line, const std::string& loc) {
        std::size_t i = line.find('#');
        ++i;
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
            ++i;
        if (line.compare(i, 6, "define") != 0)
            return;
        i += 6;
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
            ++i;
        std::size_t start = i;
        while (i < line.size() &&
               (std::isalnum(static_cast<unsigned char>(line[i])) || line[i] == '_'))
            ++i;
        std::string name = line.substr(start, i - start);
        if (name.empty())
            return;
        if (i < line.size() && line[i] == '(') {
            warnings.push_back("function-like macro '" + name + "' at " + loc + " skipped");
            return;
        }
        std::string body(trim(line.substr(i)));
        if (body.empty())
            return; // flag-style macro, no value to harvest
        note_definition(name, loc);
        Definition d;
        d.kind = Definition::Kind::Macro;
        d.name = name;
        d.body = body;
        d.location = loc;
        d.refs = identifiers_in(body);
        defs.push_back(std::move(d));
    }

    // Returns the index just past the enum construct.
    std::size_t scan_enum(const std::vector<Token>& t, std::size_t i, const std::string& file) {
        ++i; // "enum"
        if (t[i].kind == Token::Kind::Ident)
            ++i; // tag
        if (!(t[i].kind == Token::Kind::Punct && t[i].text == "{")) {
            while (t[i].kind != Token::Kind::End &&
                   !(t[i].kind == Token::Kind::Punct && t[i].text == ";"))
                ++i;
            return i;
        }
        ++i;
        int prev = -1;
        bool first = true;
        while (t[i].kind != Token::Kind::End) {
            if (t[i].kind == Token::Kind::Punct && t[i].text == "}") {
                ++i;
                break;
            }
            if (t[i].kind != Token::Kind::Ident) {
                ++i;
                continue;
            }
            Definition d;
            d.kind = Definition::Kind::Enumerator;
            d.name = t[i].text;
            d.location = file + ":" + std::to_string(t[i].line);
            ++i;
            if (t[i].kind == Token::Kind::Punct && t[i].text == "=") {
                ++i;
                int paren = 0;
                std::string body;
                while (t[i].kind != Token::Kind::End) {
                    if (t[i].kind == Token::Kind::Punct) {
                        if (t[i].text == "(")
                            ++paren;
                        else if (t[i].text == ")")
                            --paren;
                        else if (paren == 0 && (t[i].text == "," || t[i].text == "}"))
                            break;
                    }
                    body += (body.empty() ? "" : " ") + t[i].text;
                    ++i;
                }
                d.body = body;
                d.refs = identifiers_in(body);
            } else {
                // implicit: previous enumerator + 1, or 0 for the first
                d.first_enumerator = first;
                d.prev = prev;
            }
            note_definition(d.name, d.location);
            prev = static_cast<int>(defs.size());
            first = false;
            defs.push_back(std::move(d));
            if (t[i].kind == Token::Kind::Punct && t[i].text == ",")
                ++i;
        }
        while (t[i].kind != Token::Kind::End &&
               !(t[i].kind == Token::Kind::Punct && t[i].text == ";"))
            ++i;
        return i;
    }

    void scan_statement(const std::vector<Token>& stmt, const std::string& file) {
        // const-qualified integer globals: [static] const <type...> NAME = expr
        std::size_t eq = stmt.size();
        for (std::size_t k = 0; k < stmt.size(); ++k) {
            if (stmt[k].kind == Token::Kind::Punct && stmt[k].text == "=") {
                eq = k;
                break;
            }
            if (stmt[k].kind == Token::Kind::Punct)
                return; // pointers, arrays, commas: not a plain integer constant
        }
        if (eq == stmt.size() || eq < 3 || eq + 1 == stmt.size())
            return;
        bool has_const = false, has_type = false;
        for (std::size_t k = 0; k + 1 < eq; ++k) {
            const std::string& w = stmt[k].text;
            if (w == "const" || w == "constexpr")
                has_const = true;
            if (detail::is_type_word(w) && w != "const")
                has_type = true;
        }
        if (!has_const || !has_type)
            return;
        Definition d;
        d.kind = Definition::Kind::Global;
        d.name = stmt[eq - 1].text;
        d.location = file + ":" + std::to_string(stmt[eq - 1].line);
        std::string body;
        for (std::size_t k = eq + 1; k < stmt.size(); ++k)
            body += (body.empty() ? "" : " ") + stmt[k].text;
        d.body = body;
        d.refs = identifiers_in(body);
        note_definition(d.name, d.location);
        defs.push_back(std::move(d));
    }

    void scan_file(const SourceFile& src) {
        std::string stripped = detail::strip_comments(src.text);

        // Split into physical lines; directives are handled with continuation
        // splicing and then blanked out of the code view.
        std::vector<std::string> lines;
        {
            std::string cur;
            for (char c : stripped) {
                if (c == '\n') {
                    lines.push_back(cur);
                    cur.clear();
                } else {
                    cur += c;
                }
            }
            lines.push_back(cur);
        }
        std::string code;
        for (std::size_t i = 0; i < lines.size(); ++i) {
            std::string_view sv = trim(lines[i]);
            if (!sv.empty() && sv.front() == '#') {
                std::string logical = lines[i];
                std::size_t first = i;
                while (!logical.empty() && logical.back() == '\\' && i + 1 < lines.size()) {
                    logical.pop_back();
                    logical += ' ';
                    logical += lines[++i];
                }
                scan_directive(logical, src.name + ":" + std::to_string(first + 1));
                for (std::size_t k = first; k <= i; ++k)
                    code += "\n";
            } else {
                code += lines[i];
                code += "\n";
            }
        }

        std::string err;
        std::vector<Token> t = detail::lex(code, &err);
        if (!err.empty())
            warnings.push_back(src.name + ": " + err + " (rest of file skipped)");

        int depth = 0;
        std::vector<Token> stmt;
        std::size_t i = 0;
        while (i < t.size() && t[i].kind != Token::Kind::End) {
            const Token& tok = t[i];
            if (tok.kind == Token::Kind::Punct && tok.text == "{") {
                ++depth;
                stmt.clear();
                ++i;
            } else if (tok.kind == Token::Kind::Punct && tok.text == "}") {
                depth = std::max(0, depth - 1);
                stmt.clear();
                ++i;
            } else if (depth > 0) {
                ++i;
            } else if (tok.kind == Token::Kind::Ident && tok.text == "enum") {
                i = scan_enum(t, i, src.name);
                stmt.clear();
            } else if (tok.kind == Token::Kind::Punct && tok.text == ";") {
                scan_statement(stmt, src.name);
                stmt.clear();
                ++i;
            } else {
                stmt.push_back(tok);
                ++i;
            }
        }
    }
};

} // namespace

namespace detail_eval {
// implemented in resolver.cpp
std::uint64_t eval_with_lookup(
    std::string_view text,
    const std::function<std::optional<std::uint64_t>(std::string_view)>& lookup);
} // namespace detail_eval

SymbolTable build_symbol_table(const std::vector<SourceFile>& sources) {
    SymbolTable table;
    std::vector<Definition> defs;
    Scanner scanner{defs, table.warnings, {}};
    for (const auto& src : sources)
        scanner.scan_file(src);

    // Resolve transitively: repeat ordered passes until nothing new resolves.
    std::map<std::string, std::uint64_t> values;
    auto lookup = [&values](std::string_view name) -> std::optional<std::uint64_t> {
        auto it = values.find(std::string(name));
        if (it == values.end())
            return std::nullopt;
        return it->second;
    };

    constexpr int kMaxDepth = 64;
    bool progress = true;
    for (int round = 0; round < kMaxDepth && progress; ++round) {
        progress = false;
        for (auto& d : defs) {
            if (d.value) {
                values[d.name] = *d.value; // keep source order authoritative
                continue;
            }
            try {
                std::uint64_t v = 0;
                if (d.kind == Definition::Kind::Enumerator && d.body.empty()) {
                    if (d.first_enumerator) {
                        v = 0;
                    } else {
                        if (d.prev < 0 || !defs[d.prev].value) {
                            d.last_error = "previous enumerator unresolved";
                            continue;
                        }
                        v = *defs[d.prev].value + 1;
                    }
                } else {
                    v = detail_eval::eval_with_lookup(d.body, lookup);
                }
                d.value = v;
                values[d.name] = v;
                progress = true;
            } catch (const ResolveError& e) {
                d.last_error = e.what();
            }
        }
    }

    // Leftovers: references to undefined names are warnings; closed groups of
    // defined-but-unresolved macros are definition cycles.
    std::set<std::string> def_names;
    for (const auto& d : defs)
        def_names.insert(d.name);
    std::map<std::string, std::vector<std::string>> unresolved_refs;
    for (const auto& d : defs) {
        if (d.value)
            continue;
        bool undefined_ref = false;
        for (const auto& r : d.refs) {
            if (!def_names.count(r) && !values.count(r)) {
                table.warnings.push_back("'" + d.name + "' (" + d.location +
                                         ") omitted: references undefined identifier '" + r + "'");
                undefined_ref = true;
                break;
            }
        }
        if (undefined_ref)
            continue;
        std::vector<std::string> pending;
        for (const auto& r : d.refs)
            if (!values.count(r))
                pending.push_back(r);
        if (pending.empty()) {
            table.warnings.push_back("'" + d.name + "' (" + d.location +
                                     ") omitted: " + d.last_error);
            continue;
        }
        unresolved_refs[d.name] = std::move(pending);
    }

    if (!unresolved_refs.empty()) {
        // Walk the unresolved dependency graph looking for a back edge.
        std::set<std::string> on_path;
        std::vector<std::string> path;
        std::function<bool(const std::string&)> dfs = [&](const std::string& n) -> bool {
            if (on_path.count(n)) {
                auto it = std::find(path.begin(), path.end(), n);
                path.erase(path.begin(), it);
                return true;
            }
            auto deps = unresolved_refs.find(n);
            if (deps == unresolved_refs.end())
                return false;
            on_path.insert(n);
            path.push_back(n);
            for (const auto& r : deps->second)
                if (dfs(r))
                    return true;
            on_path.erase(n);
            path.pop_back();
            return false;
        };
        for (const auto& [name, _] : unresolved_refs) {
            path.clear();
            on_path.clear();
            if (dfs(name)) {
                std::string msg = "cyclic macro definitions:";
                for (const auto& n : path)
                    msg += " " + n;
                throw MacroCycleError(msg, path);
            }
        }
        // No cycle (e.g. depth cap exceeded): omit with warnings.
        for (const auto& [name, _] : unresolved_refs)
            table.warnings.push_back("'" + name + "' omitted: resolution depth exceeded");
    }

    for (const auto& d : defs)
        if (d.value)
            table.insert(d.name, Symbol{*d.value, origin_of(d.kind), d.location});
    return table;
}

} // namespace perimod
