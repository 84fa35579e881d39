// SPDX-License-Identifier: Apache-2.0
//
// Turning strings from extraction responses (identifiers, constant
// expressions) into integers, using symbols harvested from driver headers.

#pragma once

#include "perimod/instance_io.hpp"
#include "perimod/primitives.hpp"
#include "perimod/schema.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace perimod {

enum class SymbolOrigin { Macro, Enumerator, GlobalConst };

struct Symbol {
    std::uint64_t value = 0;
    SymbolOrigin origin = SymbolOrigin::Macro;
    std::string location; // "file:line"
};

/// Identifier -> integer constant, harvested from driver sources. Immutable
/// once built; warnings record skipped or redefined entries.
class SymbolTable {
public:
    void insert(std::string name, Symbol sym);
    const Symbol* lookup(std::string_view name) const;
    std::size_t size() const { return syms_.size(); }

    std::vector<std::string> warnings;

private:
    std::map<std::string, Symbol, std::less<>> syms_;
};

struct SourceFile {
    std::string name;
    std::string text;
};

/// Scan header/source texts for object-like macros, enumerators (with
/// implicit +1 sequencing) and initialized integer global constants. Macro
/// bodies are resolved transitively, up to depth 64; unresolvable entries are
/// omitted with a warning; mutually recursive macros raise MacroCycleError.
/// Later definitions of the same name win, with a warning.
SymbolTable build_symbol_table(const std::vector<SourceFile>& sources);

/// Evaluate a C-style constant expression over the table. Unsigned 64-bit
/// wrapping arithmetic; division or modulo by zero is a resolution failure;
/// shift counts of 64 or more yield 0. Throws ResolveError.
std::uint64_t eval_const_expr(std::string_view text, const SymbolTable& table);

/// The resolution cascade: (1) direct integer literal parse, (2) single
/// identifier lookup, (3) constant-expression evaluation. First success wins;
/// failure throws ResolveError carrying the trace of all three steps.
std::uint64_t resolve_value(std::string_view text, const SymbolTable& table);

/// Resolve every value slot of a parsed-but-symbolic document (offsets,
/// widths, values, bases, irq numbers, map keys/values) through
/// resolve_value. Atomic: any slot failure fails the whole document, with all
/// offending slot paths aggregated in the ResolveError.
std::variant<ModelInstance, std::vector<DeviceInstance>>
resolve_instance(const nlohmann::ordered_json& raw, const SymbolTable& table,
                 const SchemaRegistry& registry, const ParseOptions& opts = {},
                 ParseReport* report = nullptr);

/// ValueResolver running the cascade over `table` (for the document builders).
ValueResolver symbol_resolver(const SymbolTable& table);

} // namespace perimod
