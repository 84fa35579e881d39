// SPDX-License-Identifier: Apache-2.0
//
// Abstract peripheral models: named, described parameter slots of primitive
// kinds. Built-in schemas cover timers, UARTs, GPIO and DMA controllers; a
// generic register-only schema backs everything else.

#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace perimod {

enum class PrimitiveKind {
    Reg,
    RegField,
    RegFieldState,
    RegFieldMap,
    Swt,
    Upd,
    Evt,
    MemField,
    MemFieldState,
};

std::string_view primitive_kind_name(PrimitiveKind k);

struct GroupSchema;

/// The type of a schema slot: a primitive kind, a nested group of slots, or
/// an ordered list of either.
struct SlotType {
    enum class Kind { Primitive, Group, List };

    Kind kind = Kind::Primitive;
    PrimitiveKind primitive = PrimitiveKind::Reg;
    std::shared_ptr<const GroupSchema> group; // Kind::Group
    std::shared_ptr<const SlotType> element;  // Kind::List

    static SlotType prim(PrimitiveKind k);
    static SlotType list_of(SlotType elem);
    static SlotType group_of(GroupSchema g);
};

/// One schema parameter. The description is prompt material and must be
/// non-empty for every slot of a non-generic schema.
struct SlotDef {
    std::string name;
    SlotType type;
    bool optional = false;
    std::string description;
};

/// A reusable sub-model (e.g. one timer counter, one transfer descriptor).
struct GroupSchema {
    std::string name;
    std::vector<SlotDef> slots;

    const SlotDef* find_slot(std::string_view name) const;
};

/// An abstract peripheral model: the category name plus its parameter slots.
struct CategorySchema {
    std::string name;
    std::vector<SlotDef> slots;

    const SlotDef* find_slot(std::string_view name) const;
};

/// The five concrete built-in schemas: Timer, UART, GPIO, DMA and the generic
/// register-only model.
std::vector<CategorySchema> builtin_schemas();

/// Category name -> schema, with a generic fallback for unknown names.
/// Immutable after the startup registration phase.
class SchemaRegistry {
public:
    /// Registry preloaded with the built-in schemas plus register-only
    /// entries for the remaining stock categories, so that category
    /// identification can offer the full stock list.
    static SchemaRegistry builtin();

    /// The named schema, or the generic fallback when the name is unknown.
    const CategorySchema& get(std::string_view name) const;

    bool has(std::string_view name) const;

    /// Throws ConfigError when the name is already registered.
    void register_schema(CategorySchema schema);

    const CategorySchema& generic() const;

    /// Category names offered to the identification stage, in registration
    /// order. The generic fallback is not a category and is excluded.
    std::vector<std::string> category_names() const;

private:
    std::vector<CategorySchema> schemas_; // registration order
    CategorySchema generic_;
};

} // namespace perimod
