// SPDX-License-Identifier: Apache-2.0
//
// The nine modeling primitives peripheral semantic models are composed of,
// plus the fully resolved model/device instance types they aggregate into.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace perimod {

/// A peripheral register: byte offset within the peripheral, width in bits.
struct Reg {
    std::string name;
    std::uint64_t offset = 0;
    unsigned width = 32; // one of 8/16/32/64

    bool operator==(const Reg&) const = default;
};

/// A named bit range inside a register. `offset` is the bit position within
/// the holding register. Stored in a model's field universe keyed by register
/// name.
struct RegField {
    std::string name;
    unsigned offset = 0;
    unsigned width = 1;

    bool operator==(const RegField&) const = default;
};

/// Reference to a register field by (register name, field name).
struct RegFieldRef {
    std::string reg;
    std::string field;

    bool operator==(const RegFieldRef&) const = default;
    std::string str() const { return reg + "." + field; }
};

/// A register field together with a value it may hold.
struct RegFieldState {
    RegFieldRef field;
    std::uint64_t value = 0;

    bool operator==(const RegFieldState&) const = default;
};

/// A register field whose raw value is translated through a finite mapping
/// before the hardware uses it (e.g. chunk-width encodings).
struct RegFieldMap {
    RegFieldRef field;
    std::map<std::uint64_t, std::uint64_t> map;

    bool operator==(const RegFieldMap&) const = default;
};

/// A hardware functionality toggled by writing specific field values.
/// `status` optionally mirrors the current on/off state into a field.
struct Swt {
    RegFieldState enable;
    RegFieldState disable;
    std::optional<RegFieldState> status;

    bool operator==(const Swt&) const = default;
};

/// A register update dependency: when the firmware drives every condition
/// field to its listed value, the hardware applies the action states.
struct Upd {
    std::vector<RegFieldState> condition;
    std::vector<RegFieldState> action;

    bool operator==(const Upd&) const = default;
};

/// A peripheral event and the fields that report and control it:
///  - happen: set by hardware when the event occurs (the status flag),
///  - active: indicates the event is allowed to assert its interrupt line,
///  - enable/disable: written by firmware to turn the event on/off,
///  - clear: written by firmware to acknowledge the status flag,
///  - irq_line: the interrupt line this event feeds; unset until the final
///    association step assigns it.
struct Evt {
    RegFieldState happen;
    RegFieldState active;
    RegFieldState enable;
    RegFieldState disable;
    RegFieldState clear;
    std::optional<std::uint32_t> irq_line;

    bool operator==(const Evt&) const = default;
};

/// A field inside an in-memory structure (byte offset, width in bits).
struct MemField {
    std::uint64_t offset = 0;
    unsigned width = 1;

    bool operator==(const MemField&) const = default;
};

/// A memory field together with a value it may hold.
struct MemFieldState {
    MemField field;
    std::uint64_t value = 0;

    bool operator==(const MemFieldState&) const = default;
};

struct SlotValue;

/// Slot name -> bound value, one entry per schema parameter that is present.
using SlotMap = std::map<std::string, SlotValue>;

/// A bound schema parameter. Reg-kind slots hold the register name; field
/// references are (reg, field) name pairs resolved against the instance's
/// universes.
struct SlotValue {
    using List = std::vector<SlotValue>;
    std::variant<std::string, // Reg reference by name
                 RegFieldRef, RegFieldState, RegFieldMap, Swt, Upd, Evt,
                 MemField, MemFieldState, List, SlotMap>
        value;

    bool operator==(const SlotValue&) const = default;

    template <class T> const T* get() const { return std::get_if<T>(&value); }
    template <class T> bool is() const { return std::holds_alternative<T>(value); }
};

/// A fully resolved peripheral model: the register and field universes, the
/// update dependencies, and the semantic slots bound per the category schema.
struct ModelInstance {
    std::string category;
    std::vector<Reg> regs;
    std::map<std::string, std::vector<RegField>> fields;
    std::vector<Upd> updates;
    SlotMap slots;

    bool operator==(const ModelInstance&) const = default;

    const Reg* find_reg(std::string_view name) const;
    const RegField* find_field(std::string_view reg, std::string_view field) const;
};

/// One mapped peripheral: a base address, its interrupt lines and its own
/// copy of the model (line assignments are per instance).
struct DeviceInstance {
    std::string name;
    std::uint64_t base = 0;
    std::vector<std::uint32_t> irqs;
    ModelInstance model;

    bool operator==(const DeviceInstance&) const = default;
};

/// Check every type invariant of an in-memory instance: register widths,
/// field bounds, value ranges, reference integrity of the slot tree, and the
/// per-primitive consistency rules. Returns one message per violation.
std::vector<std::string> check_type_invariants(const ModelInstance& inst);
std::vector<std::string> check_type_invariants(const DeviceInstance& dev);

/// Walk every RegFieldState in the instance (updates and slot tree) with its
/// slot path, e.g. "trans_descs.0.complete.happen".
void visit_field_states(const ModelInstance& inst,
                        const std::function<void(const std::string& path,
                                                 const RegFieldState&)>& fn);

/// Walk every Evt in the slot tree with its path.
void visit_events(ModelInstance& inst,
                  const std::function<void(const std::string& path, Evt&)>& fn);
void visit_events(const ModelInstance& inst,
                  const std::function<void(const std::string& path, const Evt&)>& fn);

} // namespace perimod
