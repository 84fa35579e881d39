// SPDX-License-Identifier: Apache-2.0
//
// The machine-readable instance format: UTF-8 JSON documents mirroring the
// primitive member names. Integers accept decimal and 0x-hex (as strings).

#pragma once

#include "perimod/primitives.hpp"
#include "perimod/schema.hpp"

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace perimod {

struct ParseOptions {
    /// Strict mode (default) rejects unknown keys; lenient mode records a
    /// warning per unknown key instead.
    bool strict = true;
};

/// Lenient-mode warnings and completeness notes (optional slots left unset).
struct ParseReport {
    std::vector<std::string> warnings;
    std::vector<std::string> notes;
};

/// Turns a scalar document value at `path` into an integer. The default
/// resolver accepts JSON integers and decimal/0x-hex strings; the driver-code
/// resolver plugs in the full resolution cascade here.
using ValueResolver =
    std::function<std::uint64_t(const nlohmann::ordered_json& scalar, const std::string& path)>;

ValueResolver plain_int_resolver();

/// Parse a model-instance document. Unknown category names fall back to the
/// generic schema. Throws SyntaxError / InvariantViolation / DanglingReference
/// / ResolveError.
ModelInstance parse_model_instance(std::string_view text,
                                   const SchemaRegistry& registry,
                                   const ParseOptions& opts = {},
                                   ParseReport* report = nullptr);

/// Parse a device-instances document: {"instances": [{name, base, irqs, model}]}.
std::vector<DeviceInstance> parse_device_instances(std::string_view text,
                                                   const SchemaRegistry& registry,
                                                   const ParseOptions& opts = {},
                                                   ParseReport* report = nullptr);

/// Canonical serialization; parse(serialize(x)) is structurally equal to x.
std::string serialize_model_instance(const ModelInstance& inst,
                                     const SchemaRegistry& registry);
std::string serialize_device_instances(const std::vector<DeviceInstance>& devs,
                                       const SchemaRegistry& registry);

/// Schemas rendered in the instance-format grammar, for documentation tooling.
std::string serialize_schemas(const SchemaRegistry& registry);

// Document builders over already-parsed JSON. These are the single grammar
// implementation shared by the plain parser above and the symbol-resolving
// document path: the resolver decides how value slots become integers.
ModelInstance build_model_instance(const nlohmann::ordered_json& doc,
                                   const SchemaRegistry& registry,
                                   const ParseOptions& opts,
                                   const ValueResolver& resolve,
                                   ParseReport* report);
std::vector<DeviceInstance> build_device_instances(const nlohmann::ordered_json& doc,
                                                   const SchemaRegistry& registry,
                                                   const ParseOptions& opts,
                                                   const ValueResolver& resolve,
                                                   ParseReport* report);

nlohmann::ordered_json instance_to_json(const ModelInstance& inst,
                                        const SchemaRegistry& registry);
nlohmann::ordered_json devices_to_json(const std::vector<DeviceInstance>& devs,
                                       const SchemaRegistry& registry);

// Piecewise builders for staged response payloads. These build and resolve
// only; cross-universe invariants are the caller's to check.
std::vector<Reg> build_reg_list(const nlohmann::ordered_json& arr, const ParseOptions& opts,
                                const ValueResolver& resolve, ParseReport* report);
std::vector<RegField> build_field_list(const nlohmann::ordered_json& arr, const ParseOptions& opts,
                                       const ValueResolver& resolve, ParseReport* report);
std::vector<Upd> build_upd_list(const nlohmann::ordered_json& arr, const ParseOptions& opts,
                                const ValueResolver& resolve, ParseReport* report);
SlotMap build_slot_map(const nlohmann::ordered_json& obj, const std::vector<SlotDef>& defs,
                       const ParseOptions& opts, const ValueResolver& resolve,
                       ParseReport* report);

} // namespace perimod
