// SPDX-License-Identifier: Apache-2.0
#include "perimod/instance_io.hpp"

#include "perimod/errors.hpp"
#include "perimod/util.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace perimod {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
    throw SyntaxError(path + ": " + what);
}

const json* get_key(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null())
        return nullptr;
    return &*it;
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& path,
                const ParseOptions& opts, ParseReport* report) {
    for (const auto& [key, _] : obj.items()) {
        if (allowed.count(key))
            continue;
        if (opts.strict)
            bad(path, "unknown key '" + key + "'");
        if (report)
            report->warnings.push_back(path + ": ignoring unknown key '" + key + "'");
    }
}

std::string text_of(const json& obj, const char* key, const std::string& path) {
    const json* v = get_key(obj, key);
    if (!v)
        bad(path, std::string("missing '") + key + "'");
    if (!v->is_string())
        bad(path + "." + key, "expected a string");
    return v->get<std::string>();
}

/// Collects per-slot resolution failures so a bad document fails atomically
/// with every offending path reported at once.
struct Builder {
    const ParseOptions& opts;
    const ValueResolver& resolve;
    ParseReport* report;
    std::vector<std::string> failures;

    std::uint64_t value_of(const json& scalar, const std::string& path) {
        try {
            return resolve(scalar, path);
        } catch (const ResolveError& e) {
            failures.push_back(path + ": " + e.what());
        } catch (const Error& e) {
            failures.push_back(path + ": " + e.what());
        }
        return 0;
    }

    std::uint64_t required_value(const json& obj, const char* key, const std::string& path) {
        const json* v = get_key(obj, key);
        if (!v)
            bad(path, std::string("missing '") + key + "'");
        return value_of(*v, path + "." + key);
    }

    RegFieldRef field_ref(const json& obj, const std::string& path) {
        if (!obj.is_object())
            bad(path, "expected an object with 'reg' and 'field'");
        return RegFieldRef{text_of(obj, "reg", path), text_of(obj, "field", path)};
    }

    RegFieldState field_state(const json& obj, const std::string& path) {
        if (!obj.is_object())
            bad(path, "expected an object with 'reg', 'field' and 'value'");
        check_keys(obj, {"reg", "field", "value"}, path, opts, report);
        RegFieldState s;
        s.field = field_ref(obj, path);
        s.value = required_value(obj, "value", path);
        return s;
    }

    RegFieldMap field_map(const json& obj, const std::string& path) {
        if (!obj.is_object())
            bad(path, "expected an object with 'reg', 'field' and 'map'");
        check_keys(obj, {"reg", "field", "map"}, path, opts, report);
        RegFieldMap m;
        m.field = field_ref(obj, path);
        const json* mp = get_key(obj, "map");
        if (!mp || !mp->is_object())
            bad(path, "missing or non-object 'map'");
        for (const auto& [k, v] : mp->items()) {
            std::uint64_t key = value_of(json(k), path + ".map['" + k + "']");
            std::uint64_t val = value_of(v, path + ".map['" + k + "']");
            m.map[key] = val;
        }
        return m;
    }

    Swt swt(const json& obj, const std::string& path) {
        if (!obj.is_object())
            bad(path, "expected a switch object");
        check_keys(obj, {"enable", "disable", "status"}, path, opts, report);
        Swt s;
        const json* en = get_key(obj, "enable");
        const json* dis = get_key(obj, "disable");
        if (!en)
            bad(path, "missing 'enable'");
        if (!dis)
            bad(path, "missing 'disable'");
        s.enable = field_state(*en, path + ".enable");
        s.disable = field_state(*dis, path + ".disable");
        if (const json* st = get_key(obj, "status"))
            s.status = field_state(*st, path + ".status");
        return s;
    }

    Upd upd(const json& obj, const std::string& path) {
        if (!obj.is_object())
            bad(path, "expected an update object");
        check_keys(obj, {"condition", "action"}, path, opts, report);
        Upd u;
        const json* cond = get_key(obj, "condition");
        const json* act = get_key(obj, "action");
        if (!cond || !cond->is_array())
            bad(path, "missing or non-array 'condition'");
        if (!act || !act->is_array())
            bad(path, "missing or non-array 'action'");
        for (std::size_t i = 0; i < cond->size(); ++i)
            u.condition.push_back(field_state((*cond)[i], path + ".condition." + std::to_string(i)));
        for (std::size_t i = 0; i < act->size(); ++i)
            u.action.push_back(field_state((*act)[i], path + ".action." + std::to_string(i)));
        return u;
    }

    Evt evt(const json& obj, const std::string& path) {
        if (!obj.is_object())
            bad(path, "expected an event object");
        check_keys(obj, {"happen", "active", "enable", "disable", "clear", "irq_line"}, path,
                   opts, report);
        Evt e;
        for (auto [key, dst] : {std::pair<const char*, RegFieldState*>{"happen", &e.happen},
                                {"active", &e.active},
                                {"enable", &e.enable},
                                {"disable", &e.disable},
                                {"clear", &e.clear}}) {
            const json* v = get_key(obj, key);
            if (!v)
                bad(path, std::string("missing '") + key + "'");
            *dst = field_state(*v, path + "." + key);
        }
        if (const json* line = get_key(obj, "irq_line"))
            e.irq_line = static_cast<std::uint32_t>(value_of(*line, path + ".irq_line"));
        return e;
    }

    MemField mem_field(const json& obj, const std::string& path) {
        if (!obj.is_object())
            bad(path, "expected a memory field object");
        check_keys(obj, {"offset", "width"}, path, opts, report);
        MemField f;
        f.offset = required_value(obj, "offset", path);
        f.width = static_cast<unsigned>(required_value(obj, "width", path));
        return f;
    }

    MemFieldState mem_field_state(const json& obj, const std::string& path) {
        if (!obj.is_object())
            bad(path, "expected a memory field state object");
        check_keys(obj, {"field", "value"}, path, opts, report);
        MemFieldState s;
        const json* f = get_key(obj, "field");
        if (!f)
            bad(path, "missing 'field'");
        s.field = mem_field(*f, path + ".field");
        s.value = required_value(obj, "value", path);
        return s;
    }

    SlotValue slot_value(const json& v, const SlotType& type, const std::string& path) {
        SlotValue out;
        switch (type.kind) {
        case SlotType::Kind::Primitive:
            switch (type.primitive) {
            case PrimitiveKind::Reg:
                if (!v.is_string())
                    bad(path, "expected a register name string");
                out.value = v.get<std::string>();
                break;
            case PrimitiveKind::RegField: {
                out.value = field_ref(v, path);
                check_keys(v, {"reg", "field"}, path, opts, report);
                break;
            }
            case PrimitiveKind::RegFieldState:
                out.value = field_state(v, path);
                break;
            case PrimitiveKind::RegFieldMap:
                out.value = field_map(v, path);
                break;
            case PrimitiveKind::Swt:
                out.value = swt(v, path);
                break;
            case PrimitiveKind::Upd:
                out.value = upd(v, path);
                break;
            case PrimitiveKind::Evt:
                out.value = evt(v, path);
                break;
            case PrimitiveKind::MemField:
                out.value = mem_field(v, path);
                break;
            case PrimitiveKind::MemFieldState:
                out.value = mem_field_state(v, path);
                break;
            }
            break;
        case SlotType::Kind::List: {
            if (!v.is_array())
                bad(path, "expected an array");
            SlotValue::List list;
            for (std::size_t i = 0; i < v.size(); ++i)
                list.push_back(slot_value(v[i], *type.element, path + "." + std::to_string(i)));
            out.value = std::move(list);
            break;
        }
        case SlotType::Kind::Group: {
            out.value = slot_map(v, type.group->slots, path);
            break;
        }
        }
        return out;
    }

    SlotMap slot_map(const json& obj, const std::vector<SlotDef>& defs, const std::string& path) {
        if (!obj.is_object())
            bad(path, "expected an object");
        std::set<std::string> allowed;
        for (const auto& d : defs)
            allowed.insert(d.name);
        check_keys(obj, allowed, path, opts, report);
        SlotMap out;
        for (const auto& d : defs) {
            std::string sub = path.empty() ? d.name : path + "." + d.name;
            const json* v = get_key(obj, d.name.c_str());
            if (!v) {
                if (!d.optional)
                    throw InvariantViolation(sub + ": schema-required slot missing");
                if (report)
                    report->notes.push_back(sub + ": optional slot unset");
                continue;
            }
            out.emplace(d.name, slot_value(*v, d.type, sub));
        }
        return out;
    }

    std::vector<Reg> reg_list(const json& arr, const std::string& path) {
        if (!arr.is_array())
            bad(path, "expected an array of registers");
        std::vector<Reg> out;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const json& o = arr[i];
            std::string p = path + "." + std::to_string(i);
            if (!o.is_object())
                bad(p, "expected a register object");
            check_keys(o, {"name", "offset", "width"}, p, opts, report);
            Reg r;
            r.name = text_of(o, "name", p);
            r.offset = required_value(o, "offset", p);
            r.width = static_cast<unsigned>(required_value(o, "width", p));
            out.push_back(std::move(r));
        }
        return out;
    }

    std::vector<RegField> field_list(const json& arr, const std::string& path) {
        if (!arr.is_array())
            bad(path, "expected an array of fields");
        std::vector<RegField> out;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const json& o = arr[i];
            std::string p = path + "." + std::to_string(i);
            if (!o.is_object())
                bad(p, "expected a field object");
            check_keys(o, {"name", "offset", "width"}, p, opts, report);
            RegField f;
            f.name = text_of(o, "name", p);
            f.offset = static_cast<unsigned>(required_value(o, "offset", p));
            f.width = static_cast<unsigned>(required_value(o, "width", p));
            out.push_back(std::move(f));
        }
        return out;
    }

    void finish(const std::string& what) {
        if (failures.empty())
            return;
        std::ostringstream msg;
        msg << what << ": " << failures.size() << " slot(s) failed to resolve";
        std::vector<std::string> paths;
        for (const auto& f : failures) {
            msg << "\n  " << f;
            paths.push_back(f.substr(0, f.find(':')));
        }
        throw ResolveError(msg.str(), {}, std::move(paths));
    }
};

void raise_invariants(const std::vector<std::string>& problems) {
    if (problems.empty())
        return;
    std::string joined;
    for (const auto& p : problems)
        joined += (joined.empty() ? "" : "\n") + p;
    for (const auto& p : problems) {
        auto pos = p.find("dangling ");
        if (pos != std::string::npos) {
            std::string entity = p.substr(p.rfind(' ') + 1);
            throw DanglingReference(joined, entity);
        }
    }
    throw InvariantViolation(joined);
}

json parse_text(std::string_view text) {
    try {
        return json::parse(text, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::parse_error& e) {
        throw SyntaxError(e.what(), e.byte);
    }
}

} // namespace

ValueResolver plain_int_resolver() {
    return [](const json& scalar, const std::string& path) -> std::uint64_t {
        if (scalar.is_number_unsigned())
            return scalar.get<std::uint64_t>();
        if (scalar.is_number_integer()) {
            auto v = scalar.get<std::int64_t>();
            if (v < 0)
                throw ResolveError(path + ": negative value");
            return static_cast<std::uint64_t>(v);
        }
        if (scalar.is_string()) {
            if (auto v = parse_plain_int(scalar.get<std::string>()))
                return *v;
            throw ResolveError("'" + scalar.get<std::string>() +
                               "' is not a decimal or 0x-hex integer");
        }
        throw ResolveError(path + ": expected an integer");
    };
}

ModelInstance build_model_instance(const json& doc, const SchemaRegistry& registry,
                                   const ParseOptions& opts, const ValueResolver& resolve,
                                   ParseReport* report) {
    if (!doc.is_object())
        bad("$", "instance document must be an object");
    check_keys(doc, {"category", "regs", "fields", "updates", "slots"}, "$", opts, report);

    Builder b{opts, resolve, report, {}};
    ModelInstance inst;
    inst.category = doc.contains("category") ? text_of(doc, "category", "$") : "generic";

    if (const json* regs = get_key(doc, "regs"))
        inst.regs = b.reg_list(*regs, "regs");
    if (const json* fields = get_key(doc, "fields")) {
        if (!fields->is_object())
            bad("fields", "expected an object keyed by register name");
        for (const auto& [reg, arr] : fields->items())
            inst.fields[reg] = b.field_list(arr, "fields." + reg);
    }
    if (const json* updates = get_key(doc, "updates")) {
        if (!updates->is_array())
            bad("updates", "expected an array");
        for (std::size_t i = 0; i < updates->size(); ++i)
            inst.updates.push_back(b.upd((*updates)[i], "updates." + std::to_string(i)));
    }
    const CategorySchema& schema = registry.get(inst.category);
    if (const json* slots = get_key(doc, "slots"))
        inst.slots = b.slot_map(*slots, schema.slots, "slots");
    else if (!schema.slots.empty())
        inst.slots = b.slot_map(json::object(), schema.slots, "slots");

    b.finish("instance document");
    raise_invariants(check_type_invariants(inst));
    return inst;
}

std::vector<DeviceInstance> build_device_instances(const json& doc, const SchemaRegistry& registry,
                                                   const ParseOptions& opts,
                                                   const ValueResolver& resolve,
                                                   ParseReport* report) {
    if (!doc.is_object())
        bad("$", "device document must be an object");
    check_keys(doc, {"instances"}, "$", opts, report);
    const json* arr = get_key(doc, "instances");
    if (!arr || !arr->is_array())
        bad("$", "missing 'instances' array");

    Builder b{opts, resolve, report, {}};
    std::vector<DeviceInstance> out;
    for (std::size_t i = 0; i < arr->size(); ++i) {
        const json& o = (*arr)[i];
        std::string p = "instances." + std::to_string(i);
        if (!o.is_object())
            bad(p, "expected an instance object");
        check_keys(o, {"name", "base", "irqs", "model"}, p, opts, report);
        DeviceInstance dev;
        dev.name = text_of(o, "name", p);
        dev.base = b.required_value(o, "base", p);
        if (const json* irqs = get_key(o, "irqs")) {
            if (!irqs->is_array())
                bad(p + ".irqs", "expected an array");
            for (std::size_t k = 0; k < irqs->size(); ++k)
                dev.irqs.push_back(static_cast<std::uint32_t>(
                    b.value_of((*irqs)[k], p + ".irqs." + std::to_string(k))));
        }
        if (const json* model = get_key(o, "model"))
            dev.model = build_model_instance(*model, registry, opts, resolve, report);
        out.push_back(std::move(dev));
    }
    b.finish("device document");
    for (const auto& dev : out)
        raise_invariants(check_type_invariants(dev));
    return out;
}

std::vector<Reg> build_reg_list(const json& arr, const ParseOptions& opts,
                                const ValueResolver& resolve, ParseReport* report) {
    Builder b{opts, resolve, report, {}};
    auto out = b.reg_list(arr, "regs");
    b.finish("register list");
    return out;
}

std::vector<RegField> build_field_list(const json& arr, const ParseOptions& opts,
                                       const ValueResolver& resolve, ParseReport* report) {
    Builder b{opts, resolve, report, {}};
    auto out = b.field_list(arr, "fields");
    b.finish("field list");
    return out;
}

std::vector<Upd> build_upd_list(const json& arr, const ParseOptions& opts,
                                const ValueResolver& resolve, ParseReport* report) {
    Builder b{opts, resolve, report, {}};
    if (!arr.is_array())
        bad("updates", "expected an array");
    std::vector<Upd> out;
    for (std::size_t i = 0; i < arr.size(); ++i)
        out.push_back(b.upd(arr[i], "updates." + std::to_string(i)));
    b.finish("update list");
    return out;
}

SlotMap build_slot_map(const json& obj, const std::vector<SlotDef>& defs,
                       const ParseOptions& opts, const ValueResolver& resolve,
                       ParseReport* report) {
    Builder b{opts, resolve, report, {}};
    SlotMap out = b.slot_map(obj, defs, "");
    b.finish("slot document");
    return out;
}

ModelInstance parse_model_instance(std::string_view text, const SchemaRegistry& registry,
                                   const ParseOptions& opts, ParseReport* report) {
    return build_model_instance(parse_text(text), registry, opts, plain_int_resolver(), report);
}

std::vector<DeviceInstance> parse_device_instances(std::string_view text,
                                                   const SchemaRegistry& registry,
                                                   const ParseOptions& opts, ParseReport* report) {
    return build_device_instances(parse_text(text), registry, opts, plain_int_resolver(), report);
}

namespace {

json ref_json(const RegFieldRef& r) {
    return json{{"reg", r.reg}, {"field", r.field}};
}

json state_json(const RegFieldState& s) {
    json j = ref_json(s.field);
    j["value"] = s.value;
    return j;
}

json map_json(const RegFieldMap& m) {
    json j = ref_json(m.field);
    json body = json::object();
    for (const auto& [k, v] : m.map)
        body[std::to_string(k)] = v;
    j["map"] = std::move(body);
    return j;
}

json mem_field_json(const MemField& f) {
    return json{{"offset", f.offset}, {"width", f.width}};
}

json slot_json(const SlotValue& v) {
    if (auto* reg = v.get<std::string>())
        return json(*reg);
    if (auto* ref = v.get<RegFieldRef>())
        return ref_json(*ref);
    if (auto* st = v.get<RegFieldState>())
        return state_json(*st);
    if (auto* m = v.get<RegFieldMap>())
        return map_json(*m);
    if (auto* sw = v.get<Swt>()) {
        json j{{"enable", state_json(sw->enable)}, {"disable", state_json(sw->disable)}};
        if (sw->status)
            j["status"] = state_json(*sw->status);
        return j;
    }
    if (auto* u = v.get<Upd>()) {
        json cond = json::array(), act = json::array();
        for (const auto& c : u->condition)
            cond.push_back(state_json(c));
        for (const auto& a : u->action)
            act.push_back(state_json(a));
        return json{{"condition", std::move(cond)}, {"action", std::move(act)}};
    }
    if (auto* e = v.get<Evt>()) {
        json j{{"happen", state_json(e->happen)},
               {"active", state_json(e->active)},
               {"enable", state_json(e->enable)},
               {"disable", state_json(e->disable)},
               {"clear", state_json(e->clear)}};
        if (e->irq_line)
            j["irq_line"] = *e->irq_line;
        return j;
    }
    if (auto* mf = v.get<MemField>())
        return mem_field_json(*mf);
    if (auto* ms = v.get<MemFieldState>())
        return json{{"field", mem_field_json(ms->field)}, {"value", ms->value}};
    if (auto* l = v.get<SlotValue::List>()) {
        json arr = json::array();
        for (const auto& e : *l)
            arr.push_back(slot_json(e));
        return arr;
    }
    if (auto* g = v.get<SlotMap>()) {
        json obj = json::object();
        for (const auto& [name, sub] : *g)
            obj[name] = slot_json(sub);
        return obj;
    }
    return json();
}

json slots_json(const SlotMap& slots, const CategorySchema& schema) {
    json out = json::object();
    // schema order first, then any slot the schema does not know about
    for (const auto& def : schema.slots) {
        auto it = slots.find(def.name);
        if (it != slots.end())
            out[def.name] = slot_json(it->second);
    }
    for (const auto& [name, v] : slots)
        if (!out.contains(name))
            out[name] = slot_json(v);
    return out;
}

} // namespace

json instance_to_json(const ModelInstance& inst, const SchemaRegistry& registry) {
    json doc;
    doc["category"] = inst.category;
    json regs = json::array();
    for (const auto& r : inst.regs)
        regs.push_back(json{{"name", r.name}, {"offset", r.offset}, {"width", r.width}});
    doc["regs"] = std::move(regs);
    json fields = json::object();
    for (const auto& [reg, fs] : inst.fields) {
        json arr = json::array();
        for (const auto& f : fs)
            arr.push_back(json{{"name", f.name}, {"offset", f.offset}, {"width", f.width}});
        fields[reg] = std::move(arr);
    }
    doc["fields"] = std::move(fields);
    json updates = json::array();
    for (const auto& u : inst.updates) {
        SlotValue v;
        v.value = u;
        updates.push_back(slot_json(v));
    }
    doc["updates"] = std::move(updates);
    doc["slots"] = slots_json(inst.slots, registry.get(inst.category));
    return doc;
}

json devices_to_json(const std::vector<DeviceInstance>& devs, const SchemaRegistry& registry) {
    json arr = json::array();
    for (const auto& d : devs) {
        json o;
        o["name"] = d.name;
        o["base"] = d.base;
        o["irqs"] = d.irqs;
        o["model"] = instance_to_json(d.model, registry);
        arr.push_back(std::move(o));
    }
    return json{{"instances", std::move(arr)}};
}

std::string serialize_model_instance(const ModelInstance& inst, const SchemaRegistry& registry) {
    return instance_to_json(inst, registry).dump(2) + "\n";
}

std::string serialize_device_instances(const std::vector<DeviceInstance>& devs,
                                       const SchemaRegistry& registry) {
    return devices_to_json(devs, registry).dump(2) + "\n";
}

namespace {

json slot_type_json(const SlotType& t) {
    switch (t.kind) {
    case SlotType::Kind::Primitive:
        return json{{"primitive", std::string(primitive_kind_name(t.primitive))}};
    case SlotType::Kind::List:
        return json{{"list", slot_type_json(*t.element)}};
    case SlotType::Kind::Group: {
        json slots = json::array();
        for (const auto& s : t.group->slots)
            slots.push_back(json{{"name", s.name},
                                 {"type", slot_type_json(s.type)},
                                 {"optional", s.optional},
                                 {"description", s.description}});
        return json{{"group", json{{"name", t.group->name}, {"slots", std::move(slots)}}}};
    }
    }
    return json();
}

} // namespace

std::string serialize_schemas(const SchemaRegistry& registry) {
    json arr = json::array();
    auto emit = [&](const CategorySchema& s) {
        json slots = json::array();
        for (const auto& d : s.slots)
            slots.push_back(json{{"name", d.name},
                                 {"type", slot_type_json(d.type)},
                                 {"optional", d.optional},
                                 {"description", d.description}});
        arr.push_back(json{{"name", s.name}, {"slots", std::move(slots)}});
    };
    for (const auto& name : registry.category_names())
        emit(registry.get(name));
    emit(registry.generic());
    return json{{"schemas", std::move(arr)}}.dump(2) + "\n";
}

} // namespace perimod
