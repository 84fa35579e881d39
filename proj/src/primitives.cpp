// SPDX-License-Identifier: Apache-2.0
#include "perimod/primitives.hpp"

#include "perimod/errors.hpp"
#include "perimod/util.hpp"

#include <algorithm>

namespace perimod {

const Reg* ModelInstance::find_reg(std::string_view name) const {
    for (const auto& r : regs)
        if (r.name == name)
            return &r;
    return nullptr;
}

const RegField* ModelInstance::find_field(std::string_view reg, std::string_view field) const {
    auto it = fields.find(std::string(reg));
    if (it == fields.end())
        return nullptr;
    for (const auto& f : it->second)
        if (f.name == field)
            return &f;
    return nullptr;
}

namespace {

void visit_slot_states(const std::string& path, const SlotValue& v,
                       const std::function<void(const std::string&, const RegFieldState&)>& fn) {
    if (auto* s = v.get<RegFieldState>()) {
        fn(path, *s);
    } else if (auto* sw = v.get<Swt>()) {
        fn(path + ".enable", sw->enable);
        fn(path + ".disable", sw->disable);
        if (sw->status)
            fn(path + ".status", *sw->status);
    } else if (auto* u = v.get<Upd>()) {
        for (std::size_t i = 0; i < u->condition.size(); ++i)
            fn(path + ".condition." + std::to_string(i), u->condition[i]);
        for (std::size_t i = 0; i < u->action.size(); ++i)
            fn(path + ".action." + std::to_string(i), u->action[i]);
    } else if (auto* e = v.get<Evt>()) {
        fn(path + ".happen", e->happen);
        fn(path + ".active", e->active);
        fn(path + ".enable", e->enable);
        fn(path + ".disable", e->disable);
        fn(path + ".clear", e->clear);
    } else if (auto* l = v.get<SlotValue::List>()) {
        for (std::size_t i = 0; i < l->size(); ++i)
            visit_slot_states(path + "." + std::to_string(i), (*l)[i], fn);
    } else if (auto* g = v.get<SlotMap>()) {
        for (const auto& [name, sub] : *g)
            visit_slot_states(path + "." + name, sub, fn);
    }
}

void visit_slot_events(const std::string& path, SlotValue& v,
                       const std::function<void(const std::string&, Evt&)>& fn) {
    if (auto* e = std::get_if<Evt>(&v.value)) {
        fn(path, *e);
    } else if (auto* l = std::get_if<SlotValue::List>(&v.value)) {
        for (std::size_t i = 0; i < l->size(); ++i)
            visit_slot_events(path + "." + std::to_string(i), (*l)[i], fn);
    } else if (auto* g = std::get_if<SlotMap>(&v.value)) {
        for (auto& [name, sub] : *g)
            visit_slot_events(path + "." + name, sub, fn);
    }
}

void visit_slot_events(const std::string& path, const SlotValue& v,
                       const std::function<void(const std::string&, const Evt&)>& fn) {
    if (auto* e = std::get_if<Evt>(&v.value)) {
        fn(path, *e);
    } else if (auto* l = std::get_if<SlotValue::List>(&v.value)) {
        for (std::size_t i = 0; i < l->size(); ++i)
            visit_slot_events(path + "." + std::to_string(i), (*l)[i], fn);
    } else if (auto* g = std::get_if<SlotMap>(&v.value)) {
        for (const auto& [name, sub] : *g)
            visit_slot_events(path + "." + name, sub, fn);
    }
}

} // namespace

void visit_field_states(const ModelInstance& inst,
                        const std::function<void(const std::string&, const RegFieldState&)>& fn) {
    for (std::size_t i = 0; i < inst.updates.size(); ++i) {
        const auto& u = inst.updates[i];
        std::string base = "updates." + std::to_string(i);
        for (std::size_t j = 0; j < u.condition.size(); ++j)
            fn(base + ".condition." + std::to_string(j), u.condition[j]);
        for (std::size_t j = 0; j < u.action.size(); ++j)
            fn(base + ".action." + std::to_string(j), u.action[j]);
    }
    for (const auto& [name, v] : inst.slots)
        visit_slot_states(name, v, fn);
}

void visit_events(ModelInstance& inst,
                  const std::function<void(const std::string&, Evt&)>& fn) {
    for (auto& [name, v] : inst.slots)
        visit_slot_events(name, v, fn);
}

void visit_events(const ModelInstance& inst,
                  const std::function<void(const std::string&, const Evt&)>& fn) {
    for (const auto& [name, v] : inst.slots)
        visit_slot_events(name, v, fn);
}

namespace {

void check_map_values(const ModelInstance& inst, const std::string& path, const RegFieldMap& m,
                      std::vector<std::string>& out) {
    if (m.map.empty())
        out.push_back(path + ": map must be non-empty");
    const RegField* f = inst.find_field(m.field.reg, m.field.field);
    if (!f) {
        out.push_back(path + ": dangling field reference " + m.field.str());
        return;
    }
    for (const auto& [k, v] : m.map) {
        (void)v;
        if (f->width < 64 && k >= (1ull << f->width))
            out.push_back(path + ": map key " + std::to_string(k) + " does not fit field " +
                          m.field.str() + " of width " + std::to_string(f->width));
    }
}

void check_slot_value(const ModelInstance& inst, const std::string& path, const SlotValue& v,
                      std::vector<std::string>& out) {
    if (auto* reg = v.get<std::string>()) {
        if (!inst.find_reg(*reg))
            out.push_back(path + ": dangling register reference " + *reg);
    } else if (auto* ref = v.get<RegFieldRef>()) {
        if (!inst.find_field(ref->reg, ref->field))
            out.push_back(path + ": dangling field reference " + ref->str());
    } else if (auto* m = v.get<RegFieldMap>()) {
        check_map_values(inst, path, *m, out);
    } else if (auto* sw = v.get<Swt>()) {
        if (sw->enable.field == sw->disable.field && sw->enable.value == sw->disable.value)
            out.push_back(path + ": switch enable and disable must not be the same (field, value) pair");
    } else if (auto* e = v.get<Evt>()) {
        if (e->enable.field == e->disable.field && e->enable.value == e->disable.value)
            out.push_back(path + ": event enable and disable values must differ on a shared field");
    } else if (auto* mf = v.get<MemField>()) {
        if (mf->width < 1)
            out.push_back(path + ": memory field width must be >= 1");
    } else if (auto* ms = v.get<MemFieldState>()) {
        if (ms->field.width < 64 && ms->value >= (1ull << ms->field.width))
            out.push_back(path + ": value " + std::to_string(ms->value) +
                          " does not fit memory field of width " + std::to_string(ms->field.width));
    } else if (auto* l = v.get<SlotValue::List>()) {
        for (std::size_t i = 0; i < l->size(); ++i)
            check_slot_value(inst, path + "." + std::to_string(i), (*l)[i], out);
    } else if (auto* g = v.get<SlotMap>()) {
        for (const auto& [name, sub] : *g)
            check_slot_value(inst, path + "." + name, sub, out);
    }
}

} // namespace

std::vector<std::string> check_type_invariants(const ModelInstance& inst) {
    std::vector<std::string> out;

    for (const auto& r : inst.regs) {
        if (r.name.empty())
            out.push_back("regs: register name must be non-empty");
        if (r.width != 8 && r.width != 16 && r.width != 32 && r.width != 64)
            out.push_back("regs." + r.name + ": width must be one of 8/16/32/64, got " +
                          std::to_string(r.width));
    }
    for (const auto& [reg, fs] : inst.fields) {
        const Reg* holder = inst.find_reg(reg);
        if (!holder) {
            out.push_back("fields." + reg + ": fields listed for unknown register");
            continue;
        }
        for (const auto& f : fs) {
            if (f.width < 1)
                out.push_back("fields." + reg + "." + f.name + ": field width must be >= 1");
            if (f.offset + f.width > holder->width)
                out.push_back("fields." + reg + "." + f.name + ": field [" +
                              std::to_string(f.offset) + ", " + std::to_string(f.offset + f.width) +
                              ") exceeds register width " + std::to_string(holder->width));
        }
    }

    for (std::size_t i = 0; i < inst.updates.size(); ++i) {
        const auto& u = inst.updates[i];
        std::string base = "updates." + std::to_string(i);
        if (u.condition.empty())
            out.push_back(base + ": condition list must be non-empty");
        if (u.action.empty())
            out.push_back(base + ": action list must be non-empty");
        for (const auto& a : u.action)
            for (const auto& c : u.condition)
                if (a.field == c.field && a.value == c.value)
                    out.push_back(base + ": action repeats condition state " + a.field.str() + "=" +
                                  std::to_string(a.value));
    }

    // Every referenced field must exist and every value must fit its width.
    visit_field_states(inst, [&](const std::string& path, const RegFieldState& s) {
        const RegField* f = inst.find_field(s.field.reg, s.field.field);
        if (!f) {
            out.push_back(path + ": dangling field reference " + s.field.str());
            return;
        }
        if (f->width < 64 && s.value >= (1ull << f->width))
            out.push_back(path + ": value " + std::to_string(s.value) + " does not fit field " +
                          s.field.str() + " of width " + std::to_string(f->width));
    });

    for (const auto& [name, v] : inst.slots)
        check_slot_value(inst, name, v, out);

    return out;
}

std::vector<std::string> check_type_invariants(const DeviceInstance& dev) {
    std::vector<std::string> out = check_type_invariants(dev.model);
    if (dev.name.empty())
        out.push_back("instance name must be non-empty");
    if (dev.base % 4 != 0)
        out.push_back(dev.name + ": base address " + to_hex(dev.base) +
                      " is not aligned to 4 bytes");
    auto sorted = dev.irqs;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        out.push_back(dev.name + ": irq lines must be distinct");
    return out;
}

} // namespace perimod
