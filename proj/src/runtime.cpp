// SPDX-License-Identifier: Apache-2.0
#include "perimod/runtime.hpp"

#include "perimod/errors.hpp"
#include "perimod/util.hpp"
#include "perimod/validate.hpp"

#include <algorithm>
#include <cassert>
#include <cstring>
#include <sstream>

namespace perimod {

std::string TraceEvent::format() const {
    std::ostringstream out;
    switch (kind) {
    case Kind::Read:
        out << "read " << to_hex(addr) << " " << size << " " << to_hex(value);
        break;
    case Kind::Write:
        out << "write " << to_hex(addr) << " " << size << " " << to_hex(value);
        break;
    case Kind::Tick:
        out << "tick " << count;
        break;
    case Kind::IrqEdge:
        out << "irq " << line << " " << level;
        break;
    case Kind::DmaComplete:
        out << "dma-complete " << device << " " << index << " " << count;
        break;
    }
    return out.str();
}

namespace {

const SlotValue* find_slot(const SlotMap& slots, const std::string& name) {
    auto it = slots.find(name);
    return it == slots.end() ? nullptr : &it->second;
}

} // namespace

Machine::Machine(std::vector<DeviceInstance> devs, std::uint64_t mem_size,
                 std::uint64_t ram_base, MachineOptions opts)
    : devices_(std::move(devs)), ram_(mem_size, 0), ram_base_(ram_base), opts_(opts) {
    // Devices must arrive self-consistent.
    for (const auto& dev : devices_) {
        auto problems = check_type_invariants(dev);
        if (!problems.empty())
            throw MachineBuildError("device '" + dev.name + "': " + problems.front());
        ValidationReport rep = validate_all(dev.model, {dev});
        if (!rep.pass())
            throw MachineBuildError("device '" + dev.name +
                                    "' fails validation: " + rep.findings.front().message);
    }
    ValidationReport cross = check_instances(devices_);
    if (!cross.pass())
        throw MachineBuildError(cross.findings.front().message);

    for (auto& dev : devices_) {
        DeviceRt rt;
        rt.inst = dev;
        rt.base = dev.base;
        bind_device(rt);
        rts_.push_back(std::move(rt));
    }

    // MMIO ranges must be pairwise disjoint and disjoint from RAM.
    std::vector<std::pair<std::uint64_t, std::uint64_t>> ranges;
    for (const auto& rt : rts_)
        if (rt.end > rt.base)
            ranges.emplace_back(rt.base, rt.end);
    if (ram_.size() > 0)
        ranges.emplace_back(ram_base_, ram_base_ + ram_.size());
    std::sort(ranges.begin(), ranges.end());
    for (std::size_t i = 1; i < ranges.size(); ++i)
        if (ranges[i].first < ranges[i - 1].second)
            throw MachineBuildError("address ranges [" + to_hex(ranges[i - 1].first) + ", " +
                                    to_hex(ranges[i - 1].second) + ") and [" +
                                    to_hex(ranges[i].first) + ", " + to_hex(ranges[i].second) +
                                    ") overlap");

    for (std::size_t di = 0; di < rts_.size(); ++di) {
        for (std::uint32_t irq : rts_[di].inst.irqs)
            known_lines_.insert(irq);
        for (std::size_t ei = 0; ei < rts_[di].evts.size(); ++ei)
            if (rts_[di].evts[ei].line) {
                irq_groups_[*rts_[di].evts[ei].line].emplace_back(di, ei);
                known_lines_.insert(*rts_[di].evts[ei].line);
            }
    }
    for (std::uint32_t line : known_lines_)
        line_snapshot_[line] = compute_line(line);
}

Machine build_machine(std::vector<DeviceInstance> devs, std::uint64_t mem_size,
                      std::uint64_t ram_base, MachineOptions opts) {
    return Machine(std::move(devs), mem_size, ram_base, opts);
}

// ---------------------------------------------------------------------------
// Binding

Machine::BoundField Machine::bind_field(const DeviceRt& rt, const RegFieldRef& ref) const {
    auto it = rt.reg_index.find(ref.reg);
    if (it == rt.reg_index.end())
        throw MachineBuildError("device '" + rt.inst.name + "': unknown register '" + ref.reg +
                                "'");
    const RegField* f = rt.inst.model.find_field(ref.reg, ref.field);
    if (!f)
        throw MachineBuildError("device '" + rt.inst.name + "': unknown field '" + ref.str() +
                                "'");
    return BoundField{it->second, f->offset, f->width};
}

void Machine::bind_device(DeviceRt& rt) {
    const ModelInstance& model = rt.inst.model;
    std::uint64_t extent = 0;
    for (std::size_t i = 0; i < model.regs.size(); ++i) {
        const Reg& r = model.regs[i];
        rt.reg_index[r.name] = i;
        extent = std::max(extent, r.offset + r.width / 8);
    }
    rt.end = rt.base + extent;
    rt.reg_values.assign(model.regs.size(), 0);

    auto bind_state = [&](const RegFieldState& s) {
        return BoundState{bind_field(rt, s.field), s.value};
    };

    for (const auto& u : model.updates) {
        BoundUpd bu;
        for (const auto& c : u.condition) {
            bu.condition.push_back(bind_state(c));
            bu.condition_regs.insert(bu.condition.back().field.reg);
        }
        for (const auto& a : u.action)
            bu.action.push_back(bind_state(a));
        rt.upds.push_back(std::move(bu));
    }

    // Every switch and event in the slot tree participates in write handling
    // and interrupt aggregation, independent of the semantic engines below.
    std::map<std::string, std::size_t> swt_at;
    std::map<std::string, std::size_t> evt_at;
    std::function<void(const std::string&, const SlotValue&)> walk =
        [&](const std::string& path, const SlotValue& v) {
            if (auto* sw = v.get<Swt>()) {
                BoundSwt b;
                b.enable = bind_state(sw->enable);
                b.disable = bind_state(sw->disable);
                if (sw->status)
                    b.status = bind_state(*sw->status);
                swt_at[path] = rt.swts.size();
                rt.swts.push_back(std::move(b));
            } else if (auto* e = v.get<Evt>()) {
                BoundEvt b;
                b.happen = bind_state(e->happen);
                b.active = bind_state(e->active);
                b.enable = bind_state(e->enable);
                b.disable = bind_state(e->disable);
                b.clear = bind_state(e->clear);
                b.line = e->irq_line;
                b.path = path;
                evt_at[path] = rt.evts.size();
                rt.evts.push_back(std::move(b));
            } else if (auto* l = v.get<SlotValue::List>()) {
                for (std::size_t i = 0; i < l->size(); ++i)
                    walk(path + "." + std::to_string(i), (*l)[i]);
            } else if (auto* g = v.get<SlotMap>()) {
                for (const auto& [name, sub] : *g)
                    walk(path + "." + name, sub);
            }
        };
    for (const auto& [name, v] : model.slots)
        walk(name, v);

    auto need = [&](const SlotMap& m, const std::string& name,
                    const std::string& where) -> const SlotValue& {
        const SlotValue* v = find_slot(m, name);
        if (!v)
            throw MachineBuildError("device '" + rt.inst.name + "': slot '" + where + "." + name +
                                    "' missing");
        return *v;
    };
    auto reg_of = [&](const SlotValue& v, const std::string& where) -> std::size_t {
        auto* name = v.get<std::string>();
        if (!name)
            throw MachineBuildError("device '" + rt.inst.name + "': slot '" + where +
                                    "' is not a register reference");
        auto it = rt.reg_index.find(*name);
        if (it == rt.reg_index.end())
            throw MachineBuildError("device '" + rt.inst.name + "': unknown register '" + *name +
                                    "'");
        return it->second;
    };

    const std::string& cat = model.category;
    if (cat == "Timer") {
        auto bind_channels = [&](const std::string& list_name, const std::string& reg_slot,
                                 const std::string& evt_slot, bool counter) {
            const SlotValue* list = find_slot(model.slots, list_name);
            if (!list || !list->is<SlotValue::List>())
                return;
            const auto& l = *list->get<SlotValue::List>();
            for (std::size_t i = 0; i < l.size(); ++i) {
                const auto* g = l[i].get<SlotMap>();
                if (!g)
                    continue;
                std::string where = list_name + "." + std::to_string(i);
                if (counter) {
                    TimerCounter tc;
                    tc.tick_reg = reg_of(need(*g, "tick", where), where + ".tick");
                    tc.period_reg = reg_of(need(*g, "period", where), where + ".period");
                    tc.enable_swt = swt_at.at(where + ".enable");
                    tc.evt = evt_at.at(where + "." + evt_slot);
                    rt.counters.push_back(tc);
                } else {
                    TimerChannel ch;
                    ch.compare_reg = reg_of(need(*g, reg_slot, where), where + "." + reg_slot);
                    ch.enable_swt = swt_at.at(where + ".enable");
                    ch.evt = evt_at.at(where + "." + evt_slot);
                    rt.channels.push_back(ch);
                }
            }
        };
        bind_channels("counters", "tick", "period_evt", true);
        bind_channels("input_captures", "capture", "capture_evt", false);
        bind_channels("output_compares", "compare", "compare_evt", false);
    } else if (cat == "UART") {
        UartEngine u;
        u.data_reg = reg_of(need(model.slots, "data", "uart"), "data");
        u.tx_swt = swt_at.at("tx_enable");
        u.rx_swt = swt_at.at("rx_enable");
        u.tx_evt = evt_at.at("tx_evt");
        u.rx_evt = evt_at.at("rx_evt");
        rt.uart = std::move(u);
    } else if (cat == "GPIO") {
        GpioEngine g;
        g.input_reg = reg_of(need(model.slots, "input", "gpio"), "input");
        g.set_reg = reg_of(need(model.slots, "output_set", "gpio"), "output_set");
        g.clear_reg = reg_of(need(model.slots, "output_clear", "gpio"), "output_clear");
        if (const SlotValue* evts = find_slot(model.slots, "edge_evts"))
            if (auto* l = evts->get<SlotValue::List>())
                for (std::size_t i = 0; i < l->size(); ++i)
                    g.edge_evts.push_back(evt_at.at("edge_evts." + std::to_string(i)));
        rt.gpio = std::move(g);
    } else if (cat == "DMA") {
        const SlotValue* list = find_slot(model.slots, "trans_descs");
        if (list && list->is<SlotValue::List>()) {
            const auto& l = *list->get<SlotValue::List>();
            for (std::size_t i = 0; i < l.size(); ++i) {
                const auto* g = l[i].get<SlotMap>();
                if (!g)
                    continue;
                std::string where = "trans_descs." + std::to_string(i);
                DmaDesc d;
                d.enable_swt = swt_at.at(where + ".enable");
                d.complete_evt = evt_at.at(where + ".complete");
                d.src_reg = reg_of(need(*g, "src", where), where + ".src");
                d.dst_reg = reg_of(need(*g, "dst", where), where + ".dst");
                d.cnt_reg = reg_of(need(*g, "cnt", where), where + ".cnt");
                const auto* sm = need(*g, "src_width", where).get<RegFieldMap>();
                const auto* dm = need(*g, "dst_width", where).get<RegFieldMap>();
                if (!sm || !dm)
                    throw MachineBuildError("device '" + rt.inst.name +
                                            "': dma widths must be field maps");
                d.src_width = BoundMap{bind_field(rt, sm->field), sm->map};
                d.dst_width = BoundMap{bind_field(rt, dm->field), dm->map};
                if (const SlotValue* dir = find_slot(*g, "dir"))
                    if (auto* ds = dir->get<RegFieldState>())
                        d.dir = bind_state(*ds);
                rt.dma.push_back(std::move(d));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Field and register access

std::uint64_t Machine::extract_field(std::uint64_t reg_value, const BoundField& f) {
    return (reg_value >> f.offset) & width_mask(f.width);
}

std::uint64_t Machine::field_value(const DeviceRt& rt, const BoundField& f) const {
    return extract_field(rt.reg_values[f.reg], f);
}

void Machine::set_field(DeviceRt& rt, const BoundField& f, std::uint64_t v) {
    std::uint64_t fm = width_mask(f.width) << f.offset;
    std::uint64_t rv = rt.reg_values[f.reg];
    rv = (rv & ~fm) | ((v & width_mask(f.width)) << f.offset);
    rt.reg_values[f.reg] = rv & width_mask(rt.inst.model.regs[f.reg].width);
}

std::uint64_t Machine::negated(std::uint64_t value) {
    return value == 0 ? 1 : 0;
}

std::optional<Machine::RegLocation> Machine::locate(std::uint64_t addr) const {
    for (std::size_t di = 0; di < rts_.size(); ++di) {
        const DeviceRt& rt = rts_[di];
        if (addr < rt.base || addr >= rt.end)
            continue;
        std::uint64_t rel = addr - rt.base;
        for (std::size_t ri = 0; ri < rt.inst.model.regs.size(); ++ri) {
            const Reg& r = rt.inst.model.regs[ri];
            if (rel >= r.offset && rel < r.offset + r.width / 8)
                return RegLocation{di, ri, static_cast<unsigned>(rel - r.offset)};
        }
        return std::nullopt; // inside the device range but between registers
    }
    return std::nullopt;
}

void Machine::emit(const TraceEvent& ev) {
    if (sink_)
        sink_(ev);
}

void Machine::check_masking() const {
#ifndef NDEBUG
    for (const auto& rt : rts_)
        for (std::size_t i = 0; i < rt.reg_values.size(); ++i)
            assert(rt.reg_values[i] <= width_mask(rt.inst.model.regs[i].width) &&
                   "register value exceeds its width");
#endif
}

int Machine::compute_line(std::uint32_t line) const {
    auto it = irq_groups_.find(line);
    if (it == irq_groups_.end())
        return 0;
    for (const auto& [di, ei] : it->second) {
        const DeviceRt& rt = rts_[di];
        const BoundEvt& e = rt.evts[ei];
        if (field_value(rt, e.happen.field) == e.happen.value &&
            field_value(rt, e.active.field) == e.active.value)
            return 1;
    }
    return 0;
}

int Machine::irq_level(std::uint32_t line) const {
    if (!known_lines_.count(line))
        throw Error("unknown interrupt line " + std::to_string(line));
    return compute_line(line);
}

void Machine::refresh_lines() {
    for (std::uint32_t line : known_lines_) {
        int level = compute_line(line);
        auto it = line_snapshot_.find(line);
        if (it->second != level) {
            it->second = level;
            TraceEvent ev;
            ev.kind = TraceEvent::Kind::IrqEdge;
            ev.line = line;
            ev.level = level;
            emit(ev);
        }
    }
}

// ---------------------------------------------------------------------------
// MMIO

std::uint64_t Machine::mmio_read(std::uint64_t addr, unsigned size_bytes) {
    auto loc = locate(addr);
    if (!loc) {
        if (opts_.fault_on_unmapped)
            throw BusFault("read of unmapped address " + to_hex(addr), addr);
        diagnostics_.push_back("read of unmapped address " + to_hex(addr) + " returned 0");
        TraceEvent ev;
        ev.kind = TraceEvent::Kind::Read;
        ev.addr = addr;
        ev.size = size_bytes;
        ev.value = 0;
        emit(ev);
        return 0;
    }
    DeviceRt& rt = rts_[loc->dev];
    const Reg& reg = rt.inst.model.regs[loc->reg];
    if (size_bytes == 0 || size_bytes > 8 || size_bytes * 8 > reg.width ||
        loc->byte_offset + size_bytes > reg.width / 8)
        throw BusFault("read of " + std::to_string(size_bytes) + " bytes at " + to_hex(addr) +
                           " does not fit register '" + reg.name + "'",
                       addr);

    std::uint64_t value;
    bool rx_pop = rt.uart && loc->reg == rt.uart->data_reg;
    if (rx_pop) {
        // a data-register read consumes one received byte
        if (!rt.uart->rx_q.empty()) {
            std::uint8_t b = rt.uart->rx_q.front();
            rt.uart->rx_q.pop_front();
            rt.reg_values[loc->reg] = b;
            value = b;
            if (rt.uart->rx_q.empty()) {
                const BoundEvt& e = rt.evts[rt.uart->rx_evt];
                set_field(rt, e.happen.field, negated(e.happen.value));
            }
        } else {
            value = 0;
        }
    } else {
        value = (rt.reg_values[loc->reg] >> (8 * loc->byte_offset)) & width_mask(size_bytes * 8);
    }

    TraceEvent ev;
    ev.kind = TraceEvent::Kind::Read;
    ev.addr = addr;
    ev.size = size_bytes;
    ev.value = value;
    emit(ev);
    refresh_lines();
    check_masking();
    return value;
}

void Machine::mmio_write(std::uint64_t addr, unsigned size_bytes, std::uint64_t value) {
    auto loc = locate(addr);
    if (!loc) {
        if (opts_.fault_on_unmapped)
            throw BusFault("write to unmapped address " + to_hex(addr), addr);
        diagnostics_.push_back("write to unmapped address " + to_hex(addr) + " ignored");
        TraceEvent ev;
        ev.kind = TraceEvent::Kind::Write;
        ev.addr = addr;
        ev.size = size_bytes;
        ev.value = value;
        emit(ev);
        return;
    }
    DeviceRt& rt = rts_[loc->dev];
    const Reg& reg = rt.inst.model.regs[loc->reg];
    if (size_bytes == 0 || size_bytes > 8 || size_bytes * 8 > reg.width ||
        loc->byte_offset + size_bytes > reg.width / 8)
        throw BusFault("write of " + std::to_string(size_bytes) + " bytes at " + to_hex(addr) +
                           " does not fit register '" + reg.name + "'",
                       addr);

    TraceEvent ev;
    ev.kind = TraceEvent::Kind::Write;
    ev.addr = addr;
    ev.size = size_bytes;
    ev.value = value & width_mask(size_bytes * 8);
    emit(ev);

    std::uint64_t old = rt.reg_values[loc->reg];
    std::uint64_t span = width_mask(size_bytes * 8) << (8 * loc->byte_offset);
    std::uint64_t raw =
        ((old & ~span) | ((value << (8 * loc->byte_offset)) & span)) & width_mask(reg.width);

    // (1) store, with happen flags kept hardware-owned: firmware writes to a
    // happen field change it only through a matching event clear below
    std::uint64_t stored = raw;
    for (const BoundEvt& e : rt.evts) {
        if (e.happen.field.reg != loc->reg)
            continue;
        std::uint64_t fm = width_mask(e.happen.field.width) << e.happen.field.offset;
        stored = (stored & ~fm) | (old & fm);
    }
    rt.reg_values[loc->reg] = stored;

    // (2) update rules triggered by this register
    run_update_pass(rt, loc->reg);

    // (3) event control, matched against the value the firmware wrote
    for (const BoundEvt& e : rt.evts) {
        if (e.enable.field.reg == loc->reg &&
            extract_field(raw, e.enable.field) == e.enable.value)
            set_field(rt, e.active.field, e.active.value);
        if (e.disable.field.reg == loc->reg &&
            extract_field(raw, e.disable.field) == e.disable.value)
            set_field(rt, e.active.field, negated(e.active.value));
        if (e.clear.field.reg == loc->reg && extract_field(raw, e.clear.field) == e.clear.value)
            set_field(rt, e.happen.field, negated(e.happen.value));
    }

    // (4) switch toggles
    std::vector<std::size_t> switched_on;
    for (std::size_t si = 0; si < rt.swts.size(); ++si) {
        BoundSwt& sw = rt.swts[si];
        if (sw.enable.field.reg == loc->reg &&
            extract_field(raw, sw.enable.field) == sw.enable.value && !sw.on) {
            sw.on = true;
            if (sw.status)
                set_field(rt, sw.status->field, sw.status->value);
            switched_on.push_back(si);
        }
        if (sw.disable.field.reg == loc->reg &&
            extract_field(raw, sw.disable.field) == sw.disable.value && sw.on) {
            sw.on = false;
            if (sw.status)
                set_field(rt, sw.status->field, negated(sw.status->value));
        }
    }

    // (5) engine kicks
    for (std::size_t si : switched_on)
        for (std::size_t di = 0; di < rt.dma.size(); ++di)
            if (rt.dma[di].enable_swt == si)
                kick_dma(rt, rt.dma[di], di);
    if (rt.uart && loc->reg == rt.uart->data_reg && rt.swts[rt.uart->tx_swt].on) {
        rt.uart->tx_q.push_back(static_cast<std::uint8_t>(value & 0xff));
        const BoundEvt& e = rt.evts[rt.uart->tx_evt];
        set_field(rt, e.happen.field, e.happen.value);
    }
    if (rt.gpio) {
        if (loc->reg == rt.gpio->set_reg)
            gpio_apply(rt, rt.gpio->pins | raw);
        else if (loc->reg == rt.gpio->clear_reg)
            gpio_apply(rt, rt.gpio->pins & ~raw);
    }

    // (6) interrupt lines
    refresh_lines();
    check_masking();
}

std::size_t Machine::run_update_pass(DeviceRt& rt, std::size_t written_reg) {
    std::vector<std::uint64_t> before = rt.reg_values;
    // One pass in declaration order against live state: a rule only fires
    // when its condition names the written register, so actions cannot chain
    // rules transitively within one write.
    for (const BoundUpd& u : rt.upds) {
        if (!u.condition_regs.count(written_reg))
            continue;
        bool satisfied = true;
        for (const BoundState& c : u.condition)
            if (field_value(rt, c.field) != c.value) {
                satisfied = false;
                break;
            }
        if (!satisfied)
            continue;
        for (const BoundState& a : u.action)
            set_field(rt, a.field, a.value);
    }
    std::size_t changed = 0;
    for (std::size_t i = 0; i < rt.reg_values.size(); ++i)
        if (rt.reg_values[i] != before[i])
            ++changed;
    return changed;
}

void Machine::gpio_apply(DeviceRt& rt, std::uint64_t new_pins) {
    GpioEngine& g = *rt.gpio;
    std::uint64_t changed = g.pins ^ new_pins;
    g.pins = new_pins;
    const Reg& input = rt.inst.model.regs[g.input_reg];
    rt.reg_values[g.input_reg] = new_pins & width_mask(input.width);
    for (std::size_t pin = 0; pin < g.edge_evts.size(); ++pin) {
        if (!(changed & (1ull << pin)) || !g.edge_evts[pin])
            continue;
        const BoundEvt& e = rt.evts[*g.edge_evts[pin]];
        set_field(rt, e.happen.field, e.happen.value);
    }
}

void Machine::kick_dma(DeviceRt& rt, DmaDesc& desc, std::size_t desc_index) {
    std::uint64_t src = rt.reg_values[desc.src_reg];
    std::uint64_t dst = rt.reg_values[desc.dst_reg];
    std::uint64_t cnt = rt.reg_values[desc.cnt_reg];

    std::uint64_t src_key = field_value(rt, desc.src_width.field);
    auto sit = desc.src_width.map.find(src_key);
    if (sit == desc.src_width.map.end()) {
        diagnostics_.push_back("dma '" + rt.inst.name + "' descriptor " +
                               std::to_string(desc_index) + ": source width key " +
                               std::to_string(src_key) + " is not mapped; transfer aborted");
        return;
    }
    std::uint64_t dst_key = field_value(rt, desc.dst_width.field);
    auto dit = desc.dst_width.map.find(dst_key);
    if (dit == desc.dst_width.map.end()) {
        diagnostics_.push_back("dma '" + rt.inst.name + "' descriptor " +
                               std::to_string(desc_index) + ": destination width key " +
                               std::to_string(dst_key) + " is not mapped; transfer aborted");
        return;
    }
    std::uint64_t unit = sit->second;

    if (desc.dir && field_value(rt, desc.dir->field) == desc.dir->value)
        std::swap(src, dst); // inverted transfer direction

    std::uint64_t total = cnt * unit;
    if (total > 0) {
        auto in_ram = [&](std::uint64_t a, std::uint64_t n) {
            return a >= ram_base_ && a + n >= a && a + n <= ram_base_ + ram_.size();
        };
        if (!in_ram(src, total) || !in_ram(dst, total)) {
            diagnostics_.push_back("dma '" + rt.inst.name + "' descriptor " +
                                   std::to_string(desc_index) + ": transfer of " +
                                   std::to_string(total) + " bytes " + to_hex(src) + " -> " +
                                   to_hex(dst) + " leaves RAM; transfer aborted");
            return;
        }
        std::memmove(ram_.data() + (dst - ram_base_), ram_.data() + (src - ram_base_), total);
    }
    rt.reg_values[desc.cnt_reg] = 0;
    const BoundEvt& e = rt.evts[desc.complete_evt];
    set_field(rt, e.happen.field, e.happen.value);

    TraceEvent ev;
    ev.kind = TraceEvent::Kind::DmaComplete;
    ev.device = rt.inst.name;
    ev.index = desc_index;
    ev.count = total;
    emit(ev);
}

// ---------------------------------------------------------------------------
// Engines driven from outside MMIO

void Machine::tick(std::uint64_t n) {
    for (std::uint64_t t = 0; t < n; ++t) {
        for (auto& rt : rts_) {
            for (const TimerCounter& tc : rt.counters) {
                if (!rt.swts[tc.enable_swt].on)
                    continue;
                const Reg& tick_reg = rt.inst.model.regs[tc.tick_reg];
                std::uint64_t v = (rt.reg_values[tc.tick_reg] + 1) & width_mask(tick_reg.width);
                rt.reg_values[tc.tick_reg] = v;
                if (v == rt.reg_values[tc.period_reg]) {
                    const BoundEvt& e = rt.evts[tc.evt];
                    set_field(rt, e.happen.field, e.happen.value);
                    rt.reg_values[tc.tick_reg] = 0;
                }
            }
            for (const TimerChannel& ch : rt.channels) {
                if (!rt.swts[ch.enable_swt].on)
                    continue;
                std::uint64_t cmp = rt.reg_values[ch.compare_reg];
                for (const TimerCounter& tc : rt.counters) {
                    if (!rt.swts[tc.enable_swt].on)
                        continue;
                    if (rt.reg_values[tc.tick_reg] == cmp) {
                        const BoundEvt& e = rt.evts[ch.evt];
                        set_field(rt, e.happen.field, e.happen.value);
                        break;
                    }
                }
            }
        }
    }
    TraceEvent ev;
    ev.kind = TraceEvent::Kind::Tick;
    ev.count = n;
    emit(ev);
    refresh_lines();
    check_masking();
}

void Machine::inject_rx(const std::string& device, std::span<const std::uint8_t> bytes) {
    DeviceRt& rt = device_rt(device);
    if (!rt.uart)
        throw Error("device '" + device + "' is not a UART");
    if (bytes.empty())
        return;
    rt.uart->rx_q.insert(rt.uart->rx_q.end(), bytes.begin(), bytes.end());
    const BoundEvt& e = rt.evts[rt.uart->rx_evt];
    set_field(rt, e.happen.field, e.happen.value);
    refresh_lines();
}

void Machine::inject_rx(const std::string& device, std::string_view bytes) {
    inject_rx(device, std::span<const std::uint8_t>(
                          reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

std::vector<std::uint8_t> Machine::read_tx(const std::string& device) {
    DeviceRt& rt = device_rt(device);
    if (!rt.uart)
        throw Error("device '" + device + "' is not a UART");
    std::vector<std::uint8_t> out(rt.uart->tx_q.begin(), rt.uart->tx_q.end());
    rt.uart->tx_q.clear();
    return out;
}

std::vector<std::uint8_t> Machine::mem_read(std::uint64_t addr, std::size_t len) const {
    if (addr < ram_base_ || addr + len < addr || addr + len > ram_base_ + ram_.size())
        throw BusFault("memory read of " + std::to_string(len) + " bytes at " + to_hex(addr) +
                           " is outside RAM",
                       addr);
    return std::vector<std::uint8_t>(ram_.begin() + (addr - ram_base_),
                                     ram_.begin() + (addr - ram_base_) + len);
}

void Machine::mem_write(std::uint64_t addr, std::span<const std::uint8_t> bytes) {
    if (addr < ram_base_ || addr + bytes.size() < addr ||
        addr + bytes.size() > ram_base_ + ram_.size())
        throw BusFault("memory write of " + std::to_string(bytes.size()) + " bytes at " +
                           to_hex(addr) + " is outside RAM",
                       addr);
    std::copy(bytes.begin(), bytes.end(), ram_.begin() + (addr - ram_base_));
}

// ---------------------------------------------------------------------------
// Introspection

Machine::DeviceRt& Machine::device_rt(const std::string& name) {
    for (auto& rt : rts_)
        if (rt.inst.name == name)
            return rt;
    throw Error("unknown device '" + name + "'");
}

const Machine::DeviceRt& Machine::device_rt(const std::string& name) const {
    for (const auto& rt : rts_)
        if (rt.inst.name == name)
            return rt;
    throw Error("unknown device '" + name + "'");
}

std::uint64_t Machine::peek_register(const std::string& device, const std::string& reg) const {
    const DeviceRt& rt = device_rt(device);
    auto it = rt.reg_index.find(reg);
    if (it == rt.reg_index.end())
        throw Error("device '" + device + "' has no register '" + reg + "'");
    return rt.reg_values[it->second];
}

void Machine::poke_register(const std::string& device, const std::string& reg,
                            std::uint64_t value) {
    DeviceRt& rt = device_rt(device);
    auto it = rt.reg_index.find(reg);
    if (it == rt.reg_index.end())
        throw Error("device '" + device + "' has no register '" + reg + "'");
    rt.reg_values[it->second] = value & width_mask(rt.inst.model.regs[it->second].width);
}

std::size_t Machine::apply_update_rules(const std::string& device, const std::string& reg) {
    DeviceRt& rt = device_rt(device);
    auto it = rt.reg_index.find(reg);
    if (it == rt.reg_index.end())
        throw Error("device '" + device + "' has no register '" + reg + "'");
    std::size_t changed = run_update_pass(rt, it->second);
    refresh_lines();
    return changed;
}

std::uint64_t Machine::reg_address(const std::string& device, const std::string& reg) const {
    const DeviceRt& rt = device_rt(device);
    auto it = rt.reg_index.find(reg);
    if (it == rt.reg_index.end())
        throw Error("device '" + device + "' has no register '" + reg + "'");
    return rt.base + rt.inst.model.regs[it->second].offset;
}

std::vector<std::uint32_t> Machine::known_lines() const {
    return std::vector<std::uint32_t>(known_lines_.begin(), known_lines_.end());
}

} // namespace perimod
