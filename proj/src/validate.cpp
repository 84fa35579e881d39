// SPDX-License-Identifier: Apache-2.0
#include "perimod/validate.hpp"

#include "perimod/util.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <json.hpp>

namespace perimod {

void ValidationReport::merge(ValidationReport other) {
    findings.insert(findings.end(), std::make_move_iterator(other.findings.begin()),
                    std::make_move_iterator(other.findings.end()));
    notes.insert(notes.end(), std::make_move_iterator(other.notes.begin()),
                 std::make_move_iterator(other.notes.end()));
}

std::string ValidationReport::to_json() const {
    nlohmann::ordered_json doc;
    doc["verdict"] = pass() ? "pass" : "fail";
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& f : findings)
        arr.push_back(nlohmann::ordered_json{{"stage", f.stage},
                                             {"rule", f.rule},
                                             {"entities", f.entities},
                                             {"message", f.message}});
    doc["findings"] = std::move(arr);
    doc["notes"] = notes;
    return doc.dump(2) + "\n";
}

ValidationReport
check_category_names(const std::vector<std::pair<std::string, std::string>>& categories) {
    ValidationReport rep;
    std::set<std::string> seen;
    for (const auto& [name, schema] : categories) {
        (void)schema;
        if (!seen.insert(name).second)
            rep.findings.push_back(Finding{1, "duplicate-category", {name},
                                           "peripheral category '" + name +
                                               "' is listed more than once"});
    }
    return rep;
}

ValidationReport check_register_overlap(const std::vector<Reg>& regs) {
    ValidationReport rep;
    // Byte-granularity half-open intervals: [offset, offset + width/8).
    for (std::size_t i = 0; i < regs.size(); ++i) {
        for (std::size_t j = i + 1; j < regs.size(); ++j) {
            const Reg& a = regs[i];
            const Reg& b = regs[j];
            std::uint64_t a_end = a.offset + a.width / 8;
            std::uint64_t b_end = b.offset + b.width / 8;
            if (a.offset < b_end && b.offset < a_end)
                rep.findings.push_back(
                    Finding{2,
                            "register-overlap",
                            {a.name, b.name},
                            "registers '" + a.name + "' [" + to_hex(a.offset) + ", " +
                                to_hex(a_end) + ") and '" + b.name + "' [" + to_hex(b.offset) +
                                ", " + to_hex(b_end) + ") overlap"});
        }
    }
    return rep;
}

ValidationReport
check_field_overlap(const std::map<std::string, std::vector<RegField>>& fields_by_reg) {
    ValidationReport rep;
    // Bit-granularity intervals; fields in different registers never conflict.
    for (const auto& [reg, fields] : fields_by_reg) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            for (std::size_t j = i + 1; j < fields.size(); ++j) {
                const RegField& a = fields[i];
                const RegField& b = fields[j];
                if (a.offset < b.offset + b.width && b.offset < a.offset + a.width)
                    rep.findings.push_back(
                        Finding{3,
                                "field-overlap",
                                {reg + "." + a.name, reg + "." + b.name},
                                "fields '" + a.name + "' [" + std::to_string(a.offset) + ", " +
                                    std::to_string(a.offset + a.width) + ") and '" + b.name +
                                    "' [" + std::to_string(b.offset) + ", " +
                                    std::to_string(b.offset + b.width) + ") of register '" + reg +
                                    "' overlap"});
            }
        }
    }
    return rep;
}

namespace {

bool slot_is_update(const std::string& path) {
    return path.rfind("updates.", 0) == 0;
}

} // namespace

ValidationReport check_referential_integrity(const ModelInstance& inst) {
    ValidationReport rep;
    visit_field_states(inst, [&](const std::string& path, const RegFieldState& s) {
        if (inst.find_field(s.field.reg, s.field.field))
            return;
        int stage = slot_is_update(path) ? 4 : 5;
        std::string what = inst.find_reg(s.field.reg)
                               ? "field '" + s.field.str() + "' is not in the field universe"
                               : "register '" + s.field.reg + "' is not in the register universe";
        rep.findings.push_back(
            Finding{stage, "dangling-reference", {s.field.str()}, path + ": " + what});
    });
    // The state walk covers field-state references; Reg-kind slots, bare
    // field references and map fields need their own pass.
    std::function<void(const std::string&, const SlotValue&)> walk =
        [&](const std::string& path, const SlotValue& v) {
            if (auto* reg = v.get<std::string>()) {
                if (!inst.find_reg(*reg))
                    rep.findings.push_back(Finding{
                        5,
                        "dangling-reference",
                        {*reg},
                        path + ": register '" + *reg + "' is not in the register universe"});
            } else if (auto* ref = v.get<RegFieldRef>()) {
                if (!inst.find_field(ref->reg, ref->field))
                    rep.findings.push_back(Finding{5,
                                                   "dangling-reference",
                                                   {ref->str()},
                                                   path + ": field '" + ref->str() +
                                                       "' is not in the field universe"});
            } else if (auto* m = v.get<RegFieldMap>()) {
                if (!inst.find_field(m->field.reg, m->field.field))
                    rep.findings.push_back(Finding{5,
                                                   "dangling-reference",
                                                   {m->field.str()},
                                                   path + ": field '" + m->field.str() +
                                                       "' is not in the field universe"});
            } else if (auto* l = v.get<SlotValue::List>()) {
                for (std::size_t i = 0; i < l->size(); ++i)
                    walk(path + "." + std::to_string(i), (*l)[i]);
            } else if (auto* g = v.get<SlotMap>()) {
                for (const auto& [name, sub] : *g)
                    walk(path + "." + name, sub);
            }
        };
    for (const auto& [name, v] : inst.slots)
        walk(name, v);
    return rep;
}

ValidationReport check_instances(const std::vector<DeviceInstance>& devs) {
    ValidationReport rep;
    std::map<std::string, std::string> names;           // name -> first owner
    std::map<std::uint64_t, std::string> bases;         // base -> first owner
    std::map<std::uint32_t, std::string> lines;         // irq -> first owner
    for (const auto& d : devs) {
        if (auto [it, fresh] = names.emplace(d.name, d.name); !fresh)
            rep.findings.push_back(Finding{
                6, "duplicate-instance-name", {d.name},
                "instance name '" + d.name + "' is used more than once"});
        if (auto [it, fresh] = bases.emplace(d.base, d.name); !fresh)
            rep.findings.push_back(Finding{6,
                                           "duplicate-base-address",
                                           {it->second, d.name},
                                           "instances '" + it->second + "' and '" + d.name +
                                               "' share base address " + to_hex(d.base)});
        for (std::uint32_t irq : d.irqs)
            if (auto [it, fresh] = lines.emplace(irq, d.name); !fresh)
                rep.findings.push_back(Finding{6,
                                               "duplicate-irq-line",
                                               {it->second, d.name},
                                               "instances '" + it->second + "' and '" + d.name +
                                                   "' share interrupt line " +
                                                   std::to_string(irq)});
    }
    // A register name appearing in models of several categories is worth
    // knowing about but is not a contradiction.
    std::map<std::string, std::set<std::string>> reg_categories;
    for (const auto& d : devs)
        for (const auto& r : d.model.regs)
            reg_categories[r.name].insert(d.model.category);
    for (const auto& [reg, cats] : reg_categories)
        if (cats.size() > 1) {
            std::string list;
            for (const auto& c : cats)
                list += (list.empty() ? "" : ", ") + c;
            rep.notes.push_back("register '" + reg + "' appears in several categories: " + list);
        }
    return rep;
}

ValidationReport check_irq_association(const DeviceInstance& dev) {
    ValidationReport rep;
    std::set<std::uint32_t> declared(dev.irqs.begin(), dev.irqs.end());
    visit_events(dev.model, [&](const std::string& path, const Evt& e) {
        if (!e.irq_line)
            return;
        if (!declared.count(*e.irq_line))
            rep.findings.push_back(Finding{7,
                                           "irq-not-declared",
                                           {dev.name, path},
                                           "event '" + path + "' of instance '" + dev.name +
                                               "' uses interrupt line " +
                                               std::to_string(*e.irq_line) +
                                               " which the instance does not declare"});
    });
    return rep;
}

ValidationReport validate_all(const ModelInstance& inst, const std::vector<DeviceInstance>& devs) {
    ValidationReport rep;
    std::vector<std::pair<std::string, std::string>> cats;
    std::set<std::string> seen;
    if (seen.insert(inst.category).second)
        cats.emplace_back(inst.category, inst.category);
    for (const auto& d : devs)
        if (seen.insert(d.model.category).second)
            cats.emplace_back(d.model.category, d.model.category);
    rep.merge(check_category_names(cats));

    rep.merge(check_register_overlap(inst.regs));
    rep.merge(check_field_overlap(inst.fields));
    rep.merge(check_referential_integrity(inst));
    for (const auto& d : devs) {
        if (d.model == inst)
            continue; // already checked standalone
        rep.merge(check_register_overlap(d.model.regs));
        rep.merge(check_field_overlap(d.model.fields));
        rep.merge(check_referential_integrity(d.model));
    }
    rep.merge(check_instances(devs));
    for (const auto& d : devs)
        rep.merge(check_irq_association(d));
    return rep;
}

} // namespace perimod
