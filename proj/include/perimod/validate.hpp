// SPDX-License-Identifier: Apache-2.0
//
// Self-contradiction checks applied to extraction results, usable standalone
// on hand-written instances. Findings are exhaustive, never fail-fast, so a
// retry loop gets full diagnostics in one pass.

#pragma once

#include "perimod/primitives.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace perimod {

/// One detected contradiction, tagged with the pipeline stage (1-7) whose
/// validation rule produced it.
struct Finding {
    int stage = 0;
    std::string rule;
    std::vector<std::string> entities;
    std::string message;

    bool operator==(const Finding&) const = default;
};

struct ValidationReport {
    std::vector<Finding> findings;
    std::vector<std::string> notes; // informational, do not affect the verdict

    bool pass() const { return findings.empty(); }
    void merge(ValidationReport other);
    std::string to_json() const;
};

/// Stage 1: repeated peripheral category names.
ValidationReport
check_category_names(const std::vector<std::pair<std::string, std::string>>& categories);

/// Stage 2: registers whose byte intervals [offset, offset + width/8)
/// intersect. Abutting registers (end == start) do not overlap.
ValidationReport check_register_overlap(const std::vector<Reg>& regs);

/// Stage 3: same-register fields whose bit intervals intersect.
ValidationReport
check_field_overlap(const std::map<std::string, std::vector<RegField>>& fields_by_reg);

/// Stages 4-5: updates or semantic slots naming a register or field absent
/// from the instance's universes.
ValidationReport check_referential_integrity(const ModelInstance& inst);

/// Stage 6: repeated instance names, base addresses, or interrupt lines
/// shared across instances.
ValidationReport check_instances(const std::vector<DeviceInstance>& devs);

/// Stage 7: events whose assigned interrupt line is not among the device's
/// lines. Events with no line assigned yet are skipped.
ValidationReport check_irq_association(const DeviceInstance& dev);

/// Union of all checks over a model instance and its device instances,
/// stage-tagged.
ValidationReport validate_all(const ModelInstance& inst,
                              const std::vector<DeviceInstance>& devs);

} // namespace perimod
