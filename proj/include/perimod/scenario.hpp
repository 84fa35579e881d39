// SPDX-License-Identifier: Apache-2.0
//
// Line-oriented scenario scripts driving a machine, with expectations, and
// the trace they produce for golden-file comparison.

#pragma once

#include "perimod/runtime.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace perimod {

struct ScenarioStep {
    enum class Kind {
        Write,     // write ADDR SIZE VALUE
        ReadExpect,// read_expect ADDR SIZE EXPECTED
        Tick,      // tick N
        InjectRx,  // inject_rx DEVICE BYTES
        ExpectTx,  // expect_tx DEVICE BYTES
        ExpectIrq, // expect_irq LINE LEVEL
        MemWrite,  // mem_write ADDR HEXBYTES
        MemExpect, // mem_expect ADDR HEXBYTES
    };

    Kind kind = Kind::Write;
    int line_no = 0;
    std::uint64_t addr = 0;
    unsigned size = 0;
    std::uint64_t value = 0;
    std::uint32_t irq_line = 0;
    int level = 0;
    std::string device;
    std::vector<std::uint8_t> bytes;
};

/// A parsed scenario. Addresses may be written as DEVICE.REG and are resolved
/// against the machine's map at load time; unresolvable names fail the load.
struct Scenario {
    std::vector<ScenarioStep> steps;

    static Scenario parse(std::string_view text, const Machine& machine);
    static Scenario load(const std::string& path, const Machine& machine);
};

struct ScenarioOutcome {
    bool ok = true;
    bool bus_fault = false;
    int failed_step = -1;   // step line number on failure
    std::string message;
    std::string trace;      // written regardless of the outcome
};

/// Execute steps in order; the first failed expectation aborts with the step
/// index and expected-vs-actual detail.
ScenarioOutcome run_scenario(Machine& machine, const Scenario& scenario);

} // namespace perimod
