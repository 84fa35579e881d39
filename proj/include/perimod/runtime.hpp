// SPDX-License-Identifier: Apache-2.0
//
// The interpretive emulation runtime: a flat physical memory, an MMIO
// dispatch map over device instances, event-driven interrupt lines, and the
// timer/UART/GPIO/DMA engine semantics.

#pragma once

#include "perimod/primitives.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace perimod {

struct MachineOptions {
    /// Fault on unmapped accesses (default); otherwise read-as-zero /
    /// ignore-write with a diagnostic.
    bool fault_on_unmapped = true;
};

/// One entry of the ordered event log. Formatting is fixed so trace files
/// are byte-stable for golden comparison.
struct TraceEvent {
    enum class Kind { Read, Write, Tick, IrqEdge, DmaComplete };

    Kind kind = Kind::Read;
    std::uint64_t addr = 0;
    unsigned size = 0;
    std::uint64_t value = 0;
    std::uint64_t count = 0; // tick count, dma byte total
    std::uint32_t line = 0;
    int level = 0;
    std::string device;
    std::size_t index = 0; // dma descriptor index

    std::string format() const;
};

using TraceSink = std::function<void(const TraceEvent&)>;

class Machine {
public:
    /// Builds the runtime: registers zeroed, lines low, engines idle.
    /// Validates the devices, the disjointness of their MMIO ranges and the
    /// RAM range; throws MachineBuildError on any violation.
    Machine(std::vector<DeviceInstance> devs, std::uint64_t mem_size,
            std::uint64_t ram_base = 0x20000000, MachineOptions opts = {});

    // -- MMIO ---------------------------------------------------------------

    /// Sub-word reads extract the addressed bytes, little-endian. Reading a
    /// UART data register pops one byte from the rx queue; when the queue
    /// empties the rx event's happen flag is cleared.
    std::uint64_t mmio_read(std::uint64_t addr, unsigned size_bytes);

    /// Applies, in order: the masked store (happen flags are hardware-owned
    /// and keep their value unless the write matches an event's clear state),
    /// the update rules triggered by this register, event enable/disable/
    /// clear control, switch toggles, engine kicks (DMA start, UART tx, GPIO
    /// pins), and the interrupt line recomputation.
    void mmio_write(std::uint64_t addr, unsigned size_bytes, std::uint64_t value);

    // -- Engines ------------------------------------------------------------

    /// Advance every enabled timer counter by one per tick: the tick register
    /// increments (masked); on reaching the period register value the period
    /// event's happen flag is set and the tick register wraps to zero.
    /// Capture/compare channels flag their events when an enabled counter's
    /// tick matches their register.
    void tick(std::uint64_t n);

    /// Current level of an interrupt line, recomputed from register state:
    /// the OR over the line's events of (happen field at its happen value AND
    /// active field at its active value).
    int irq_level(std::uint32_t line) const;

    /// Append bytes to a UART device's rx queue and set the rx event's happen
    /// flag (no-op on empty input). Throws Error for non-UART devices.
    void inject_rx(const std::string& device, std::span<const std::uint8_t> bytes);
    void inject_rx(const std::string& device, std::string_view bytes);

    /// Drain and return a UART device's tx queue.
    std::vector<std::uint8_t> read_tx(const std::string& device);

    // -- Physical memory ----------------------------------------------------

    std::vector<std::uint8_t> mem_read(std::uint64_t addr, std::size_t len) const;
    void mem_write(std::uint64_t addr, std::span<const std::uint8_t> bytes);

    std::uint64_t ram_base() const { return ram_base_; }
    std::uint64_t ram_size() const { return ram_.size(); }

    // -- Introspection ------------------------------------------------------

    /// Register access without side effects (scenario setup, tests).
    std::uint64_t peek_register(const std::string& device, const std::string& reg) const;
    void poke_register(const std::string& device, const std::string& reg, std::uint64_t value);

    /// One pass of the update engine for rules whose condition references the
    /// named register, evaluated against current state in declaration order.
    /// Returns the number of registers whose value changed net of the pass
    /// (0 means the pass was a no-op).
    std::size_t apply_update_rules(const std::string& device, const std::string& reg);

    /// Address of DEVICE.REG in the physical map.
    std::uint64_t reg_address(const std::string& device, const std::string& reg) const;

    /// Lines known to the machine: every device's declared irqs plus every
    /// assigned event line.
    std::vector<std::uint32_t> known_lines() const;

    const std::vector<DeviceInstance>& devices() const { return devices_; }
    const std::vector<std::string>& diagnostics() const { return diagnostics_; }

    void set_trace_sink(TraceSink sink) { sink_ = std::move(sink); }

private:
    struct BoundField {
        std::size_t reg = 0;
        unsigned offset = 0;
        unsigned width = 1;
    };
    struct BoundState {
        BoundField field;
        std::uint64_t value = 0;
    };
    struct BoundSwt {
        BoundState enable;
        BoundState disable;
        std::optional<BoundState> status;
        bool on = false;
    };
    struct BoundEvt {
        BoundState happen;
        BoundState active;
        BoundState enable;
        BoundState disable;
        BoundState clear;
        std::optional<std::uint32_t> line;
        std::string path;
    };
    struct BoundMap {
        BoundField field;
        std::map<std::uint64_t, std::uint64_t> map;
    };
    struct BoundUpd {
        std::vector<BoundState> condition;
        std::vector<BoundState> action;
        std::set<std::size_t> condition_regs;
    };
    struct TimerCounter {
        std::size_t tick_reg = 0;
        std::size_t period_reg = 0;
        std::size_t enable_swt = 0;
        std::size_t evt = 0;
    };
    struct TimerChannel { // input capture / output compare
        std::size_t compare_reg = 0;
        std::size_t enable_swt = 0;
        std::size_t evt = 0;
    };
    struct UartEngine {
        std::size_t data_reg = 0;
        std::size_t tx_swt = 0;
        std::size_t rx_swt = 0;
        std::size_t tx_evt = 0;
        std::size_t rx_evt = 0;
        std::deque<std::uint8_t> rx_q;
        std::deque<std::uint8_t> tx_q;
    };
    struct GpioEngine {
        std::size_t input_reg = 0;
        std::size_t set_reg = 0;
        std::size_t clear_reg = 0;
        std::vector<std::optional<std::size_t>> edge_evts; // index = pin
        std::uint64_t pins = 0;
    };
    struct DmaDesc {
        std::size_t enable_swt = 0;
        std::size_t complete_evt = 0;
        std::size_t src_reg = 0;
        std::size_t dst_reg = 0;
        std::size_t cnt_reg = 0;
        BoundMap src_width;
        BoundMap dst_width;
        std::optional<BoundState> dir;
    };
    struct DeviceRt {
        DeviceInstance inst;
        std::uint64_t base = 0;
        std::uint64_t end = 0; // base + max register extent
        std::vector<std::uint64_t> reg_values;
        std::map<std::string, std::size_t, std::less<>> reg_index;
        std::vector<BoundSwt> swts;
        std::vector<BoundEvt> evts;
        std::vector<BoundUpd> upds;
        std::vector<TimerCounter> counters;
        std::vector<TimerChannel> channels;
        std::optional<UartEngine> uart;
        std::optional<GpioEngine> gpio;
        std::vector<DmaDesc> dma;
    };

    struct RegLocation {
        std::size_t dev;
        std::size_t reg;
        unsigned byte_offset;
    };

    void bind_device(DeviceRt& rt);
    BoundField bind_field(const DeviceRt& rt, const RegFieldRef& ref) const;
    std::optional<RegLocation> locate(std::uint64_t addr) const;

    std::uint64_t field_value(const DeviceRt& rt, const BoundField& f) const;
    void set_field(DeviceRt& rt, const BoundField& f, std::uint64_t v);
    static std::uint64_t extract_field(std::uint64_t reg_value, const BoundField& f);
    static std::uint64_t negated(std::uint64_t value);

    std::size_t run_update_pass(DeviceRt& rt, std::size_t written_reg);
    void kick_dma(DeviceRt& rt, DmaDesc& desc, std::size_t desc_index);
    void gpio_apply(DeviceRt& rt, std::uint64_t new_pins);
    int compute_line(std::uint32_t line) const;
    void refresh_lines();
    void emit(const TraceEvent& ev);
    void check_masking() const;
    DeviceRt& device_rt(const std::string& name);
    const DeviceRt& device_rt(const std::string& name) const;

    std::vector<DeviceInstance> devices_; // as handed in (with per-device lines)
    std::vector<DeviceRt> rts_;
    std::vector<std::uint8_t> ram_;
    std::uint64_t ram_base_ = 0;
    MachineOptions opts_;
    std::map<std::uint32_t, std::vector<std::pair<std::size_t, std::size_t>>> irq_groups_;
    std::set<std::uint32_t> known_lines_;
    std::map<std::uint32_t, int> line_snapshot_; // for edge records only
    std::vector<std::string> diagnostics_;
    TraceSink sink_;
};

/// Assemble a machine from validated device instances.
Machine build_machine(std::vector<DeviceInstance> devs, std::uint64_t mem_size,
                      std::uint64_t ram_base = 0x20000000, MachineOptions opts = {});

} // namespace perimod
