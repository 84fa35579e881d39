// SPDX-License-Identifier: Apache-2.0
#include "perimod/runtime.hpp"

#include "perimod/errors.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <random>

using namespace perimod;

namespace {

Machine timer_machine() {
    return Machine(testsup::load_devices("instances/timer_devices.json"), 64 * 1024);
}

Machine uart_machine() {
    return Machine(testsup::load_devices("instances/uart_devices.json"), 64 * 1024);
}

Machine gpio_machine() {
    return Machine(testsup::load_devices("instances/gpio_devices.json"), 64 * 1024);
}

Machine dma_machine() {
    return Machine(testsup::load_devices("instances/dma_devices.json"), 64 * 1024);
}

Machine generic_machine() {
    DeviceInstance dev;
    dev.name = "CTRL";
    dev.base = 0x40000000;
    dev.model = testsup::load_model("instances/generic_model.json");
    return Machine({dev}, 4096);
}

} // namespace

TEST_CASE("machine assembly dispatches disjoint devices and rejects collisions") {
    auto u1 = testsup::load_devices("instances/uart_devices.json");
    auto u2 = u1;
    u2[0].name = "USART2";
    u2[0].base = 0x40004400;
    u2[0].irqs = {38};
    visit_events(u2[0].model, [](const std::string&, Evt& e) { e.irq_line = 38; });

    std::vector<DeviceInstance> devs{u1[0], u2[0]};
    Machine m(devs, 64 * 1024);
    CHECK(m.mmio_read(0x40011000, 4) == 0);
    CHECK(m.mmio_read(0x40004400, 4) == 0);

    Machine empty({}, 4096);
    CHECK(empty.devices().empty());
    CHECK(empty.mem_read(0x20000000, 4) == std::vector<std::uint8_t>{0, 0, 0, 0});

    auto clash = devs;
    clash[1].base = clash[0].base;
    clash[1].irqs = {39};
    CHECK_THROWS_AS((void)Machine(clash, 64 * 1024), MachineBuildError);
}

TEST_CASE("registers read zero after build") {
    Machine m = timer_machine();
    for (const char* reg : {"CR1", "DIER", "SR", "CNT", "ARR"})
        CHECK(m.peek_register("TIM2", reg) == 0);
}

TEST_CASE("the tick register follows a reference loop below the period") {
    Machine m = timer_machine();
    m.mmio_write(m.reg_address("TIM2", "ARR"), 4, 100);
    m.mmio_write(m.reg_address("TIM2", "CR1"), 4, 1);
    m.tick(5);

    std::uint64_t expected = 0;
    for (int i = 0; i < 5; ++i) { // reference: increment, compare, wrap
        expected += 1;
        if (expected == 100)
            expected = 0;
    }
    CHECK(m.mmio_read(m.reg_address("TIM2", "CNT"), 4) == expected);
    CHECK(expected == 5);
}

TEST_CASE("timer period event: set at the period, gated by the switch") {
    Machine m = timer_machine();
    std::uint64_t arr = m.reg_address("TIM2", "ARR");
    std::uint64_t cr1 = m.reg_address("TIM2", "CR1");
    std::uint64_t dier = m.reg_address("TIM2", "DIER");

    SUBCASE("period of one fires on the first tick") {
        m.mmio_write(arr, 4, 1);
        m.mmio_write(dier, 4, 1);
        m.mmio_write(cr1, 4, 1);
        m.tick(1);
        CHECK((m.peek_register("TIM2", "SR") & 1) == 1);
        CHECK(m.irq_level(28) == 1);
        CHECK(m.peek_register("TIM2", "CNT") == 0); // wrapped
    }
    SUBCASE("flag stays clear until the period is reached") {
        m.mmio_write(arr, 4, 3);
        m.mmio_write(dier, 4, 1);
        m.mmio_write(cr1, 4, 1);
        m.tick(2);
        CHECK((m.peek_register("TIM2", "SR") & 1) == 0);
        m.tick(1);
        CHECK((m.peek_register("TIM2", "SR") & 1) == 1);
    }
    SUBCASE("a disabled counter never moves") {
        m.mmio_write(arr, 4, 3);
        m.tick(100);
        CHECK(m.peek_register("TIM2", "CNT") == 0);
        CHECK(m.irq_level(28) == 0);
    }
}

TEST_CASE("happen flags are hardware-owned; clears go through the event") {
    Machine m = timer_machine();
    m.mmio_write(m.reg_address("TIM2", "ARR"), 4, 1);
    m.mmio_write(m.reg_address("TIM2", "DIER"), 4, 1);
    m.mmio_write(m.reg_address("TIM2", "CR1"), 4, 1);
    m.tick(1);
    REQUIRE((m.peek_register("TIM2", "SR") & 1) == 1);

    // writing 1 into the flag is ignored (it is already set; the store is
    // protected), writing 0 matches the clear state and clears it
    m.mmio_write(m.reg_address("TIM2", "SR"), 4, 1);
    CHECK((m.peek_register("TIM2", "SR") & 1) == 1);
    m.mmio_write(m.reg_address("TIM2", "SR"), 4, 0);
    CHECK((m.peek_register("TIM2", "SR") & 1) == 0);
    CHECK(m.irq_level(28) == 0);
}

TEST_CASE("event control writes toggle the active flag and the line follows") {
    Machine m = uart_machine();
    m.inject_rx("USART1", std::string_view("A"));
    CHECK((m.peek_register("USART1", "SR") >> 5 & 1) == 1);
    CHECK(m.irq_level(37) == 0); // happen set, active clear

    m.mmio_write(m.reg_address("USART1", "CR1"), 4, 1u << 5); // RXNEIE
    CHECK(m.irq_level(37) == 1);
    m.mmio_write(m.reg_address("USART1", "CR1"), 4, 0);
    CHECK(m.irq_level(37) == 0);
}

TEST_CASE("uart data reads pop the rx queue and clear the flag when drained") {
    Machine m = uart_machine();
    m.inject_rx("USART1", std::string_view("A"));
    std::uint64_t dr = m.reg_address("USART1", "DR");
    CHECK(m.mmio_read(dr, 1) == 0x41);
    CHECK((m.peek_register("USART1", "SR") >> 5 & 1) == 0);
    CHECK(m.mmio_read(dr, 1) == 0);

    // FIFO order against a reference queue
    m.inject_rx("USART1", std::string_view("hi"));
    CHECK(m.mmio_read(dr, 1) == 'h');
    CHECK((m.peek_register("USART1", "SR") >> 5 & 1) == 1); // one byte left
    CHECK(m.mmio_read(dr, 1) == 'i');
    CHECK((m.peek_register("USART1", "SR") >> 5 & 1) == 0);

    m.inject_rx("USART1", std::string_view(""));
    CHECK((m.peek_register("USART1", "SR") >> 5 & 1) == 0); // no flag change
}

TEST_CASE("uart transmit requires the switch and drains through read_tx") {
    Machine m = uart_machine();
    std::uint64_t dr = m.reg_address("USART1", "DR");

    m.mmio_write(dr, 1, 'X'); // transmitter disabled: dropped
    CHECK(m.read_tx("USART1").empty());

    m.mmio_write(m.reg_address("USART1", "CR1"), 4, 1u << 3); // TE
    m.mmio_write(dr, 1, 'O');
    m.mmio_write(dr, 1, 'K');
    auto tx = m.read_tx("USART1");
    CHECK(std::string(tx.begin(), tx.end()) == "OK");
    CHECK((m.peek_register("USART1", "SR") >> 6 & 1) == 1); // TC flag

    CHECK_THROWS_AS((void)Machine(timer_machine()).read_tx("TIM2"), Error);
}

TEST_CASE("update rules apply on a triggering write and reach a fixpoint") {
    Machine m = generic_machine();
    std::uint64_t cr = m.reg_address("CTRL", "CR");
    m.mmio_write(cr, 4, 1);
    CHECK(m.peek_register("CTRL", "SR") == 1);
    CHECK(m.apply_update_rules("CTRL", "CR") == 0); // second pass: no change
}

TEST_CASE("two rules fire on one write and reach a fixpoint") {
    DeviceInstance dev;
    dev.name = "SEQ";
    dev.base = 0x40000000;
    ModelInstance& mo = dev.model;
    mo.category = "generic";
    mo.regs = {Reg{"CR", 0, 32}, Reg{"SR", 4, 32}};
    mo.fields["CR"] = {RegField{"EN", 0, 1}};
    mo.fields["SR"] = {RegField{"A", 0, 2}, RegField{"B", 2, 2}};
    Upd first;
    first.condition = {{{"CR", "EN"}, 1}};
    first.action = {{{"SR", "A"}, 1}};
    Upd second;
    second.condition = {{{"CR", "EN"}, 1}};
    second.action = {{{"SR", "B"}, 2}};
    mo.updates = {first, second};

    Machine m({dev}, 4096);
    m.mmio_write(0x40000000, 4, 1);
    CHECK((m.peek_register("SEQ", "SR") & 0x3) == 1);
    CHECK((m.peek_register("SEQ", "SR") >> 2 & 0x3) == 2);
    CHECK(m.apply_update_rules("SEQ", "CR") == 0);
}

TEST_CASE("rules writing conflicting values to one field stay deterministic") {
    // a model with two rules driving the same field to different values is
    // contradictory hardware; the engine applies them in declaration order,
    // so the later rule's value stands after every pass
    DeviceInstance dev;
    dev.name = "SEQ";
    dev.base = 0x40000000;
    ModelInstance& mo = dev.model;
    mo.category = "generic";
    mo.regs = {Reg{"CR", 0, 32}, Reg{"SR", 4, 32}};
    mo.fields["CR"] = {RegField{"EN", 0, 1}};
    mo.fields["SR"] = {RegField{"A", 0, 2}};
    Upd first;
    first.condition = {{{"CR", "EN"}, 1}};
    first.action = {{{"SR", "A"}, 1}};
    Upd second;
    second.condition = {{{"CR", "EN"}, 1}};
    second.action = {{{"SR", "A"}, 3}};
    mo.updates = {first, second};

    Machine m({dev}, 4096);
    m.mmio_write(0x40000000, 4, 1);
    CHECK((m.peek_register("SEQ", "SR") & 0x3) == 3);
    (void)m.apply_update_rules("SEQ", "CR");
    CHECK((m.peek_register("SEQ", "SR") & 0x3) == 3);
}

TEST_CASE("a rule with an unmet condition does not fire") {
    Machine m = generic_machine();
    // write EN=0: condition (EN==1) unsatisfied
    m.mmio_write(m.reg_address("CTRL", "CR"), 4, 0);
    CHECK(m.peek_register("CTRL", "SR") == 0);
}

TEST_CASE("dma transfers are byte-exact against a copy oracle") {
    Machine m = dma_machine();
    std::mt19937_64 rng(2024);
    std::vector<std::uint8_t> pattern(64);
    for (auto& b : pattern)
        b = static_cast<std::uint8_t>(rng());

    m.mem_write(0x20000100, pattern);
    m.mmio_write(m.reg_address("DMA1", "Channel_0_CMAR"), 4, 0x20000100);
    m.mmio_write(m.reg_address("DMA1", "Channel_0_CPAR"), 4, 0x20000800);
    m.mmio_write(m.reg_address("DMA1", "Channel_0_CNDTR"), 4, 16);
    // MSIZE=1 (2-byte units), TCIE, EN
    m.mmio_write(m.reg_address("DMA1", "Channel_0_CCR"), 4, (1u << 10) | 0x3);

    std::vector<std::uint8_t> oracle(pattern.begin(), pattern.begin() + 32);
    CHECK(m.mem_read(0x20000800, 32) == oracle);
    CHECK(m.peek_register("DMA1", "Channel_0_CNDTR") == 0);
    CHECK(m.irq_level(11) == 1);
}

TEST_CASE("dma direction field inverts the copy") {
    Machine m = dma_machine();
    std::vector<std::uint8_t> pattern{0xca, 0xfe, 0xba, 0xbe};
    m.mem_write(0x20000400, pattern);
    m.mmio_write(m.reg_address("DMA1", "Channel_0_CMAR"), 4, 0x20000300);
    m.mmio_write(m.reg_address("DMA1", "Channel_0_CPAR"), 4, 0x20000400);
    m.mmio_write(m.reg_address("DMA1", "Channel_0_CNDTR"), 4, 4);
    m.mmio_write(m.reg_address("DMA1", "Channel_0_CCR"), 4, (1u << 4) | 0x3);
    CHECK(m.mem_read(0x20000300, 4) == pattern);
}

TEST_CASE("an unmapped width key aborts the transfer and leaves RAM untouched") {
    Machine m = dma_machine();
    std::vector<std::uint8_t> pattern{1, 2, 3, 4};
    m.mem_write(0x20000100, pattern);
    m.mmio_write(m.reg_address("DMA1", "Channel_0_CMAR"), 4, 0x20000100);
    m.mmio_write(m.reg_address("DMA1", "Channel_0_CPAR"), 4, 0x20000200);
    m.mmio_write(m.reg_address("DMA1", "Channel_0_CNDTR"), 4, 4);
    // MSIZE=3 has no mapping
    m.mmio_write(m.reg_address("DMA1", "Channel_0_CCR"), 4, (3u << 10) | 0x3);

    CHECK(m.mem_read(0x20000200, 4) == std::vector<std::uint8_t>{0, 0, 0, 0});
    CHECK(m.peek_register("DMA1", "Channel_0_CNDTR") == 4); // untouched
    CHECK((m.peek_register("DMA1", "ISR") >> 1 & 1) == 0);  // no completion
    REQUIRE(!m.diagnostics().empty());
    CHECK(m.diagnostics()[0].find("width key 3") != std::string::npos);
}

TEST_CASE("gpio set/clear drive pins, the input register and edge events") {
    Machine m = gpio_machine();
    m.mmio_write(m.reg_address("GPIOA", "BSR"), 4, 0x3);
    CHECK(m.mmio_read(m.reg_address("GPIOA", "IDR"), 4) == 0x3);
    CHECK((m.peek_register("GPIOA", "PR") & 0x3) == 0x3); // both edges flagged
    CHECK(m.irq_level(6) == 0);                           // masked

    m.mmio_write(m.reg_address("GPIOA", "IMR"), 4, 0x1);
    CHECK(m.irq_level(6) == 1);
    CHECK(m.irq_level(7) == 0);

    m.mmio_write(m.reg_address("GPIOA", "PR"), 4, 0x1); // write-1-to-clear
    CHECK(m.irq_level(6) == 0);

    m.mmio_write(m.reg_address("GPIOA", "BRR"), 4, 0x1); // falling edge
    CHECK(m.irq_level(6) == 1);
}

TEST_CASE("irq level is the or-of-ands over a line's events") {
    Machine m = timer_machine();
    // two events (update, compare) share line 28
    struct Flags {
        unsigned uif, uie, ccif, ccie;
    };
    for (unsigned mask = 0; mask < 16; ++mask) {
        Flags f{mask & 1, (mask >> 1) & 1, (mask >> 2) & 1, (mask >> 3) & 1};
        m.poke_register("TIM2", "SR", f.uif | (f.ccif << 1));
        m.poke_register("TIM2", "DIER", f.uie | (f.ccie << 1));
        int expected = (f.uif && f.uie) || (f.ccif && f.ccie) ? 1 : 0;
        CHECK(m.irq_level(28) == expected);
    }
    CHECK_THROWS_AS((void)m.irq_level(99), Error);
}

TEST_CASE("memory accesses are byte-exact and bounds-checked") {
    Machine m = timer_machine();
    std::vector<std::uint8_t> data(16);
    for (std::size_t i = 0; i < data.size(); ++i)
        data[i] = static_cast<std::uint8_t>(i * 7);
    m.mem_write(0x20000040, data);
    CHECK(m.mem_read(0x20000040, 16) == data);
    CHECK(m.mem_read(0x20000000, 4) == std::vector<std::uint8_t>{0, 0, 0, 0});
    CHECK_THROWS_AS((void)m.mem_read(0x20010000, 1), BusFault);
    CHECK_THROWS_AS(m.mem_write(0x1fffffff, data), BusFault);
}

TEST_CASE("bus faults: unmapped accesses and oversized register accesses") {
    Machine strict = timer_machine();
    CHECK_THROWS_AS((void)strict.mmio_read(0x50000000, 4), BusFault);
    CHECK_THROWS_AS(strict.mmio_write(0x50000000, 4, 1), BusFault);
    CHECK_THROWS_AS((void)strict.mmio_read(strict.reg_address("TIM2", "CR1"), 8), BusFault);
    // offset 0x30 lies between CCR1 and ARR register extents
    CHECK_THROWS_AS((void)strict.mmio_read(0x40000030, 4), BusFault);

    MachineOptions lenient;
    lenient.fault_on_unmapped = false;
    Machine loose(testsup::load_devices("instances/timer_devices.json"), 64 * 1024, 0x20000000,
                  lenient);
    CHECK(loose.mmio_read(0x50000000, 4) == 0);
    loose.mmio_write(0x50000000, 4, 1);
    CHECK(loose.diagnostics().size() == 2);
}

TEST_CASE("sub-word accesses are little-endian within a register") {
    Machine m = timer_machine();
    std::uint64_t arr = m.reg_address("TIM2", "ARR");
    m.mmio_write(arr, 4, 0x11223344);
    CHECK(m.mmio_read(arr, 1) == 0x44);
    CHECK(m.mmio_read(arr + 1, 1) == 0x33);
    CHECK(m.mmio_read(arr, 2) == 0x3344);
    m.mmio_write(arr + 2, 1, 0xaa);
    CHECK(m.mmio_read(arr, 4) == 0x11aa3344);
}

TEST_CASE("line levels always equal a from-scratch recomputation") {
    Machine m = uart_machine();
    auto recompute = [&] {
        bool rx = (m.peek_register("USART1", "SR") >> 5 & 1) == 1 &&
                  (m.peek_register("USART1", "CR1") >> 5 & 1) == 1;
        bool tx = (m.peek_register("USART1", "SR") >> 6 & 1) == 1 &&
                  (m.peek_register("USART1", "CR1") >> 6 & 1) == 1;
        return rx || tx ? 1 : 0;
    };
    std::mt19937_64 rng(7);
    std::uint64_t cr1 = m.reg_address("USART1", "CR1");
    std::uint64_t dr = m.reg_address("USART1", "DR");
    for (int i = 0; i < 200; ++i) {
        switch (rng() % 4) {
        case 0: m.mmio_write(cr1, 4, rng() & 0x7f); break;
        case 1: m.inject_rx("USART1", std::string_view("z")); break;
        case 2: (void)m.mmio_read(dr, 1); break;
        case 3: m.mmio_write(m.reg_address("USART1", "SR"), 4, 0); break;
        }
        CHECK(m.irq_level(37) == recompute());
    }
}

TEST_CASE("register values never exceed their width") {
    Machine m = timer_machine();
    m.mmio_write(m.reg_address("TIM2", "ARR"), 4, 0xffffffff);
    m.tick(3);
    for (const char* reg : {"CR1", "DIER", "SR", "CCER", "CNT", "ARR", "CCR1"})
        CHECK(m.peek_register("TIM2", reg) <= 0xffffffffull);
}
