// SPDX-License-Identifier: Apache-2.0
#include "perimod/validate.hpp"

#include "test_support.hpp"

#include <doctest.h>

using namespace perimod;

TEST_CASE("category names: distinct pass, repeated fail, empty pass") {
    CHECK(check_category_names({{"USART", "UART"}, {"TIM", "Timer"}}).pass());
    auto rep = check_category_names({{"TIM", "Timer"}, {"TIM", "Timer"}});
    REQUIRE(rep.findings.size() == 1);
    CHECK(rep.findings[0].stage == 1);
    CHECK(rep.findings[0].entities == std::vector<std::string>{"TIM"});
    CHECK(check_category_names({}).pass());
}

TEST_CASE("register overlap uses half-open byte intervals") {
    std::vector<Reg> adjacent{{"A", 0, 32}, {"B", 4, 32}};
    CHECK(check_register_overlap(adjacent).pass());

    std::vector<Reg> crossing{{"A", 0, 32}, {"B", 2, 32}};
    auto rep = check_register_overlap(crossing);
    CHECK(testsup::finding_pairs(rep, "register-overlap") ==
          testsup::oracle_reg_overlaps(crossing));
    CHECK(!rep.pass());

    std::vector<Reg> identical{{"A", 0, 8}, {"B", 0, 8}};
    CHECK(!check_register_overlap(identical).pass());
}

TEST_CASE("field overlap is per register, bit granular") {
    std::map<std::string, std::vector<RegField>> disjoint{
        {"SR", {{"UIF", 0, 1}, {"TIF", 1, 1}}}};
    CHECK(check_field_overlap(disjoint).pass());

    std::map<std::string, std::vector<RegField>> crossing{{"SR", {{"A", 0, 2}, {"B", 1, 2}}}};
    auto rep = check_field_overlap(crossing);
    CHECK(testsup::finding_pairs(rep, "field-overlap") ==
          testsup::oracle_field_overlaps("SR", crossing["SR"]));
    CHECK(!rep.pass());

    std::map<std::string, std::vector<RegField>> separate{{"SR", {{"A", 0, 2}}},
                                                          {"CR", {{"B", 0, 2}}}};
    CHECK(check_field_overlap(separate).pass());
}

namespace {

ModelInstance tiny_instance(bool ghost) {
    ModelInstance m;
    m.category = "generic";
    m.regs = {Reg{"SR", 0, 32}, Reg{"CR", 4, 32}};
    m.fields["SR"] = {RegField{"UIF", 0, 1}};
    m.fields["CR"] = {RegField{"EN", 0, 1}};
    Upd u;
    u.condition = {{{"CR", "EN"}, 1}};
    u.action = {{{"SR", ghost ? "GHOST" : "UIF"}, 1}};
    m.updates.push_back(u);
    return m;
}

} // namespace

TEST_CASE("referential integrity reports dangling names") {
    CHECK(check_referential_integrity(tiny_instance(false)).pass());

    auto rep = check_referential_integrity(tiny_instance(true));
    REQUIRE(rep.findings.size() == 1);
    CHECK(rep.findings[0].entities == std::vector<std::string>{"SR.GHOST"});
    CHECK(rep.findings[0].stage == 4); // an update reference

    ModelInstance empty;
    CHECK(check_referential_integrity(empty).pass());
}

TEST_CASE("instance checks catch repeated names, bases and lines") {
    DeviceInstance u1{"USART1", 0x40011000, {37}, {}};
    DeviceInstance u2{"USART2", 0x40004400, {38}, {}};
    CHECK(check_instances({u1, u2}).pass());

    DeviceInstance clash = u2;
    clash.base = u1.base;
    auto rep = check_instances({u1, clash});
    REQUIRE(rep.findings.size() == 1);
    CHECK(rep.findings[0].rule == "duplicate-base-address");

    DeviceInstance shared = u2;
    shared.irqs = {37};
    rep = check_instances({u1, shared});
    REQUIRE(rep.findings.size() == 1);
    CHECK(rep.findings[0].rule == "duplicate-irq-line");
}

TEST_CASE("irq association requires declared lines") {
    auto devs = testsup::load_devices("instances/dma_devices.json");
    CHECK(check_irq_association(devs[0]).pass());

    DeviceInstance wrong = devs[0];
    visit_events(wrong.model, [](const std::string&, Evt& e) { e.irq_line = 12; });
    auto rep = check_irq_association(wrong);
    REQUIRE(rep.findings.size() == 1);
    CHECK(rep.findings[0].stage == 7);

    DeviceInstance no_events{"X", 0x40000000, {5}, {}};
    CHECK(check_irq_association(no_events).pass());
}

TEST_CASE("validate_all composes all checks with stage tags") {
    auto devs = testsup::load_devices("instances/dma_devices.json");
    CHECK(validate_all(devs[0].model, devs).pass());

    // one seeded defect yields exactly that finding set
    ModelInstance one = tiny_instance(true);
    auto rep = validate_all(one, {});
    REQUIRE(rep.findings.size() == 1);
    CHECK(rep.findings[0].rule == "dangling-reference");

    // register and field overlap seeded together: both stage tags show up
    ModelInstance two = tiny_instance(false);
    two.regs.push_back(Reg{"SR2", 2, 32});
    two.fields["SR"].push_back(RegField{"UIF2", 0, 2});
    rep = validate_all(two, {});
    std::set<int> stages;
    for (const auto& f : rep.findings)
        stages.insert(f.stage);
    CHECK(stages == std::set<int>{2, 3});
}

TEST_CASE("overlap findings are symmetric and irreflexive") {
    std::mt19937_64 rng(41);
    for (int round = 0; round < 50; ++round) {
        auto c = testsup::random_overlap_case(rng);
        auto rep = check_register_overlap(c.regs);
        auto pairs = testsup::finding_pairs(rep, "register-overlap");
        for (const auto& [a, b] : pairs)
            CHECK(a != b);
        std::vector<Reg> reversed(c.regs.rbegin(), c.regs.rend());
        CHECK(testsup::finding_pairs(check_register_overlap(reversed), "register-overlap") ==
              pairs);
    }
}

TEST_CASE("overlap findings match the exhaustive occupancy oracle") {
    std::mt19937_64 rng(1234);
    for (int round = 0; round < 100; ++round) {
        auto c = testsup::random_overlap_case(rng);
        CHECK(testsup::finding_pairs(check_register_overlap(c.regs), "register-overlap") ==
              testsup::oracle_reg_overlaps(c.regs));
        std::set<testsup::NamePair> expected;
        for (const auto& [reg, fields] : c.fields) {
            auto per = testsup::oracle_field_overlaps(reg, fields);
            expected.insert(per.begin(), per.end());
        }
        CHECK(testsup::finding_pairs(check_field_overlap(c.fields), "field-overlap") == expected);
    }
}

TEST_CASE("a register shared across categories is a note, not a failure") {
    DeviceInstance a{"T1", 0x40000000, {1}, {}};
    a.model.category = "Timer";
    a.model.regs = {Reg{"SR", 0, 32}};
    DeviceInstance b{"U1", 0x40010000, {2}, {}};
    b.model.category = "UART";
    b.model.regs = {Reg{"SR", 0, 32}};
    auto rep = check_instances({a, b});
    CHECK(rep.pass());
    REQUIRE(rep.notes.size() == 1);
    CHECK(rep.notes[0].find("SR") != std::string::npos);
}
