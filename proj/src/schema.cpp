// SPDX-License-Identifier: Apache-2.0
#include "perimod/schema.hpp"

#include "perimod/errors.hpp"

namespace perimod {

std::string_view primitive_kind_name(PrimitiveKind k) {
    switch (k) {
    case PrimitiveKind::Reg: return "Reg";
    case PrimitiveKind::RegField: return "RegField";
    case PrimitiveKind::RegFieldState: return "RegFieldState";
    case PrimitiveKind::RegFieldMap: return "RegFieldMap";
    case PrimitiveKind::Swt: return "Swt";
    case PrimitiveKind::Upd: return "Upd";
    case PrimitiveKind::Evt: return "Evt";
    case PrimitiveKind::MemField: return "MemField";
    case PrimitiveKind::MemFieldState: return "MemFieldState";
    }
    return "?";
}

SlotType SlotType::prim(PrimitiveKind k) {
    SlotType t;
    t.kind = Kind::Primitive;
    t.primitive = k;
    return t;
}

SlotType SlotType::list_of(SlotType elem) {
    SlotType t;
    t.kind = Kind::List;
    t.element = std::make_shared<SlotType>(std::move(elem));
    return t;
}

SlotType SlotType::group_of(GroupSchema g) {
    SlotType t;
    t.kind = Kind::Group;
    t.group = std::make_shared<GroupSchema>(std::move(g));
    return t;
}

const SlotDef* GroupSchema::find_slot(std::string_view n) const {
    for (const auto& s : slots)
        if (s.name == n)
            return &s;
    return nullptr;
}

const SlotDef* CategorySchema::find_slot(std::string_view n) const {
    for (const auto& s : slots)
        if (s.name == n)
            return &s;
    return nullptr;
}

namespace {

SlotDef slot(std::string name, SlotType type, std::string description, bool optional = false) {
    return SlotDef{std::move(name), std::move(type), optional, std::move(description)};
}

CategorySchema make_timer_schema() {
    GroupSchema counter{
        "Counter",
        {
            slot("tick", SlotType::prim(PrimitiveKind::Reg),
                 "the register holding the current timer tick value"),
            slot("period", SlotType::prim(PrimitiveKind::Reg),
                 "the register holding the timer period value"),
            slot("enable", SlotType::prim(PrimitiveKind::Swt), "when to enable the counter"),
            slot("period_evt", SlotType::prim(PrimitiveKind::Evt),
                 "the event generated when the timer tick reaches the period"),
        }};
    GroupSchema input_capture{
        "InputCapture",
        {
            slot("capture", SlotType::prim(PrimitiveKind::Reg),
                 "the register holding the capture value"),
            slot("enable", SlotType::prim(PrimitiveKind::Swt),
                 "when to enable the input capture channel"),
            slot("capture_evt", SlotType::prim(PrimitiveKind::Evt), "the input capture event"),
        }};
    GroupSchema output_compare{
        "OutputCompare",
        {
            slot("compare", SlotType::prim(PrimitiveKind::Reg),
                 "the register holding the compare value"),
            slot("enable", SlotType::prim(PrimitiveKind::Swt),
                 "when to enable the output compare channel"),
            slot("compare_evt", SlotType::prim(PrimitiveKind::Evt), "the output compare event"),
        }};
    return CategorySchema{
        "Timer",
        {
            slot("counters", SlotType::list_of(SlotType::group_of(counter)),
                 "a list of counters"),
            slot("input_captures", SlotType::list_of(SlotType::group_of(input_capture)),
                 "a list of input capture channels"),
            slot("output_compares", SlotType::list_of(SlotType::group_of(output_compare)),
                 "a list of output compare channels"),
        }};
}

CategorySchema make_uart_schema() {
    return CategorySchema{
        "UART",
        {
            slot("data", SlotType::prim(PrimitiveKind::Reg),
                 "the data register used to transmit and receive bytes"),
            slot("tx_enable", SlotType::prim(PrimitiveKind::Swt),
                 "when to enable the transmitter"),
            slot("rx_enable", SlotType::prim(PrimitiveKind::Swt),
                 "when to enable the receiver"),
            slot("tx_evt", SlotType::prim(PrimitiveKind::Evt),
                 "the event generated when a byte has been transmitted"),
            slot("rx_evt", SlotType::prim(PrimitiveKind::Evt),
                 "the event generated when a received byte is ready to be read"),
        }};
}

CategorySchema make_gpio_schema() {
    return CategorySchema{
        "GPIO",
        {
            slot("input", SlotType::prim(PrimitiveKind::Reg),
                 "the register holding the current pin input levels"),
            slot("output_set", SlotType::prim(PrimitiveKind::Reg),
                 "the register written to drive output pins high"),
            slot("output_clear", SlotType::prim(PrimitiveKind::Reg),
                 "the register written to drive output pins low"),
            slot("edge_evts", SlotType::list_of(SlotType::prim(PrimitiveKind::Evt)),
                 "per-pin events generated when the pin level changes, ordered by pin number"),
        }};
}

CategorySchema make_dma_schema() {
    GroupSchema desc{
        "TransDesc",
        {
            slot("enable", SlotType::prim(PrimitiveKind::Swt), "when to enable the channel"),
            slot("complete", SlotType::prim(PrimitiveKind::Evt),
                 "the event generated when the transfer completes"),
            slot("src", SlotType::prim(PrimitiveKind::Reg),
                 "the register holding DMA transfer source address"),
            slot("src_width", SlotType::prim(PrimitiveKind::RegFieldMap),
                 "the register field representing source transfer chunk width (in bytes)"),
            slot("dst", SlotType::prim(PrimitiveKind::Reg),
                 "the register holding DMA transfer destination address"),
            slot("dst_width", SlotType::prim(PrimitiveKind::RegFieldMap),
                 "the register field representing destination transfer chunk width (in bytes)"),
            slot("cnt", SlotType::prim(PrimitiveKind::Reg),
                 "the register holding the number of data to be transferred"),
            slot("dir", SlotType::prim(PrimitiveKind::RegFieldState),
                 "the register field representing transfer direction", /*optional=*/true),
        }};
    return CategorySchema{
        "DMA",
        {
            slot("trans_descs", SlotType::list_of(SlotType::group_of(desc)),
                 "a list of transfer descriptors"),
        }};
}

CategorySchema make_generic_schema() {
    // Registers and update dependencies only; no semantic slots.
    return CategorySchema{"generic", {}};
}

} // namespace

std::vector<CategorySchema> builtin_schemas() {
    return {make_timer_schema(), make_uart_schema(), make_gpio_schema(), make_dma_schema(),
            make_generic_schema()};
}

SchemaRegistry SchemaRegistry::builtin() {
    SchemaRegistry reg;
    reg.generic_ = make_generic_schema();
    // Stock category list. Categories without a dedicated semantic model are
    // register-only; their runtime behavior comes from updates alone.
    reg.schemas_.push_back(CategorySchema{"ADC", {}});
    reg.schemas_.push_back(CategorySchema{"DAC", {}});
    reg.schemas_.push_back(make_dma_schema());
    reg.schemas_.push_back(CategorySchema{"Ethernet", {}});
    reg.schemas_.push_back(make_gpio_schema());
    reg.schemas_.push_back(CategorySchema{"RNG", {}});
    reg.schemas_.push_back(CategorySchema{"SDHC", {}});
    reg.schemas_.push_back(CategorySchema{"SDIO", {}});
    reg.schemas_.push_back(CategorySchema{"SPI", {}});
    reg.schemas_.push_back(CategorySchema{"I2C", {}});
    reg.schemas_.push_back(make_timer_schema());
    reg.schemas_.push_back(make_uart_schema());
    return reg;
}

const CategorySchema& SchemaRegistry::get(std::string_view name) const {
    for (const auto& s : schemas_)
        if (s.name == name)
            return s;
    return generic_;
}

bool SchemaRegistry::has(std::string_view name) const {
    for (const auto& s : schemas_)
        if (s.name == name)
            return true;
    return false;
}

void SchemaRegistry::register_schema(CategorySchema schema) {
    if (has(schema.name) || schema.name == generic_.name)
        throw ConfigError("schema '" + schema.name + "' is already registered");
    schemas_.push_back(std::move(schema));
}

const CategorySchema& SchemaRegistry::generic() const {
    return generic_;
}

std::vector<std::string> SchemaRegistry::category_names() const {
    std::vector<std::string> names;
    names.reserve(schemas_.size());
    for (const auto& s : schemas_)
        names.push_back(s.name);
    return names;
}

} // namespace perimod
