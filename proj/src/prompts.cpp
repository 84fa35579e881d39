// SPDX-License-Identifier: Apache-2.0
//
// Prompt assembly: the fixed per-stage templates and the JSON-like skeleton
// rendered from a category schema.

#include "perimod/errors.hpp"
#include "perimod/frontend.hpp"

#include <sstream>

namespace perimod {

std::string_view stage_name(Stage s) {
    switch (s) {
    case Stage::Categories: return "peripheral category identification";
    case Stage::Registers: return "register identification";
    case Stage::Fields: return "register field identification";
    case Stage::Updates: return "update identification";
    case Stage::Semantics: return "peripheral semantic identification";
    case Stage::Instances: return "peripheral instance identification";
    case Stage::IrqLines: return "interrupt association";
    }
    return "?";
}

std::string system_instruction() {
    return "You are an expert driver code analyzer, and your job is to answer the user's query "
           "based on the driver code files you have access to.";
}

namespace {

constexpr const char* kValueBlank = "\"<value of the field>\"";

struct SkeletonWriter {
    std::ostringstream out;
    int indent = 0;

    void line(const std::string& s) {
        for (int i = 0; i < indent; ++i)
            out << "  ";
        out << s << "\n";
    }

    static std::string quoted(const std::string& s) { return "\"" + s + "\""; }
    static std::string blank(const std::string& text) { return "\"<" + text + ">\""; }

    void comment(const SlotDef& def) {
        if (def.description.empty())
            return;
        line(def.optional ? "// [OPTIONAL] " + def.description : "// " + def.description);
    }

    void field_state(const std::string& key, const std::string& value_blank, bool inline_value) {
        line(quoted(key) + ": {");
        ++indent;
        if (inline_value) {
            line("\"reg\": \"<register name>\", \"field\": \"<field name>\", \"value\": " +
                 value_blank + ",");
        } else {
            line("\"reg\": \"<register name>\", \"field\": \"<field name>\",");
            line("\"value\": " + value_blank + ",");
        }
        --indent;
        line("},");
    }

    void field_map(const std::string& key) {
        line(quoted(key) + ": {");
        ++indent;
        line("\"reg\": \"<register name>\", \"field\": \"<field name>\",");
        line("\"map\": {\"<field value>\": \"<mapped value>\", ...},");
        --indent;
        line("},");
    }

    void mem_field(const std::string& key) {
        line(quoted(key) + ": {");
        ++indent;
        line("\"offset\": \"<byte offset of the field within the struct>\",");
        line("\"width\": \"<field width in bits>\",");
        --indent;
        line("},");
    }

    void swt(const std::string& key) {
        line(quoted(key) + ": {");
        ++indent;
        field_state("enable", kValueBlank, true);
        field_state("disable", kValueBlank, true);
        field_state("status", kValueBlank, true);
        --indent;
        line("},");
    }

    void evt(const std::string& key) {
        line(quoted(key) + ": {");
        ++indent;
        field_state("happen", blank("when the event happens, the field is set to this value"),
                    false);
        field_state("active", blank("when the event is enabled, the field is set to this value"),
                    false);
        field_state("enable",
                    blank("the event interrupt is enabled when this value is written into the "
                          "field"),
                    false);
        field_state("disable",
                    blank("the event interrupt is disabled when this value is written into the "
                          "field"),
                    false);
        field_state("clear",
                    blank("the event happen flag is cleared when this value is written into the "
                          "field"),
                    false);
        --indent;
        line("},");
    }

    void primitive(const SlotDef& def, PrimitiveKind kind) {
        switch (kind) {
        case PrimitiveKind::Reg:
            comment_if_optional(def);
            line(quoted(def.name) + ": " + blank(def.description) + ",");
            break;
        case PrimitiveKind::RegField:
            comment(def);
            line(quoted(def.name) +
                 ": {\"reg\": \"<register name>\", \"field\": \"<field name>\"},");
            break;
        case PrimitiveKind::RegFieldState:
            comment(def);
            field_state(def.name, "\"<field value>\"", true);
            break;
        case PrimitiveKind::RegFieldMap:
            comment(def);
            field_map(def.name);
            break;
        case PrimitiveKind::Swt:
            comment(def);
            swt(def.name);
            break;
        case PrimitiveKind::Upd:
            comment(def);
            line(quoted(def.name) + ": {\"condition\": [...], \"action\": [...]},");
            break;
        case PrimitiveKind::Evt:
            comment(def);
            evt(def.name);
            break;
        case PrimitiveKind::MemField:
            comment(def);
            mem_field(def.name);
            break;
        case PrimitiveKind::MemFieldState:
            comment(def);
            line(quoted(def.name) + ": {");
            ++indent;
            mem_field("field");
            line("\"value\": \"<value of the field>\",");
            --indent;
            line("},");
            break;
        }
    }

    // Reg slots carry their description inside the blank; no comment line
    // unless the slot is optional.
    void comment_if_optional(const SlotDef& def) {
        if (def.optional)
            line("// [OPTIONAL] " + def.description);
    }

    void slot(const SlotDef& def) {
        switch (def.type.kind) {
        case SlotType::Kind::Primitive:
            primitive(def, def.type.primitive);
            break;
        case SlotType::Kind::Group: {
            comment(def);
            line(quoted(def.name) + ": {");
            ++indent;
            for (const auto& s : def.type.group->slots)
                slot(s);
            --indent;
            line("},");
            break;
        }
        case SlotType::Kind::List: {
            comment(def);
            line(quoted(def.name) + ": [");
            ++indent;
            element(*def.type.element);
            line("...,");
            --indent;
            line("],");
            break;
        }
        }
    }

    void element(const SlotType& type) {
        switch (type.kind) {
        case SlotType::Kind::Group: {
            line("{");
            ++indent;
            for (const auto& s : type.group->slots)
                slot(s);
            --indent;
            line("},");
            break;
        }
        case SlotType::Kind::Primitive: {
            // lists of bare primitives render one element template
            switch (type.primitive) {
            case PrimitiveKind::Evt:
                line("{");
                ++indent;
                evt_body();
                --indent;
                line("},");
                break;
            default:
                line("{...},");
                break;
            }
            break;
        }
        case SlotType::Kind::List:
            line("[...],");
            break;
        }
    }

    void evt_body() {
        field_state("happen", blank("when the event happens, the field is set to this value"),
                    false);
        field_state("active", blank("when the event is enabled, the field is set to this value"),
                    false);
        field_state("enable",
                    blank("the event interrupt is enabled when this value is written into the "
                          "field"),
                    false);
        field_state("disable",
                    blank("the event interrupt is disabled when this value is written into the "
                          "field"),
                    false);
        field_state("clear",
                    blank("the event happen flag is cleared when this value is written into the "
                          "field"),
                    false);
    }
};

} // namespace

std::string skeleton_prompt(const CategorySchema& schema) {
    if (schema.slots.empty())
        return "{}";
    SkeletonWriter w;
    w.line("{");
    ++w.indent;
    for (const auto& def : schema.slots)
        w.slot(def);
    --w.indent;
    w.line("}");
    std::string s = w.out.str();
    if (!s.empty() && s.back() == '\n')
        s.pop_back();
    return s;
}

namespace {

void require(bool ok, const char* placeholder) {
    if (!ok)
        throw PromptError(std::string("prompt placeholder not supplied: ") + placeholder);
}

} // namespace

std::string assemble_stage_prompt(Stage stage, const StageContext& ctx) {
    std::ostringstream p;
    switch (stage) {
    case Stage::Categories: {
        require(!ctx.mcu_name.empty(), "MCU_NAME");
        require(!ctx.categories.empty(), "CATEGORY_LIST");
        std::string list;
        for (const auto& c : ctx.categories)
            list += (list.empty() ? "" : ", ") + c;
        p << "There are " << ctx.categories.size() << " abstract peripheral categories: [" << list
          << "]. Find all peripheral categories for the " << ctx.mcu_name
          << " MCU and output in JSON format:\n\n"
          << "[{\"<peripheral category name>\": \"<abstract category>\"},...]";
        break;
    }
    case Stage::Registers:
        require(!ctx.peripheral_name.empty(), "PERIPHERAL_NAME");
        p << "Find all registers of the " << ctx.peripheral_name
          << " peripheral. Output in JSON format like this:\n\n"
          << "{\"regs\": [{\n"
          << "  \"name\": \"<register name>\",\n"
          << "  \"width\": \"<register width in bits>\",\n"
          << "  \"offset\": \"<address offset within the peripheral>\"}, ...]}\n\n"
          << "Think step by step.";
        break;
    case Stage::Fields:
        require(!ctx.register_name.empty(), "REGISTER_NAME");
        require(!ctx.peripheral_name.empty(), "PERIPHERAL_NAME");
        p << "Find all fields of the " << ctx.register_name << " register of the "
          << ctx.peripheral_name << " peripheral. Output in JSON format like this:\n\n"
          << "{\"fields\": [{\n"
          << "  \"name\": \"<field name>\",\n"
          << "  \"pos\": \"<bit position of the field within the register>\",\n"
          << "  \"width\": \"<field width in bits>\"}, ...]}\n\n"
          << "Think step by step.";
        break;
    case Stage::Updates:
        require(!ctx.peripheral_name.empty(), "PERIPHERAL_NAME");
        p << "When the driver sets/clears some register fields (condition), hardware may take "
             "actions and sets/clears some register fields (action). To wait the hardware to "
             "finish, the driver polls for these register fields. The above procedure looks like "
             "this:\n\n"
          << "SET(REG_A, FIELD_A) or CLEAR(REG_A, FIELD_A) // condition\n"
          << "SET(REG_B, FIELD_B) or CLEAR(REG_B, FIELD_B) // condition, can be multiple\n"
          << "while ((REG_C & FIELD_C) == 0/1); // action\n"
          << "while ((REG_D & FIELD_D) == 0/1); // action, can be multiple\n\n"
          << "For the " << ctx.peripheral_name
          << " peripheral, find all such situations. Output in JSON format like this:\n\n"
          << "{\"updates\": [{\"condition\": [...], \"action\": [...]}]}\n\n"
          << "Think step by step.";
        break;
    case Stage::Semantics:
        require(!ctx.peripheral_name.empty(), "PERIPHERAL_NAME");
        require(!ctx.json_like_prompt.empty(), "JSON_LIKE_PROMPT");
        p << "Summarize information about the " << ctx.peripheral_name
          << " peripheral and output in JSON format like this:\n\n"
          << ctx.json_like_prompt << "\n\n"
          << "Think step by step.";
        break;
    case Stage::Instances:
        require(!ctx.peripheral_name.empty(), "PERIPHERAL_NAME");
        p << "Find all peripheral instances of kind " << ctx.peripheral_name
          << ". Output in JSON format like this:\n\n"
          << "\"instances\": [{\n"
          << "    \"name\": \"<name of the instance>\",\n"
          << "    \"base\": \"<base address of the peripheral instance>\",\n"
          << "    \"irqs\": [\"<interrupt number>\", ...]\n"
          << "  },...]\n\n"
          << "Think step by step.";
        break;
    case Stage::IrqLines:
        require(!ctx.events_json.empty(), "EVENTS_JSON");
        p << "Associate interrupt events listed in the given JSON with their interrupt numbers "
             "by filling the blanks.\n\n"
          << ctx.events_json << "\n\n"
          << "Think step by step.";
        break;
    }
    return p.str();
}

} // namespace perimod
