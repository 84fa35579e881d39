// SPDX-License-Identifier: Apache-2.0
//
// Pipeline orchestration: transcripts, the mock client, response handling,
// and the per-stage query/parse/resolve/validate loops with bounded retries.

#include "perimod/frontend.hpp"

#include "perimod/errors.hpp"
#include "perimod/util.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace perimod {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Transcripts and the mock client

Transcript Transcript::parse(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SyntaxError(std::string("transcript: ") + e.what(), e.byte);
    }
    if (!doc.is_object() || !doc.contains("records") || !doc["records"].is_array())
        throw SyntaxError("transcript: missing 'records' array");
    Transcript t;
    for (const auto& r : doc["records"]) {
        TranscriptRecord rec;
        if (r.contains("system"))
            rec.system = r["system"].get<std::string>();
        if (r.contains("prompt"))
            rec.prompt = r["prompt"].get<std::string>();
        if (!r.contains("response"))
            throw SyntaxError("transcript: record without 'response'");
        rec.response = r["response"].get<std::string>();
        t.records.push_back(std::move(rec));
    }
    return t;
}

Transcript Transcript::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open transcript '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string Transcript::serialize() const {
    json arr = json::array();
    for (const auto& r : records)
        arr.push_back(json{{"system", r.system}, {"prompt", r.prompt}, {"response", r.response}});
    return json{{"records", std::move(arr)}}.dump(2) + "\n";
}

std::string MockClient::complete(const std::string& system_instruction,
                                 const std::string& prompt) {
    if (next_ >= script_.records.size())
        throw Error("mock transcript exhausted after " + std::to_string(next_) + " queries");
    const TranscriptRecord& rec = script_.records[next_];
    if (verify_prompts_) {
        if (!rec.system.empty() && rec.system != system_instruction)
            throw Error("mock transcript record " + std::to_string(next_) +
                        ": system instruction differs from the recorded one");
        if (!rec.prompt.empty() && rec.prompt != prompt) {
            std::size_t at = 0;
            while (at < rec.prompt.size() && at < prompt.size() && rec.prompt[at] == prompt[at])
                ++at;
            throw Error("mock transcript record " + std::to_string(next_) +
                        ": prompt differs from the recorded one at byte " + std::to_string(at));
        }
    }
    ++next_;
    return rec.response;
}

// ---------------------------------------------------------------------------
// Response handling

json extract_json(std::string_view response) {
    // drop fenced-code markers, keep the fenced content
    std::string cleaned;
    cleaned.reserve(response.size());
    std::size_t pos = 0;
    while (pos <= response.size()) {
        std::size_t eol = response.find('\n', pos);
        std::string_view line = response.substr(pos, eol == std::string_view::npos
                                                          ? std::string_view::npos
                                                          : eol - pos);
        if (trim(line).substr(0, 3) != "```") {
            cleaned.append(line);
            cleaned.push_back('\n');
        }
        if (eol == std::string_view::npos)
            break;
        pos = eol + 1;
    }

    for (std::size_t start = 0; start < cleaned.size(); ++start) {
        char open = cleaned[start];
        if (open != '{' && open != '[')
            continue;
        char close = open == '{' ? '}' : ']';
        int depth = 0;
        bool in_str = false;
        for (std::size_t i = start; i < cleaned.size(); ++i) {
            char c = cleaned[i];
            if (in_str) {
                if (c == '\\')
                    ++i;
                else if (c == '"')
                    in_str = false;
                continue;
            }
            if (c == '"') {
                in_str = true;
            } else if (c == open) {
                ++depth;
            } else if (c == close) {
                if (--depth == 0) {
                    std::string_view span(cleaned.data() + start, i - start + 1);
                    try {
                        return json::parse(span, nullptr, true, /*ignore_comments=*/true);
                    } catch (const nlohmann::json::parse_error&) {
                        break; // not valid JSON, keep scanning
                    }
                }
            }
        }
    }
    throw SyntaxError("no JSON object or array found in the response");
}

// ---------------------------------------------------------------------------
// Remote client

const char* api_key_env_var() {
    return "PERIMOD_API_KEY";
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

std::string singular(const std::string& name) {
    if (name.size() > 1 && name.back() == 's')
        return name.substr(0, name.size() - 1);
    return name;
}

void walk_display_events(const std::string& path, SlotValue& v,
                         const std::function<void(const std::string&, Evt&)>& fn);

void walk_display_slot(const std::string& name, SlotValue& v, const std::string& prefix,
                       const std::function<void(const std::string&, Evt&)>& fn) {
    if (auto* l = std::get_if<SlotValue::List>(&v.value)) {
        // list members are addressed by the singular of the slot name
        std::string base = prefix.empty() ? singular(name) : prefix + "." + singular(name);
        for (std::size_t i = 0; i < l->size(); ++i)
            walk_display_events(base + "." + std::to_string(i), (*l)[i], fn);
    } else {
        walk_display_events(prefix.empty() ? name : prefix + "." + name, v, fn);
    }
}

void walk_display_events(const std::string& path, SlotValue& v,
                         const std::function<void(const std::string&, Evt&)>& fn) {
    if (auto* e = std::get_if<Evt>(&v.value)) {
        fn(path, *e);
    } else if (auto* g = std::get_if<SlotMap>(&v.value)) {
        for (auto& [name, sub] : *g)
            walk_display_slot(name, sub, path, fn);
    } else if (auto* l = std::get_if<SlotValue::List>(&v.value)) {
        for (std::size_t i = 0; i < l->size(); ++i)
            walk_display_events(path + "." + std::to_string(i), (*l)[i], fn);
    }
}

void for_each_named_event(ModelInstance& model,
                          const std::function<void(const std::string&, Evt&)>& fn) {
    for (auto& [name, v] : model.slots)
        walk_display_slot(name, v, "", fn);
}

Finding rejection(Stage stage, const std::string& what) {
    return Finding{static_cast<int>(stage), "invalid-response", {}, what};
}

} // namespace

struct Pipeline::CategoryState {
    std::string peripheral;
    std::string schema_name;
    bool regs_done = false;
    bool fields_done = false;
    bool updates_done = false;
    bool semantics_done = false;
    bool instances_done = false;
    bool irqs_done = false;
    bool failed = false;
    std::vector<Reg> regs;
    std::map<std::string, std::vector<RegField>> fields;
    std::vector<Upd> updates;
    SlotMap slots;
    std::vector<std::string> notes;
    std::vector<DeviceInstance> devices;

    ModelInstance assemble(const std::string& category) const {
        ModelInstance m;
        m.category = category;
        m.regs = regs;
        m.fields = fields;
        m.updates = updates;
        m.slots = slots;
        return m;
    }
};

Pipeline::~Pipeline() = default;

Pipeline::Pipeline(LlmClient& client, PipelineConfig cfg)
    : client_(client), cfg_(std::move(cfg)) {
    static const SchemaRegistry default_registry = SchemaRegistry::builtin();
    registry_ = cfg_.schemas ? cfg_.schemas : &default_registry;
    if (cfg_.retry_limit < 1)
        throw ConfigError("retry limit must be >= 1");
    symbols_ = build_symbol_table(cfg_.driver_sources);
}

void Pipeline::add_category(const std::string& peripheral, const std::string& schema) {
    auto cat = std::make_unique<CategoryState>();
    cat->peripheral = peripheral;
    cat->schema_name = schema;
    categories_.push_back(std::move(cat));
    categories_done_ = true;
}

Pipeline::CategoryState& Pipeline::category(const std::string& peripheral) {
    for (auto& c : categories_)
        if (c->peripheral == peripheral)
            return *c;
    throw Error("unknown peripheral category '" + peripheral + "'");
}

StageResult Pipeline::query_loop(
    Stage stage, const std::string& peripheral,
    const std::vector<std::pair<std::string, std::string>>& queries,
    const std::function<ValidationReport(const json&, std::size_t, json&)>& accept) {
    StageResult result;
    result.stage = stage;
    result.peripheral = peripheral;
    result.payload = json::object();

    std::string sys = system_instruction();
    ValidationReport failures;
    int max_tries = 0;

    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        const auto& [prompt, label] = queries[qi];
        bool accepted = false;
        for (int attempt = 1; attempt <= cfg_.retry_limit; ++attempt) {
            max_tries = std::max(max_tries, attempt);
            std::string response = client_.complete(sys, prompt);
            TranscriptRecord rec{sys, prompt, response};
            transcript_.records.push_back(rec);
            result.transcript.push_back(std::move(rec));

            ValidationReport rep;
            try {
                json doc = extract_json(response);
                rep = accept(doc, qi, result.payload);
            } catch (const Error& e) {
                rep.findings.push_back(rejection(stage, label + ": " + e.what()));
            } catch (const std::exception& e) {
                rep.findings.push_back(rejection(stage, label + ": " + e.what()));
            }
            if (rep.pass()) {
                result.report.notes.insert(result.report.notes.end(), rep.notes.begin(),
                                           rep.notes.end());
                accepted = true;
                break;
            }
            failures.merge(std::move(rep));
        }
        if (!accepted) {
            result.attempts = max_tries;
            result.passed = false;
            result.report = std::move(failures);
            stages_.push_back(result);
            throw StageFailure("stage '" + std::string(stage_name(stage)) + "' for '" +
                                   (peripheral.empty() ? cfg_.mcu_name : peripheral) +
                                   "' exhausted its " + std::to_string(cfg_.retry_limit) +
                                   " retries",
                               std::move(result));
        }
    }
    result.attempts = std::max(max_tries, queries.empty() ? 0 : 1);
    result.passed = true;
    stages_.push_back(result);
    return result;
}

StageResult Pipeline::run_stage(Stage stage, const std::string& peripheral) {
    ValueResolver values = symbol_resolver(symbols_);
    ParseOptions opts{cfg_.strict};

    switch (stage) {
    case Stage::Categories: {
        StageContext ctx;
        ctx.mcu_name = cfg_.mcu_name;
        ctx.categories = registry_->category_names();
        std::vector<std::pair<std::string, std::string>> queries{
            {assemble_stage_prompt(stage, ctx), "categories"}};
        return query_loop(stage, "", queries, [&](const json& doc, std::size_t, json& payload) {
            std::vector<std::pair<std::string, std::string>> pairs;
            auto take = [&](const json& obj) {
                if (!obj.is_object())
                    throw SyntaxError("expected category objects");
                for (const auto& [k, v] : obj.items()) {
                    if (!v.is_string())
                        throw SyntaxError("category '" + k + "': expected a schema name string");
                    pairs.emplace_back(k, v.get<std::string>());
                }
            };
            if (doc.is_array())
                for (const auto& el : doc)
                    take(el);
            else
                take(doc);

            ValidationReport rep = check_category_names(pairs);
            if (!rep.pass())
                return rep;

            categories_.clear();
            json arr = json::array();
            for (auto& [name, schema] : pairs) {
                if (!registry_->has(schema))
                    rep.notes.push_back("category '" + name + "' maps to unknown model '" +
                                        schema + "'; the generic model applies");
                auto cat = std::make_unique<CategoryState>();
                cat->peripheral = name;
                cat->schema_name = schema;
                categories_.push_back(std::move(cat));
                arr.push_back(json{{name, schema}});
            }
            categories_done_ = true;
            payload["categories"] = std::move(arr);
            return rep;
        });
    }

    case Stage::Registers: {
        CategoryState& cat = category(peripheral);
        StageContext ctx;
        ctx.peripheral_name = peripheral;
        std::vector<std::pair<std::string, std::string>> queries{
            {assemble_stage_prompt(stage, ctx), peripheral}};
        return query_loop(stage, peripheral, queries,
                          [&](const json& doc, std::size_t, json& payload) {
            const json* arr = nullptr;
            if (doc.is_array())
                arr = &doc;
            else if (doc.is_object() && doc.contains("regs"))
                arr = &doc["regs"];
            else
                throw SyntaxError("expected a 'regs' array");

            std::vector<Reg> regs = build_reg_list(*arr, opts, values, nullptr);
            ValidationReport rep;
            ModelInstance probe;
            probe.regs = regs;
            for (const auto& msg : check_type_invariants(probe))
                rep.findings.push_back(Finding{2, "type-invariant", {}, msg});
            rep.merge(check_register_overlap(regs));
            if (rep.pass()) {
                cat.regs = std::move(regs);
                cat.regs_done = true;
                json out = json::array();
                for (const auto& r : cat.regs)
                    out.push_back(
                        json{{"name", r.name}, {"offset", r.offset}, {"width", r.width}});
                payload["regs"] = std::move(out);
            }
            return rep;
        });
    }

    case Stage::Fields: {
        CategoryState& cat = category(peripheral);
        if (!cat.regs_done)
            throw Error("field identification requires the register stage");
        std::vector<std::pair<std::string, std::string>> queries;
        for (const auto& r : cat.regs) {
            StageContext ctx;
            ctx.peripheral_name = peripheral;
            ctx.register_name = r.name;
            queries.emplace_back(assemble_stage_prompt(stage, ctx), r.name);
        }
        cat.fields.clear();
        auto result = query_loop(stage, peripheral, queries,
                                 [&](const json& doc, std::size_t qi, json& payload) {
            const Reg& reg = cat.regs[qi];
            const json* arr = nullptr;
            if (doc.is_array())
                arr = &doc;
            else if (doc.is_object() && doc.contains("fields"))
                arr = &doc["fields"];
            else
                throw SyntaxError("expected a 'fields' array");

            // responses use "pos" for the bit position; the builder wants
            // the canonical member name
            json norm = json::array();
            for (const auto& f : *arr) {
                json g = f;
                if (g.is_object() && g.contains("pos") && !g.contains("offset")) {
                    g["offset"] = g["pos"];
                    g.erase("pos");
                }
                norm.push_back(std::move(g));
            }

            std::vector<RegField> fields = build_field_list(norm, opts, values, nullptr);
            ValidationReport rep;
            ModelInstance probe;
            probe.regs = {reg};
            probe.fields[reg.name] = fields;
            for (const auto& msg : check_type_invariants(probe))
                rep.findings.push_back(Finding{3, "type-invariant", {}, msg});
            rep.merge(check_field_overlap(probe.fields));
            if (rep.pass()) {
                json out = json::array();
                for (const auto& f : fields)
                    out.push_back(
                        json{{"name", f.name}, {"offset", f.offset}, {"width", f.width}});
                payload[reg.name] = std::move(out);
                cat.fields[reg.name] = std::move(fields);
            }
            return rep;
        });
        cat.fields_done = true;
        return result;
    }

    case Stage::Updates: {
        CategoryState& cat = category(peripheral);
        if (!cat.fields_done)
            throw Error("update identification requires the field stage");
        StageContext ctx;
        ctx.peripheral_name = peripheral;
        std::vector<std::pair<std::string, std::string>> queries{
            {assemble_stage_prompt(stage, ctx), peripheral}};
        return query_loop(stage, peripheral, queries,
                          [&](const json& doc, std::size_t, json& payload) {
            const json* arr = nullptr;
            if (doc.is_array())
                arr = &doc;
            else if (doc.is_object() && doc.contains("updates"))
                arr = &doc["updates"];
            else
                throw SyntaxError("expected an 'updates' array");

            std::vector<Upd> updates = build_upd_list(*arr, opts, values, nullptr);
            ValidationReport rep;
            ModelInstance probe = cat.assemble(cat.schema_name);
            probe.updates = updates;
            probe.slots.clear();
            for (const auto& msg : check_type_invariants(probe))
                if (msg.find("dangling") == std::string::npos)
                    rep.findings.push_back(Finding{4, "type-invariant", {}, msg});
            rep.merge(check_referential_integrity(probe));
            if (rep.pass()) {
                payload["updates"] = instance_to_json(probe, *registry_)["updates"];
                cat.updates = std::move(updates);
                cat.updates_done = true;
            }
            return rep;
        });
    }

    case Stage::Semantics: {
        CategoryState& cat = category(peripheral);
        if (!cat.fields_done)
            throw Error("semantic identification requires the field stage");
        const CategorySchema& schema = registry_->get(cat.schema_name);
        if (schema.slots.empty()) {
            // register-only model: nothing to extract
            StageResult r;
            r.stage = stage;
            r.peripheral = peripheral;
            r.attempts = 0;
            r.passed = true;
            r.payload = json::object();
            cat.semantics_done = true;
            stages_.push_back(r);
            return r;
        }
        StageContext ctx;
        ctx.peripheral_name = peripheral;
        ctx.json_like_prompt = skeleton_prompt(schema);
        std::vector<std::pair<std::string, std::string>> queries{
            {assemble_stage_prompt(stage, ctx), peripheral}};
        return query_loop(stage, peripheral, queries,
                          [&](const json& doc, std::size_t, json& payload) {
            ParseReport preport;
            SlotMap slots = build_slot_map(doc, schema.slots, opts, values, &preport);
            ValidationReport rep;
            ModelInstance probe = cat.assemble(cat.schema_name);
            probe.slots = slots;
            for (const auto& msg : check_type_invariants(probe))
                if (msg.find("dangling") == std::string::npos)
                    rep.findings.push_back(Finding{5, "type-invariant", {}, msg});
            rep.merge(check_referential_integrity(probe));
            for (const auto& n : preport.notes)
                rep.notes.push_back(n);
            for (const auto& w : preport.warnings)
                rep.notes.push_back(w);
            if (rep.pass()) {
                payload["slots"] = instance_to_json(probe, *registry_)["slots"];
                cat.slots = std::move(slots);
                cat.semantics_done = true;
                cat.notes.insert(cat.notes.end(), preport.notes.begin(), preport.notes.end());
            }
            return rep;
        });
    }

    case Stage::Instances: {
        CategoryState& cat = category(peripheral);
        if (!cat.updates_done || !cat.semantics_done)
            throw Error("instance identification requires the update and semantic stages");
        StageContext ctx;
        ctx.peripheral_name = peripheral;
        std::vector<std::pair<std::string, std::string>> queries{
            {assemble_stage_prompt(stage, ctx), peripheral}};
        return query_loop(stage, peripheral, queries,
                          [&](const json& doc, std::size_t, json& payload) {
            json norm;
            if (doc.is_array())
                norm = json{{"instances", doc}};
            else if (doc.is_object() && doc.contains("instances"))
                norm = doc;
            else if (doc.is_object() && doc.contains("name"))
                norm = json{{"instances", json::array({doc})}};
            else
                throw SyntaxError("expected an 'instances' array");

            std::vector<DeviceInstance> devs =
                build_device_instances(norm, *registry_, opts, values, nullptr);

            // the whole machine's accumulated instances take part in the
            // duplicate checks
            std::vector<DeviceInstance> all;
            for (const auto& c : categories_)
                if (!c->failed)
                    all.insert(all.end(), c->devices.begin(), c->devices.end());
            all.insert(all.end(), devs.begin(), devs.end());
            ValidationReport rep = check_instances(all);
            if (rep.pass()) {
                json out = json::array();
                for (auto& d : devs) {
                    out.push_back(json{{"name", d.name}, {"base", d.base}, {"irqs", d.irqs}});
                    d.model = cat.assemble(cat.schema_name);
                }
                payload["instances"] = std::move(out);
                cat.devices = std::move(devs);
                cat.instances_done = true;
            }
            return rep;
        });
    }

    case Stage::IrqLines: {
        CategoryState& cat = category(peripheral);
        if (!cat.instances_done)
            throw Error("interrupt association requires the instance stage");
        std::vector<std::pair<std::string, std::string>> queries;
        std::vector<std::size_t> query_devs;
        std::vector<std::vector<std::string>> query_events;
        for (std::size_t di = 0; di < cat.devices.size(); ++di) {
            std::vector<std::string> names;
            for_each_named_event(cat.devices[di].model,
                                 [&](const std::string& path, Evt&) { names.push_back(path); });
            if (names.empty())
                continue;
            json events = json::array();
            for (const auto& n : names)
                events.push_back(json{{"event", n}, {"irq", "<BLANK: interrupt number>"}});
            json doc = json::array(
                {json{{"instance", cat.devices[di].name}, {"events", std::move(events)}}});
            StageContext ctx;
            ctx.events_json = doc.dump(2);
            queries.emplace_back(assemble_stage_prompt(stage, ctx), cat.devices[di].name);
            query_devs.push_back(di);
            query_events.push_back(std::move(names));
        }
        auto result = query_loop(stage, peripheral, queries,
                                 [&](const json& doc, std::size_t qi, json& payload) {
            std::size_t di = query_devs[qi];
            DeviceInstance dev = cat.devices[di]; // work on a copy until it validates
            const json* obj = nullptr;
            if (doc.is_object())
                obj = &doc;
            else if (doc.is_array() && !doc.empty() && doc[0].is_object())
                obj = &doc[0];
            if (!obj || !obj->contains("events") || !(*obj)["events"].is_array())
                throw SyntaxError("expected an 'events' array");

            ValidationReport rep;
            std::map<std::string, std::uint32_t> lines;
            for (const auto& e : (*obj)["events"]) {
                if (!e.is_object() || !e.contains("event") || !e.contains("irq"))
                    throw SyntaxError("event entries need 'event' and 'irq'");
                std::string name = e["event"].get<std::string>();
                if (std::find(query_events[qi].begin(), query_events[qi].end(), name) ==
                    query_events[qi].end()) {
                    rep.findings.push_back(Finding{7,
                                                   "unknown-event",
                                                   {name},
                                                   "response names event '" + name +
                                                       "' which the instance does not have"});
                    continue;
                }
                lines[name] = static_cast<std::uint32_t>(values(e["irq"], "events." + name));
            }
            for_each_named_event(dev.model, [&](const std::string& path, Evt& evt) {
                auto it = lines.find(path);
                if (it != lines.end())
                    evt.irq_line = it->second;
            });
            rep.merge(check_irq_association(dev));
            if (rep.pass()) {
                json out = json::array();
                for (const auto& [name, line] : lines)
                    out.push_back(json{{"event", name}, {"irq", line}});
                payload[dev.name] = std::move(out);
                cat.devices[di] = std::move(dev);
            }
            return rep;
        });
        cat.irqs_done = true;
        return result;
    }
    }
    throw Error("unknown stage");
}

PipelineResult Pipeline::run() {
    PipelineResult out;

    // A failure here is total: nothing downstream can run.
    run_stage(Stage::Categories);

    for (auto& cat : categories_) {
        try {
            run_stage(Stage::Registers, cat->peripheral);
            run_stage(Stage::Fields, cat->peripheral);
            run_stage(Stage::Updates, cat->peripheral);
            run_stage(Stage::Semantics, cat->peripheral);
            run_stage(Stage::Instances, cat->peripheral);
            run_stage(Stage::IrqLines, cat->peripheral);
        } catch (const StageFailure& f) {
            cat->failed = true;
            out.skipped.emplace_back(cat->peripheral, f.what());
        }
    }

    for (const auto& cat : categories_) {
        if (cat->failed)
            continue;
        out.models.push_back(cat->assemble(cat->schema_name));
        out.devices.insert(out.devices.end(), cat->devices.begin(), cat->devices.end());
        out.notes.insert(out.notes.end(), cat->notes.begin(), cat->notes.end());
    }
    out.stages = stages_;
    out.transcript = transcript_;
    return out;
}

PipelineResult run_pipeline(LlmClient& client, const PipelineConfig& cfg) {
    Pipeline p(client, cfg);
    return p.run();
}

} // namespace perimod
