// SPDX-License-Identifier: Apache-2.0
//
// Operator entry point: validate instance documents, resolve driver-code
// constants, run the extraction pipeline, and execute machine scenarios.

#include "perimod/frontend.hpp"
#include "perimod/instance_io.hpp"
#include "perimod/resolver.hpp"
#include "perimod/runtime.hpp"
#include "perimod/scenario.hpp"
#include "perimod/util.hpp"
#include "perimod/validate.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace perimod;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;   // semantic failure (validation, expectation, resolution)
constexpr int kExitInput = 2;     // I/O or configuration error
constexpr int kExitBusFault = 3;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write '" + path.string() + "'");
    out << text;
}

std::uint64_t json_int(const json& v, const std::string& what) {
    auto resolver = plain_int_resolver();
    try {
        return resolver(v, what);
    } catch (const Error& e) {
        throw ConfigError(what + ": " + e.what());
    }
}

int cmd_validate(const std::string& path, bool strict) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }

    SchemaRegistry registry = SchemaRegistry::builtin();
    ParseOptions opts{strict};
    ModelInstance inst;
    std::vector<DeviceInstance> devs;
    try {
        json doc = json::parse(text, nullptr, true, /*ignore_comments=*/true);
        if (doc.is_object() && doc.contains("instances")) {
            devs = build_device_instances(doc, registry, opts, plain_int_resolver(), nullptr);
            if (!devs.empty())
                inst = devs.front().model;
        } else {
            inst = build_model_instance(doc, registry, opts, plain_int_resolver(), nullptr);
        }
    } catch (const nlohmann::json::parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const SyntaxError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const Error& e) {
        // invariant violations and dangling references are verdicts, not I/O
        ValidationReport rep;
        rep.findings.push_back(Finding{0, "parse", {}, e.what()});
        std::cout << rep.to_json();
        return kExitFailure;
    }

    ValidationReport rep = validate_all(inst, devs);
    std::cout << rep.to_json();
    return rep.pass() ? kExitOk : kExitFailure;
}

int cmd_resolve(const std::string& expr, const std::vector<std::string>& header_paths) {
    std::vector<SourceFile> sources;
    try {
        for (const auto& p : header_paths)
            sources.push_back(SourceFile{p, read_file(p)});
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    try {
        SymbolTable table = build_symbol_table(sources);
        for (const auto& w : table.warnings)
            std::cerr << "warning: " << w << "\n";
        std::uint64_t v = resolve_value(expr, table);
        std::cout << v << " (" << to_hex(v) << ")\n";
        return kExitOk;
    } catch (const ResolveError& e) {
        std::cerr << e.what() << "\n";
        return kExitFailure;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

int cmd_extract(const std::string& config_path, const std::string& mock_path, bool live,
                int retries_override, int strictness, const std::string& out_dir) {
    try {
        fs::path cfg_dir = fs::path(config_path).parent_path();
        json cfg = json::parse(read_file(config_path));

        PipelineConfig pc;
        if (!cfg.contains("mcu") || !cfg["mcu"].is_string())
            throw ConfigError("config: missing 'mcu'");
        pc.mcu_name = cfg["mcu"].get<std::string>();
        if (cfg.contains("retries"))
            pc.retry_limit = static_cast<int>(json_int(cfg["retries"], "retries"));
        if (cfg.contains("strict"))
            pc.strict = cfg["strict"].get<bool>();
        if (cfg.contains("temperature"))
            pc.temperature = cfg["temperature"].get<double>();
        if (cfg.contains("headers"))
            for (const auto& h : cfg["headers"]) {
                fs::path p = cfg_dir / h.get<std::string>();
                pc.driver_sources.push_back(SourceFile{p.string(), read_file(p)});
            }
        if (retries_override > 0)
            pc.retry_limit = retries_override;
        if (strictness >= 0)
            pc.strict = strictness > 0;

        std::unique_ptr<LlmClient> client;
        if (!mock_path.empty()) {
            client = std::make_unique<MockClient>(Transcript::load(mock_path));
        } else if (live) {
            const char* key = std::getenv(api_key_env_var());
            HttpClientConfig hc;
            hc.api_key = key ? key : "";
            hc.temperature = pc.temperature;
            if (cfg.contains("model"))
                hc.model = cfg["model"].get<std::string>();
            if (cfg.contains("host"))
                hc.host = cfg["host"].get<std::string>();
            client = std::make_unique<HttpLlmClient>(hc); // throws without a key
        } else {
            throw ConfigError("choose a client: --mock <transcript> or --live");
        }

        SchemaRegistry registry = SchemaRegistry::builtin();
        pc.schemas = &registry;

        PipelineResult result = run_pipeline(*client, pc);

        fs::path out(out_dir);
        write_file(out / "transcript.json", result.transcript.serialize());
        for (const auto& m : result.models)
            write_file(out / "models" / (m.category + ".json"),
                       serialize_model_instance(m, registry));
        std::map<std::string, std::vector<DeviceInstance>> by_cat;
        for (const auto& d : result.devices)
            by_cat[d.model.category].push_back(d);
        for (const auto& [cat, devs] : by_cat)
            write_file(out / "devices" / (cat + ".json"),
                       serialize_device_instances(devs, registry));

        for (const auto& s : result.stages)
            std::cout << "stage " << static_cast<int>(s.stage) << " (" << stage_name(s.stage)
                      << ") " << (s.peripheral.empty() ? pc.mcu_name : s.peripheral) << ": "
                      << (s.passed ? "ok" : "failed") << ", attempts=" << s.attempts << "\n";
        for (const auto& n : result.notes)
            std::cout << "note: " << n << "\n";
        for (const auto& [peripheral, reason] : result.skipped)
            std::cerr << "skipped " << peripheral << ": " << reason << "\n";
        std::cout << "wrote " << result.models.size() << " model(s), " << result.devices.size()
                  << " device instance(s) to " << out.string() << "\n";
        return result.all_ok() ? kExitOk : kExitFailure;
    } catch (const StageFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
}

Machine machine_from_config(const std::string& path) {
    fs::path dir = fs::path(path).parent_path();
    json cfg = json::parse(read_file(path), nullptr, true, /*ignore_comments=*/true);
    if (!cfg.is_object())
        throw ConfigError("machine config must be an object");
    std::uint64_t mem_size =
        cfg.contains("mem_size") ? json_int(cfg["mem_size"], "mem_size") : 64 * 1024;
    std::uint64_t ram_base =
        cfg.contains("ram_base") ? json_int(cfg["ram_base"], "ram_base") : 0x20000000;
    MachineOptions opts;
    if (cfg.contains("fault_on_unmapped"))
        opts.fault_on_unmapped = cfg["fault_on_unmapped"].get<bool>();

    SchemaRegistry registry = SchemaRegistry::builtin();
    std::vector<DeviceInstance> devices;
    if (cfg.contains("devices"))
        for (const auto& entry : cfg["devices"]) {
            fs::path p = dir / entry.get<std::string>();
            auto devs = parse_device_instances(read_file(p), registry);
            devices.insert(devices.end(), std::make_move_iterator(devs.begin()),
                           std::make_move_iterator(devs.end()));
        }
    return Machine(std::move(devices), mem_size, ram_base, opts);
}

int cmd_run(const std::string& machine_path, const std::string& scenario_path,
            const std::string& trace_path) {
    ScenarioOutcome outcome;
    std::vector<std::string> diagnostics;
    try {
        Machine machine = machine_from_config(machine_path);
        Scenario scenario = Scenario::load(scenario_path, machine);
        outcome = run_scenario(machine, scenario);
        diagnostics = machine.diagnostics();
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const BusFault& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBusFault;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    for (const auto& d : diagnostics)
        std::cerr << "diagnostic: " << d << "\n";

    if (!trace_path.empty()) {
        try {
            write_file(trace_path, outcome.trace);
        } catch (const Error& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitInput;
        }
    }
    if (outcome.ok) {
        std::cout << "ok\n";
        return kExitOk;
    }
    std::cerr << "step at line " << outcome.failed_step << " failed: " << outcome.message << "\n";
    return outcome.bus_fault ? kExitBusFault : kExitFailure;
}

int cmd_schemas_export() {
    SchemaRegistry registry = SchemaRegistry::builtin();
    std::cout << serialize_schemas(registry);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"peripheral model toolkit: validate, resolve, extract, run"};
    app.require_subcommand(1);

    std::string instance_path;
    bool lenient = false;
    auto* validate = app.add_subcommand("validate", "validate an instance document");
    validate->add_option("instance", instance_path, "instance or devices document")->required();
    validate->add_flag("--lenient", lenient, "tolerate unknown keys");
    validate->add_flag("--strict", "reject unknown keys (default)");

    std::string expr;
    std::vector<std::string> headers;
    auto* resolve = app.add_subcommand("resolve", "resolve a driver-code constant expression");
    resolve->add_option("expr", expr, "expression or identifier")->required();
    resolve->add_option("--headers", headers, "driver header/source files")->expected(-1);

    std::string config_path, mock_path, out_dir = "extracted";
    bool live = false;
    int retries = 0;
    auto* extract = app.add_subcommand("extract", "run the extraction pipeline");
    extract->add_option("config", config_path, "pipeline config")->required();
    extract->add_option("--mock", mock_path, "replay a recorded transcript");
    extract->add_flag("--live", live, "use the remote client");
    extract->add_option("--retries", retries, "retry limit per query");
    bool ex_lenient = false, ex_strict = false;
    extract->add_flag("--lenient", ex_lenient, "lenient response parsing");
    extract->add_flag("--strict", ex_strict, "strict response parsing");
    extract->add_option("--out", out_dir, "output directory");

    std::string machine_path, scenario_path, trace_path;
    auto* run = app.add_subcommand("run", "execute a scenario against a machine");
    run->add_option("machine", machine_path, "machine config")->required();
    run->add_option("scenario", scenario_path, "scenario script")->required();
    run->add_option("--trace", trace_path, "write the event trace here");

    auto* schemas = app.add_subcommand("schemas", "schema utilities");
    auto* schemas_export = schemas->add_subcommand("export", "print the schema set");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitInput;
    }

    if (validate->parsed())
        return cmd_validate(instance_path, !lenient);
    if (resolve->parsed())
        return cmd_resolve(expr, headers);
    if (extract->parsed()) {
        int strictness = ex_lenient ? 0 : (ex_strict ? 1 : -1);
        return cmd_extract(config_path, mock_path, live, retries, strictness, out_dir);
    }
    if (run->parsed())
        return cmd_run(machine_path, scenario_path, trace_path);
    if (schemas->parsed() && schemas_export->parsed())
        return cmd_schemas_export();
    std::cerr << app.help();
    return kExitInput;
}
