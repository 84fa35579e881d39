// SPDX-License-Identifier: Apache-2.0
//
// The staged extraction pipeline: prompt assembly, a pluggable LLM client
// with a transcript-replaying mock, per-stage parse/resolve/validate loops
// with bounded retries, and the orchestration across categories.

#pragma once

#include "perimod/errors.hpp"
#include "perimod/instance_io.hpp"
#include "perimod/primitives.hpp"
#include "perimod/resolver.hpp"
#include "perimod/schema.hpp"
#include "perimod/validate.hpp"

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

namespace perimod {

/// Behavioral contract for a language-model client. The response is opaque
/// text; implementations may be remote (rate-limited) or scripted mocks.
class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual std::string complete(const std::string& system_instruction,
                                 const std::string& prompt) = 0;
};

struct TranscriptRecord {
    std::string system;
    std::string prompt;
    std::string response;

    bool operator==(const TranscriptRecord&) const = default;
};

/// Ordered (system, prompt, response) records; serializable and replayable
/// bit-exactly.
struct Transcript {
    std::vector<TranscriptRecord> records;

    static Transcript parse(std::string_view text);
    static Transcript load(const std::string& path);
    std::string serialize() const;
};

/// Replays a transcript: each complete() call returns the next recorded
/// response. With verify_prompts set, a recorded non-empty prompt must match
/// the assembled one exactly.
class MockClient : public LlmClient {
public:
    explicit MockClient(Transcript script, bool verify_prompts = false)
        : script_(std::move(script)), verify_prompts_(verify_prompts) {}

    std::string complete(const std::string& system_instruction,
                         const std::string& prompt) override;

    std::size_t consumed() const { return next_; }

private:
    Transcript script_;
    bool verify_prompts_;
    std::size_t next_ = 0;
};

struct HttpClientConfig {
    std::string host;          // e.g. "generativelanguage.googleapis.com"
    std::string model;         // e.g. "gemini-1.5-flash"
    std::string api_key;       // from the environment, see api_key_env_var()
    double temperature = 1.0;
    int timeout_seconds = 120;
};

/// Name of the environment variable holding the remote API key.
const char* api_key_env_var();

/// Minimal remote client speaking the generateContent REST shape. Requires
/// a non-empty api_key; construction throws ConfigError otherwise.
class HttpLlmClient : public LlmClient {
public:
    explicit HttpLlmClient(HttpClientConfig cfg);
    std::string complete(const std::string& system_instruction,
                         const std::string& prompt) override;

private:
    HttpClientConfig cfg_;
};

enum class Stage {
    Categories = 1, // peripheral category identification
    Registers = 2,
    Fields = 3,
    Updates = 4,
    Semantics = 5,
    Instances = 6,
    IrqLines = 7, // interrupt association
};

std::string_view stage_name(Stage s);

/// The verbatim system instruction sent with every query.
std::string system_instruction();

/// Render a schema as the JSON-like document embedded in the semantics
/// prompt: one commented slot per parameter, value positions left as
/// angle-bracket blanks.
std::string skeleton_prompt(const CategorySchema& schema);

/// Everything the stage templates can reference. Missing placeholders raise
/// PromptError at assembly time.
struct StageContext {
    std::string mcu_name;
    std::string peripheral_name;
    std::string register_name;
    std::string json_like_prompt;
    std::string events_json;
    std::vector<std::string> categories;
};

std::string assemble_stage_prompt(Stage stage, const StageContext& ctx);

/// Strip fenced code blocks, then extract the first balanced JSON object or
/// array from response text. Throws SyntaxError when none parses.
nlohmann::ordered_json extract_json(std::string_view response);

struct PipelineConfig {
    int retry_limit = 5; // per query, >= 1
    bool strict = true;
    std::string mcu_name;
    std::vector<SourceFile> driver_sources;
    const SchemaRegistry* schemas = nullptr; // defaults to the builtin registry
    double temperature = 1.0;
};

/// Outcome of one pipeline stage for one peripheral: attempts is the largest
/// number of tries any single query in the stage needed; the payload is the
/// resolved stage output and is present iff the report passes.
struct StageResult {
    Stage stage = Stage::Categories;
    std::string peripheral; // empty for stage 1
    int attempts = 0;
    bool passed = false;
    nlohmann::ordered_json payload;
    ValidationReport report;
    std::vector<TranscriptRecord> transcript;
};

/// Raised when a stage exhausts its retries; carries the failed result with
/// every rejected attempt's report and transcript.
class StageFailure : public Error {
public:
    StageFailure(const std::string& msg, StageResult result)
        : Error(msg), result(std::move(result)) {}
    StageResult result;
};

struct PipelineResult {
    std::vector<ModelInstance> models;
    std::vector<DeviceInstance> devices;
    std::vector<StageResult> stages;
    Transcript transcript;
    /// (peripheral, reason) for categories whose stages failed permanently.
    std::vector<std::pair<std::string, std::string>> skipped;
    std::vector<std::string> notes;

    bool all_ok() const { return skipped.empty(); }
};

/// Drives the staged extraction over one client. Stages can be run
/// individually (tests) or via run(), which executes the dependency order
/// 1 -> 2 -> 3 -> 4 -> 5 -> 6 -> 7 per identified category, isolating
/// failures to the affected category.
class Pipeline {
public:
    Pipeline(LlmClient& client, PipelineConfig cfg);
    ~Pipeline();

    /// Stage 1 takes no peripheral; all others require one identified by a
    /// previous stage (or seeded via add_category for single-stage tests).
    StageResult run_stage(Stage stage, const std::string& peripheral = "");

    PipelineResult run();

    /// Seed a (peripheral, schema) pair without running stage 1.
    void add_category(const std::string& peripheral, const std::string& schema);

    const SymbolTable& symbols() const { return symbols_; }

private:
    struct CategoryState;

    StageResult query_loop(Stage stage, const std::string& peripheral,
                           const std::vector<std::pair<std::string, std::string>>& queries,
                           const std::function<ValidationReport(const nlohmann::ordered_json&,
                                                                std::size_t,
                                                                nlohmann::ordered_json&)>& accept);

    CategoryState& category(const std::string& peripheral);

    LlmClient& client_;
    PipelineConfig cfg_;
    const SchemaRegistry* registry_;
    SymbolTable symbols_;
    std::vector<std::unique_ptr<CategoryState>> categories_;
    std::vector<StageResult> stages_;
    Transcript transcript_;
    std::vector<DeviceInstance> devices_;
    std::vector<std::string> notes_;
    bool categories_done_ = false;
};

/// Run the whole pipeline over a client.
PipelineResult run_pipeline(LlmClient& client, const PipelineConfig& cfg);

} // namespace perimod
