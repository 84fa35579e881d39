// SPDX-License-Identifier: Apache-2.0
#include "perimod/errors.hpp"
#include "perimod/frontend.hpp"

#ifdef PERIMOD_HAVE_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

namespace perimod {

using json = nlohmann::ordered_json;

HttpLlmClient::HttpLlmClient(HttpClientConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.api_key.empty())
        throw ConfigError(std::string("no API key: set ") + api_key_env_var());
    if (cfg_.host.empty())
        cfg_.host = "generativelanguage.googleapis.com";
    if (cfg_.model.empty())
        cfg_.model = "gemini-1.5-flash";
}

std::string HttpLlmClient::complete(const std::string& system_instruction,
                                    const std::string& prompt) {
    json body{
        {"system_instruction", json{{"parts", json::array({json{{"text", system_instruction}}})}}},
        {"contents",
         json::array({json{{"role", "user"},
                           {"parts", json::array({json{{"text", prompt}}})}}})},
        {"generationConfig", json{{"temperature", cfg_.temperature}}},
    };
    std::string path = "/v1beta/models/" + cfg_.model + ":generateContent?key=" + cfg_.api_key;

#ifdef PERIMOD_HAVE_OPENSSL
    httplib::SSLClient cli(cfg_.host);
#else
    httplib::Client cli(cfg_.host);
#endif
    cli.set_read_timeout(cfg_.timeout_seconds, 0);
    cli.set_write_timeout(cfg_.timeout_seconds, 0);
    auto res = cli.Post(path, body.dump(), "application/json");
    if (!res)
        throw Error("request failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw Error("request returned status " + std::to_string(res->status) + ": " + res->body);
    json doc;
    try {
        doc = json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(std::string("unparseable completion response: ") + e.what());
    }
    try {
        return doc.at("candidates").at(0).at("content").at("parts").at(0).at("text")
            .get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw Error("completion response has no candidate text");
    }
}

} // namespace perimod
