#pragma once

// Completion backends: HTTP endpoint, fixture-driven stub, and a callable
// adapter for tests and embedding.

#include <revutil/dataset.hpp>
#include <revutil/error.hpp>
#include <revutil/rubric.hpp>

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace revutil::scoring {

using rubric::PromptBundle;

struct RetryPolicy {
    int max_attempts = 3;
    int backoff_ms = 500;
    double backoff_multiplier = 2.0;
};

enum class RequestFormat : std::uint8_t { Generic, Completion, Chat };

inline std::optional<RequestFormat> parse_request_format(std::string_view s) noexcept
{
    if (s == "generic")
        return RequestFormat::Generic;
    if (s == "completion")
        return RequestFormat::Completion;
    if (s == "chat")
        return RequestFormat::Chat;
    return std::nullopt;
}

constexpr std::string_view request_format_key(RequestFormat f) noexcept
{
    switch (f) {
    case RequestFormat::Generic: return "generic";
    case RequestFormat::Completion: return "completion";
    case RequestFormat::Chat: return "chat";
    }
    return "";
}

struct BackendConfig {
    std::string kind = "http"; ///< "http" or "stub"
    std::string base_url;
    std::string model_name;
    std::string auth_token_env;
    double temperature = 0.0;
    int max_output_tokens = 1024;
    int max_concurrency = 4;
    RetryPolicy retry;
    double timeout_seconds = 120.0;
    RequestFormat request_format = RequestFormat::Generic;
    /// JSON pointer to the generated text in the response body.
    std::string response_text_pointer = "/text";
    /// Fixture file for the stub backend.
    std::string stub_fixture;

    void validate() const
    {
        if (kind != "http" && kind != "stub")
            throw Error("backend kind must be 'http' or 'stub', got '" + kind + "'");
        if (kind == "http" && base_url.empty())
            throw Error("http backend needs base_url");
        if (max_concurrency < 1)
            throw Error("max_concurrency must be >= 1");
        if (retry.max_attempts < 1)
            throw Error("retry.max_attempts must be >= 1");
        if (max_output_tokens < 1)
            throw Error("max_output_tokens must be >= 1");
    }
};

inline json to_json(const BackendConfig& c)
{
    return {{"kind", c.kind},
            {"base_url", c.base_url},
            {"model_name", c.model_name},
            {"auth_token_env", c.auth_token_env},
            {"temperature", c.temperature},
            {"max_output_tokens", c.max_output_tokens},
            {"max_concurrency", c.max_concurrency},
            {"retry",
             {{"max_attempts", c.retry.max_attempts},
              {"backoff_ms", c.retry.backoff_ms},
              {"backoff_multiplier", c.retry.backoff_multiplier}}},
            {"timeout_seconds", c.timeout_seconds},
            {"request_format", request_format_key(c.request_format)},
            {"response_text_pointer", c.response_text_pointer},
            {"stub_fixture", c.stub_fixture}};
}

/// Missing keys keep their defaults. A relative stub_fixture is resolved
/// against `base_dir`.
inline BackendConfig backend_config_from_json(const json& j, const std::filesystem::path& base_dir = {})
{
    BackendConfig c;
    c.kind = j.value("kind", c.kind);
    c.base_url = j.value("base_url", c.base_url);
    c.model_name = j.value("model_name", c.model_name);
    c.auth_token_env = j.value("auth_token_env", c.auth_token_env);
    c.temperature = j.value("temperature", c.temperature);
    c.max_output_tokens = j.value("max_output_tokens", c.max_output_tokens);
    c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
    if (auto it = j.find("retry"); it != j.end()) {
        c.retry.max_attempts = it->value("max_attempts", c.retry.max_attempts);
        c.retry.backoff_ms = it->value("backoff_ms", c.retry.backoff_ms);
        c.retry.backoff_multiplier = it->value("backoff_multiplier", c.retry.backoff_multiplier);
    }
    c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
    if (auto it = j.find("request_format"); it != j.end()) {
        auto f = parse_request_format(it->get<std::string>());
        if (!f)
            throw Error("unknown request_format '" + it->get<std::string>() + "'");
        c.request_format = *f;
    }
    c.response_text_pointer = j.value("response_text_pointer", c.response_text_pointer);
    c.stub_fixture = j.value("stub_fixture", c.stub_fixture);
    if (!c.stub_fixture.empty() && !base_dir.empty() && std::filesystem::path(c.stub_fixture).is_relative())
        c.stub_fixture = (base_dir / c.stub_fixture).string();
    c.validate();
    return c;
}

inline BackendConfig load_backend_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open backend config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path, 0, e.what());
    }
    return backend_config_from_json(j, std::filesystem::path(path).parent_path());
}

/// 64-bit FNV-1a; keys stub fixture entries by prompt text.
inline std::uint64_t fnv1a(std::string_view s) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string prompt_hash(std::string_view prompt)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(prompt)));
    return buf;
}

/// Implementations must be safe to call from several threads.
class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string complete(const PromptBundle& prompt) = 0;
    virtual std::string name() const = 0;
};

class FunctionBackend final : public Backend {
public:
    using Fn = std::function<std::string(const PromptBundle&)>;
    explicit FunctionBackend(Fn fn, std::string name = "function") : fn_(std::move(fn)), name_(std::move(name)) {}
    std::string complete(const PromptBundle& prompt) override { return fn_(prompt); }
    std::string name() const override { return name_; }

private:
    Fn fn_;
    std::string name_;
};

/// Fixture format:
///   {"responses": {"<prompt hash>": "text"},
///    "rules": [{"contains": "substring", "response": "text"}],
///    "default": "text"}
/// Lookup order: exact hash, first matching rule, default.
class StubBackend final : public Backend {
public:
    explicit StubBackend(const json& fixture, std::string name = "stub") : name_(std::move(name))
    {
        if (auto it = fixture.find("responses"); it != fixture.end())
            for (const auto& [k, v] : it->items())
                responses_[k] = v.get<std::string>();
        if (auto it = fixture.find("rules"); it != fixture.end())
            for (const auto& r : *it)
                rules_.emplace_back(r.at("contains").get<std::string>(), r.at("response").get<std::string>());
        if (auto it = fixture.find("default"); it != fixture.end() && it->is_string())
            default_ = it->get<std::string>();
    }

    static json read_fixture(const std::string& path)
    {
        std::ifstream in(path);
        if (!in)
            throw Error("cannot open stub fixture: " + path);
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw ParseError(path, 0, e.what());
        }
        return j;
    }

    std::string complete(const PromptBundle& prompt) override
    {
        calls_.fetch_add(1);
        if (auto it = responses_.find(prompt_hash(prompt.rendered_text)); it != responses_.end())
            return it->second;
        for (const auto& [needle, response] : rules_)
            if (prompt.rendered_text.find(needle) != std::string::npos)
                return response;
        if (default_)
            return *default_;
        throw BackendRefusal(404, "stub has no response for prompt " + prompt_hash(prompt.rendered_text));
    }

    std::string name() const override { return name_; }
    std::size_t calls() const noexcept { return calls_.load(); }

private:
    std::string name_;
    std::map<std::string, std::string> responses_;
    std::vector<std::pair<std::string, std::string>> rules_;
    std::optional<std::string> default_;
    std::atomic<std::size_t> calls_{0};
};

namespace detail {

struct ParsedUrl {
    std::string origin; ///< scheme://host[:port]
    std::string path;
};

inline ParsedUrl split_url(const std::string& url)
{
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw Error("backend base_url must include a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos)
        return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

inline bool retryable_status(int status) noexcept
{
    return status == 408 || status == 429 || status >= 500;
}

} // namespace detail

/// POSTs the prompt as JSON and reads the generated text at a JSON pointer.
class HttpBackend final : public Backend {
public:
    explicit HttpBackend(BackendConfig cfg) : cfg_(std::move(cfg))
    {
        cfg_.validate();
        url_ = detail::split_url(cfg_.base_url);
    }

    json request_body(const PromptBundle& prompt) const
    {
        switch (cfg_.request_format) {
        case RequestFormat::Completion:
            return {{"model", cfg_.model_name},
                    {"prompt", prompt.rendered_text},
                    {"temperature", cfg_.temperature},
                    {"max_tokens", cfg_.max_output_tokens}};
        case RequestFormat::Chat:
            return {{"model", cfg_.model_name},
                    {"messages", json::array({{{"role", "user"}, {"content", prompt.rendered_text}}})},
                    {"temperature", cfg_.temperature},
                    {"max_tokens", cfg_.max_output_tokens}};
        case RequestFormat::Generic:
            break;
        }
        return {{"model_name", cfg_.model_name},
                {"prompt", prompt.rendered_text},
                {"temperature", cfg_.temperature},
                {"max_output_tokens", cfg_.max_output_tokens}};
    }

    std::string complete(const PromptBundle& prompt) override
    {
        httplib::Headers headers;
        if (!cfg_.auth_token_env.empty()) {
            const char* token = std::getenv(cfg_.auth_token_env.c_str());
            if (!token || !*token)
                throw AuthError("environment variable " + cfg_.auth_token_env + " is not set");
            headers.emplace("Authorization", std::string("Bearer ") + token);
        }
        const auto body = request_body(prompt).dump();

        httplib::Client client(url_.origin);
        const auto secs = static_cast<time_t>(cfg_.timeout_seconds);
        const auto usecs = static_cast<time_t>((cfg_.timeout_seconds - static_cast<double>(secs)) * 1e6);
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);

        double delay_ms = cfg_.retry.backoff_ms;
        std::string last_error;
        for (int attempt = 1; attempt <= cfg_.retry.max_attempts; ++attempt) {
            if (attempt > 1) {
                std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(delay_ms));
                delay_ms *= cfg_.retry.backoff_multiplier;
            }
            auto res = client.Post(url_.path, headers, body, "application/json");
            if (!res) {
                last_error = httplib::to_string(res.error());
                continue;
            }
            if (res->status == 401 || res->status == 403)
                throw AuthError("backend rejected credentials (HTTP " + std::to_string(res->status) + ")");
            if (res->status >= 200 && res->status < 300)
                return extract_text(res->body);
            if (detail::retryable_status(res->status) && attempt < cfg_.retry.max_attempts) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            throw BackendRefusal(res->status, res->body);
        }
        throw TransportError("backend unreachable after " + std::to_string(cfg_.retry.max_attempts) +
                             " attempts: " + last_error);
    }

    std::string name() const override { return cfg_.model_name.empty() ? "http" : cfg_.model_name; }

private:
    std::string extract_text(const std::string& body) const
    {
        json j;
        try {
            j = json::parse(body);
        } catch (const json::exception& e) {
            throw BackendRefusal(200, "response is not JSON: " + std::string(e.what()));
        }
        const json::json_pointer ptr(cfg_.response_text_pointer);
        if (!j.contains(ptr) || !j.at(ptr).is_string())
            throw BackendRefusal(200, "no string at " + cfg_.response_text_pointer + " in response");
        return j.at(ptr).get<std::string>();
    }

    BackendConfig cfg_;
    detail::ParsedUrl url_;
};

inline std::unique_ptr<Backend> make_backend(const BackendConfig& cfg)
{
    cfg.validate();
    if (cfg.kind == "stub") {
        if (cfg.stub_fixture.empty())
            throw Error("stub backend needs stub_fixture");
        return std::make_unique<StubBackend>(StubBackend::read_fixture(cfg.stub_fixture),
                                             cfg.model_name.empty() ? "stub" : cfg.model_name);
    }
    return std::make_unique<HttpBackend>(cfg);
}

/// Free-function form of Backend::complete.
inline std::string submit_completion(Backend& backend, const PromptBundle& prompt)
{
    return backend.complete(prompt);
}

} // namespace revutil::scoring
