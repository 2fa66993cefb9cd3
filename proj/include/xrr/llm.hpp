#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "xrr/core.hpp"
#include "xrr/error.hpp"

namespace xrr::llm {

struct Message {
    std::string role;  // "system" or "user"
    std::string content;
    std::vector<std::string> image_refs;  // user messages only

    static Message system(std::string text) { return {"system", std::move(text), {}}; }
    static Message user(std::string text, std::vector<std::string> images = {}) {
        return {"user", std::move(text), std::move(images)};
    }
};

struct CompletionRequest {
    std::vector<Message> messages;
    double temperature = 0.0;
    double top_p = 1.0;
    int max_tokens = 1024;

    // Routing and fixture keys.
    std::string tag;       // caption | expand | rerank
    std::string query_id;
    int pass = -1;  // rerank pass index; -1 = not a multi-pass call

    /// Throws ConfigError on violated invariants.
    void validate() const;
};

struct CompletionResult {
    std::string text;
    std::string backend;
    int attempt_count = 1;
};

/// One slot of a batch: either a result or the error that filled it.
struct BatchOutcome {
    std::optional<CompletionResult> result;
    std::string error;

    bool ok() const { return result.has_value(); }

    /// Result if ok, otherwise rethrows the slot's error.
    const CompletionResult& value() const;
};

// ---------------------------------------------------------------------------
// Backends

class Backend {
public:
    virtual ~Backend() = default;

    /// Single attempt; throws TransientError for retryable failures,
    /// BackendError/ProtocolError otherwise.
    virtual CompletionResult complete_once(const CompletionRequest& request) = 0;

    virtual const char* name() const = 0;
};

// ---------------------------------------------------------------------------
// Fixture store and mock backend

/// Canned responses keyed by (tag, query_id, pass). Lookup falls back to
/// the passless record (tag, query_id) when no per-pass entry exists.
class FixtureStore {
public:
    FixtureStore() = default;

    /// Loads newline-delimited JSON records with fields tag, query_id,
    /// optional pass, response.
    static FixtureStore load(const std::string& path);

    void add(const std::string& tag, const std::string& query_id, int pass,
             std::string response);
    void add(const std::string& tag, const std::string& query_id, std::string response) {
        add(tag, query_id, -1, std::move(response));
    }

    std::optional<std::string> find(const std::string& tag, const std::string& query_id,
                                    int pass) const;

    std::size_t size() const { return entries_.size(); }

private:
    std::map<std::tuple<std::string, std::string, int>, std::string> entries_;
};

enum class OnMissing { Echo, Fail };

/// Deterministic fixture-driven backend with concurrency instrumentation.
class MockBackend : public Backend {
public:
    explicit MockBackend(FixtureStore fixtures, OnMissing on_missing = OnMissing::Echo,
                         int latency_ms = 0);

    CompletionResult complete_once(const CompletionRequest& request) override;
    const char* name() const override { return "mock"; }

    int peak_in_flight() const { return peak_in_flight_.load(); }
    int total_calls() const { return total_calls_.load(); }
    int calls_for_tag(const std::string& tag) const;

private:
    FixtureStore fixtures_;
    OnMissing on_missing_;
    int latency_ms_;

    std::atomic<int> in_flight_{0};
    std::atomic<int> peak_in_flight_{0};
    std::atomic<int> total_calls_{0};
    mutable std::mutex tag_mutex_;
    std::map<std::string, int> tag_calls_;
};

// ---------------------------------------------------------------------------
// Wire backend (OpenAI-compatible chat completions)

struct WireSettings {
    std::string api_base = "https://api.openai.com/v1";
    std::string model = "gpt-4o";
    std::string api_key_env = "OPENAI_API_KEY";
    int timeout_ms = 120000;
};

class WireBackend : public Backend {
public:
    explicit WireBackend(WireSettings settings);

    CompletionResult complete_once(const CompletionRequest& request) override;
    const char* name() const override { return "wire"; }

    /// Request body for the chat-completions endpoint, exposed for tests.
    static std::string build_payload(const CompletionRequest& request, const std::string& model);

    /// Extracts choices[0].message.content; throws ProtocolError otherwise.
    static std::string parse_response(const std::string& body);

private:
    WireSettings settings_;
    std::string api_key_;
    std::string host_;   // scheme://host[:port]
    std::string path_prefix_;
};

// ---------------------------------------------------------------------------
// Client: retry + bounded-concurrency batching

struct RetryPolicy {
    int attempts = 3;
    int base_delay_ms = 200;
    double multiplier = 2.0;
    std::uint64_t jitter_seed = 0;  // 0 = nondeterministic
};

class LlmClient {
public:
    LlmClient(std::shared_ptr<Backend> backend, RetryPolicy retry = {});

    /// Retries TransientError up to retry.attempts with exponential
    /// backoff and jitter; attempt_count reflects attempts used.
    CompletionResult complete(const CompletionRequest& request) const;

    /// Runs requests through at most `limit` concurrent workers. Results
    /// are slot-aligned with requests; a failed slot carries its error.
    std::vector<BatchOutcome> run_batch(const std::vector<CompletionRequest>& requests,
                                        int limit) const;

    Backend& backend() const { return *backend_; }

private:
    std::shared_ptr<Backend> backend_;
    RetryPolicy retry_;
};

} // namespace xrr::llm
