#include "xrr/llm.hpp"

#include <chrono>
#include <cstdlib>
#include <random>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "json.hpp"

#include "xrr/io.hpp"

using json = nlohmann::json;

namespace xrr::llm {

void CompletionRequest::validate() const {
    if (messages.empty()) throw ConfigError("completion request has no messages");
    if (temperature < 0) throw ConfigError("temperature must be non-negative");
    if (top_p <= 0 || top_p > 1) throw ConfigError("top_p must be in (0, 1]");
    if (max_tokens <= 0) throw ConfigError("max_tokens must be positive");
}

const CompletionResult& BatchOutcome::value() const {
    if (!result) throw BackendError(error.empty() ? "batch slot failed" : error);
    return *result;
}

// ---------------------------------------------------------------------------
// FixtureStore

FixtureStore FixtureStore::load(const std::string& path) {
    FixtureStore store;
    std::string bytes = io::read_file(path);
    std::size_t start = 0, line_no = 0;
    while (start < bytes.size()) {
        std::size_t end = bytes.find('\n', start);
        if (end == std::string::npos) end = bytes.size();
        std::string line = bytes.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object()) {
            throw FormatError(path + ":" + std::to_string(line_no) + ": malformed fixture");
        }
        if (!record.contains("tag") || !record.contains("query_id") ||
            !record.contains("response")) {
            throw FormatError(path + ":" + std::to_string(line_no) +
                              ": fixture needs tag, query_id, response");
        }
        store.add(record["tag"].get<std::string>(), record["query_id"].get<std::string>(),
                  record.value("pass", -1), record["response"].get<std::string>());
    }
    return store;
}

void FixtureStore::add(const std::string& tag, const std::string& query_id, int pass,
                       std::string response) {
    entries_[{tag, query_id, pass}] = std::move(response);
}

std::optional<std::string> FixtureStore::find(const std::string& tag,
                                              const std::string& query_id, int pass) const {
    if (auto it = entries_.find({tag, query_id, pass}); it != entries_.end()) return it->second;
    if (pass != -1) {
        if (auto it = entries_.find({tag, query_id, -1}); it != entries_.end()) return it->second;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// MockBackend

MockBackend::MockBackend(FixtureStore fixtures, OnMissing on_missing, int latency_ms)
    : fixtures_(std::move(fixtures)), on_missing_(on_missing), latency_ms_(latency_ms) {}

CompletionResult MockBackend::complete_once(const CompletionRequest& request) {
    request.validate();
    int now = in_flight_.fetch_add(1) + 1;
    int peak = peak_in_flight_.load();
    while (now > peak && !peak_in_flight_.compare_exchange_weak(peak, now)) {
    }
    total_calls_.fetch_add(1);
    {
        std::lock_guard<std::mutex> lock(tag_mutex_);
        ++tag_calls_[request.tag];
    }
    if (latency_ms_ > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(latency_ms_));
    }
    in_flight_.fetch_sub(1);

    if (auto hit = fixtures_.find(request.tag, request.query_id, request.pass)) {
        return {*hit, name(), 1};
    }
    if (on_missing_ == OnMissing::Fail) {
        throw BackendError("no fixture for tag '" + request.tag + "', query '" +
                           request.query_id + "', pass " + std::to_string(request.pass));
    }
    for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
        if (it->role == "user") return {it->content, name(), 1};
    }
    return {request.messages.back().content, name(), 1};
}

int MockBackend::calls_for_tag(const std::string& tag) const {
    std::lock_guard<std::mutex> lock(tag_mutex_);
    auto it = tag_calls_.find(tag);
    return it == tag_calls_.end() ? 0 : it->second;
}

// ---------------------------------------------------------------------------
// WireBackend

namespace {

// Splits "scheme://host[:port]/prefix" into client target and path prefix.
void split_base_url(const std::string& base, std::string& host, std::string& prefix) {
    std::size_t scheme_end = base.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("api_base '" + base + "' must include a scheme");
    }
    std::size_t path_start = base.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        host = base;
        prefix.clear();
    } else {
        host = base.substr(0, path_start);
        prefix = base.substr(path_start);
    }
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
}

} // namespace

WireBackend::WireBackend(WireSettings settings) : settings_(std::move(settings)) {
    split_base_url(settings_.api_base, host_, path_prefix_);
    if (!settings_.api_key_env.empty()) {
        if (const char* key = std::getenv(settings_.api_key_env.c_str())) api_key_ = key;
    }
    if (api_key_.empty()) {
        throw ConfigError("wire backend needs an API key in $" + settings_.api_key_env);
    }
}

std::string WireBackend::build_payload(const CompletionRequest& request,
                                       const std::string& model) {
    json messages = json::array();
    for (const Message& m : request.messages) {
        if (m.image_refs.empty()) {
            messages.push_back({{"role", m.role}, {"content", m.content}});
            continue;
        }
        json parts = json::array();
        parts.push_back({{"type", "text"}, {"text", m.content}});
        for (const std::string& ref : m.image_refs) {
            parts.push_back({{"type", "image_url"}, {"image_url", {{"url", ref}}}});
        }
        messages.push_back({{"role", m.role}, {"content", parts}});
    }
    json payload{{"model", model},
                 {"messages", messages},
                 {"temperature", request.temperature},
                 {"top_p", request.top_p},
                 {"max_tokens", request.max_tokens}};
    if (request.pass >= 0) payload["seed"] = request.pass;
    return payload.dump();
}

std::string WireBackend::parse_response(const std::string& body) {
    json root = json::parse(body, nullptr, false);
    if (root.is_discarded() || !root.is_object()) {
        throw ProtocolError("backend returned malformed JSON");
    }
    auto choices = root.find("choices");
    if (choices == root.end() || !choices->is_array() || choices->empty()) {
        throw ProtocolError("backend response has no choices");
    }
    const json& first = (*choices)[0];
    if (!first.contains("message") || !first["message"].contains("content") ||
        !first["message"]["content"].is_string()) {
        throw ProtocolError("backend response has no message content");
    }
    return first["message"]["content"].get<std::string>();
}

CompletionResult WireBackend::complete_once(const CompletionRequest& request) {
    request.validate();
    httplib::Client client(host_);
    client.set_connection_timeout(settings_.timeout_ms / 1000,
                                  (settings_.timeout_ms % 1000) * 1000);
    client.set_read_timeout(settings_.timeout_ms / 1000, (settings_.timeout_ms % 1000) * 1000);
    client.set_bearer_token_auth(api_key_);

    std::string payload = build_payload(request, settings_.model);
    auto res = client.Post(path_prefix_ + "/chat/completions", payload, "application/json");
    if (!res) {
        throw TransientError("request failed: " + httplib::to_string(res.error()));
    }
    if (res->status == 429 || res->status >= 500) {
        throw TransientError("backend returned status " + std::to_string(res->status));
    }
    if (res->status != 200) {
        throw BackendError("backend returned status " + std::to_string(res->status) + ": " +
                           res->body.substr(0, 200));
    }
    return {parse_response(res->body), name(), 1};
}

// ---------------------------------------------------------------------------
// LlmClient

LlmClient::LlmClient(std::shared_ptr<Backend> backend, RetryPolicy retry)
    : backend_(std::move(backend)), retry_(retry) {
    if (!backend_) throw ConfigError("llm client needs a backend");
    if (retry_.attempts < 1) throw ConfigError("retry attempts must be at least 1");
}

CompletionResult LlmClient::complete(const CompletionRequest& request) const {
    std::mt19937_64 rng(retry_.jitter_seed ? retry_.jitter_seed
                                           : std::random_device{}());
    double delay = retry_.base_delay_ms;
    for (int attempt = 1;; ++attempt) {
        try {
            CompletionResult result = backend_->complete_once(request);
            result.attempt_count = attempt;
            return result;
        } catch (const TransientError& e) {
            if (attempt >= retry_.attempts) {
                throw BackendError("exhausted " + std::to_string(retry_.attempts) +
                                   " attempts; last error: " + e.what());
            }
            std::uniform_real_distribution<double> jitter(0.0, delay);
            auto sleep_ms = static_cast<std::int64_t>(delay + jitter(rng));
            if (sleep_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(sleep_ms));
            delay *= retry_.multiplier;
        }
    }
}

std::vector<BatchOutcome> LlmClient::run_batch(const std::vector<CompletionRequest>& requests,
                                               int limit) const {
    if (limit < 1) throw ConfigError("batch concurrency limit must be at least 1");
    std::vector<BatchOutcome> outcomes(requests.size());
    if (requests.empty()) return outcomes;

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= requests.size()) return;
            try {
                outcomes[i].result = complete(requests[i]);
            } catch (const std::exception& e) {
                outcomes[i].error = e.what();
            }
        }
    };

    std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(limit),
                                                  requests.size());
    std::vector<std::thread> workers;
    workers.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) workers.emplace_back(worker);
    for (std::thread& t : workers) t.join();
    return outcomes;
}

} // namespace xrr::llm
