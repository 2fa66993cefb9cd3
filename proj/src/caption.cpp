#include "xrr/caption.hpp"

namespace xrr::caption {

std::string default_caption_prompt() {
    return "You are a meticulous technical describer. Produce a dense, factual "
           "description of the attached image so that a reader without the image "
           "can reason about it. Cover every technical element: axis labels, units, "
           "numeric values, legends, component names, circuit or molecular structure, "
           "code fragments, UI elements, and the relationships between them. State "
           "only what is visible; do not speculate or answer any question.";
}

std::string combine(const std::string& text, const std::string& caption) {
    if (caption.empty()) return text;
    return text + "\nImage Description: " + caption;
}

Query combine_query(Query query) {
    if (query.caption && query.caption->empty()) query.caption.reset();
    query.combined = combine(query.text, query.caption ? *query.caption : std::string());
    return query;
}

llm::CompletionRequest build_request(const Query& query, const std::string& image_ref, int pass,
                                     const PipelineConfig& config) {
    llm::CompletionRequest request;
    request.messages.push_back(llm::Message::system(
        config.caption_prompt.empty() ? default_caption_prompt() : config.caption_prompt));
    request.messages.push_back(llm::Message::user("Describe this image.", {image_ref}));
    request.temperature = config.caption_temperature;
    request.top_p = 1.0;
    request.max_tokens = 1024;
    request.tag = "caption";
    request.query_id = query.id;
    request.pass = pass;
    return request;
}

namespace {

/// Caption resolution before any backend call: pre-supplied wins, then
/// the cache; returns false when a backend call is still needed.
bool resolve_without_backend(Query& query, io::CaptionCache& cache, bool caption_on,
                             CaptionStats* stats = nullptr) {
    if (!caption_on) {
        query.caption.reset();
        return true;
    }
    if (query.caption) return true;  // pre-supplied (may normalize later)
    if (auto cached = cache.get(query.id)) {
        if (stats) ++stats->cache_hits;
        query.caption = *cached;
        return true;
    }
    return query.image_refs.empty();  // text-only: caption stays absent
}

std::vector<llm::CompletionRequest> requests_for(const Query& query,
                                                 const PipelineConfig& config) {
    std::vector<llm::CompletionRequest> requests;
    bool multi = query.image_refs.size() > 1;
    for (std::size_t i = 0; i < query.image_refs.size(); ++i) {
        requests.push_back(build_request(query, query.image_refs[i],
                                         multi ? static_cast<int>(i) : -1, config));
    }
    return requests;
}

std::string join_captions(const std::vector<std::string>& parts) {
    std::string joined;
    for (const std::string& part : parts) {
        if (part.empty()) continue;
        if (!joined.empty()) joined += "\n\n";
        joined += part;
    }
    return joined;
}

} // namespace

Query caption_query(Query query, const llm::LlmClient& client, io::CaptionCache& cache,
                    const PipelineConfig& config) {
    if (resolve_without_backend(query, cache, config.caption_on)) {
        return combine_query(std::move(query));
    }
    std::vector<std::string> parts;
    try {
        for (const llm::CompletionRequest& request : requests_for(query, config)) {
            parts.push_back(client.complete(request).text);
        }
    } catch (const std::exception& e) {
        throw BackendError("caption failed for query '" + query.id + "': " + e.what());
    }
    std::string joined = join_captions(parts);
    cache.put(query.id, joined);
    query.caption = joined;
    return combine_query(std::move(query));
}

std::vector<Query> caption_all(std::vector<Query> queries, const llm::LlmClient& client,
                               io::CaptionCache& cache, const PipelineConfig& config,
                               std::vector<std::string>* warnings, CaptionStats* stats) {
    // Resolve what we can locally, then batch the rest.
    std::vector<llm::CompletionRequest> requests;
    struct Slot {
        std::size_t query_index;
        std::size_t first_request;
        std::size_t request_count;
    };
    std::vector<Slot> slots;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        if (resolve_without_backend(queries[i], cache, config.caption_on, stats)) continue;
        auto per_query = requests_for(queries[i], config);
        slots.push_back({i, requests.size(), per_query.size()});
        for (auto& r : per_query) requests.push_back(std::move(r));
    }
    if (stats) stats->backend_calls = static_cast<int>(requests.size());

    auto outcomes = client.run_batch(requests, config.max_concurrency);

    for (const Slot& slot : slots) {
        Query& query = queries[slot.query_index];
        std::vector<std::string> parts;
        bool failed = false;
        for (std::size_t j = 0; j < slot.request_count && !failed; ++j) {
            const llm::BatchOutcome& outcome = outcomes[slot.first_request + j];
            if (!outcome.ok()) {
                failed = true;
                if (warnings) {
                    warnings->push_back("caption failed for query '" + query.id +
                                        "': " + outcome.error);
                }
            } else {
                parts.push_back(outcome.result->text);
            }
        }
        if (failed) continue;  // caption stays absent
        std::string joined = join_captions(parts);
        cache.put(query.id, joined);
        query.caption = joined;
    }

    for (Query& query : queries) query = combine_query(std::move(query));
    return queries;
}

} // namespace xrr::caption
