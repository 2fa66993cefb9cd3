#include "xrr/expand.hpp"

#include "xrr/error.hpp"

namespace xrr::expansion {

std::string default_expansion_prompt() {
    return "Provide an extensive elaboration on the user's inquiry, covering "
           "the problem itself and the surrounding context. (1) Analyze: break down "
           "the question into its fundamental components. (2) Contextualize: identify "
           "relevant background concepts and common scenarios. (3) Explore: describe "
           "various solution directions and pertinent information, mentioning specific "
           "terms and ideas. (4) Synthesize: weave all of this into a coherent and "
           "detailed piece of writing dense with relevant information and terminology.";
}

llm::CompletionRequest build_request(const Query& query, const PipelineConfig& config) {
    if (!query.combined) {
        throw FormatError("query '" + query.id + "' has no combined input to expand");
    }
    llm::CompletionRequest request;
    request.messages.push_back(llm::Message::system(
        config.expansion_prompt.empty() ? default_expansion_prompt() : config.expansion_prompt));
    request.messages.push_back(llm::Message::user(*query.combined));
    request.temperature = config.gen_temperature;
    request.top_p = config.gen_top_p;
    request.max_tokens = config.max_expansion_tokens;
    request.tag = "expand";
    request.query_id = query.id;
    return request;
}

namespace {

Query settle(Query query, std::string expanded, bool fell_back, const std::string& reason,
             std::vector<std::string>* warnings) {
    if (fell_back && warnings) {
        warnings->push_back("expansion fell back to the combined input for query '" + query.id +
                            "': " + reason);
    }
    query.expanded = std::move(expanded);
    return query;
}

} // namespace

Query expand_query(Query query, const llm::LlmClient& client, const PipelineConfig& config,
                   std::vector<std::string>* warnings) {
    llm::CompletionRequest request = build_request(query, config);
    std::string combined = *query.combined;
    if (!config.expand_on) {
        query.expanded = std::move(combined);
        return query;
    }
    try {
        std::string text = client.complete(request).text;
        if (text.empty()) return settle(std::move(query), combined, true, "empty reply", warnings);
        query.expanded = std::move(text);
        return query;
    } catch (const std::exception& e) {
        return settle(std::move(query), combined, true, e.what(), warnings);
    }
}

std::vector<Query> expand_all(std::vector<Query> queries, const llm::LlmClient& client,
                              const PipelineConfig& config, std::vector<std::string>* warnings) {
    std::vector<llm::CompletionRequest> requests;
    requests.reserve(queries.size());
    for (Query& query : queries) {
        requests.push_back(build_request(query, config));  // validates combined
        if (!config.expand_on) query.expanded = *query.combined;
    }
    if (!config.expand_on) return queries;

    auto outcomes = client.run_batch(requests, config.max_concurrency);
    for (std::size_t i = 0; i < queries.size(); ++i) {
        Query& query = queries[i];
        const llm::BatchOutcome& outcome = outcomes[i];
        std::string combined = *query.combined;
        if (!outcome.ok()) {
            query = settle(std::move(query), std::move(combined), true, outcome.error, warnings);
        } else if (outcome.result->text.empty()) {
            query = settle(std::move(query), std::move(combined), true, "empty reply", warnings);
        } else {
            query.expanded = outcome.result->text;
        }
    }
    return queries;
}

} // namespace xrr::expansion
