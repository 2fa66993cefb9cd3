#pragma once

#include <string>
#include <vector>

#include "xrr/core.hpp"
#include "xrr/llm.hpp"

namespace xrr::expansion {

/// Built-in four-step expansion prompt (system message); override via
/// PipelineConfig::expansion_prompt.
std::string default_expansion_prompt();

/// Expansion request for one query; requires query.combined.
llm::CompletionRequest build_request(const Query& query, const PipelineConfig& config);

/// Fills query.expanded from the backend. With config.expand_on false,
/// or on backend failure or an empty reply, expanded = combined (a
/// warning is recorded for the failure cases).
Query expand_query(Query query, const llm::LlmClient& client, const PipelineConfig& config,
                   std::vector<std::string>* warnings = nullptr);

/// Batched expansion under the concurrency limit; same per-query
/// fallback rules as expand_query.
std::vector<Query> expand_all(std::vector<Query> queries, const llm::LlmClient& client,
                              const PipelineConfig& config,
                              std::vector<std::string>* warnings = nullptr);

} // namespace xrr::expansion
