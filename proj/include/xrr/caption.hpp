#pragma once

#include <string>
#include <vector>

#include "xrr/core.hpp"
#include "xrr/io.hpp"
#include "xrr/llm.hpp"

namespace xrr::caption {

/// Built-in caption prompt (system message); override via
/// PipelineConfig::caption_prompt.
std::string default_caption_prompt();

/// Joins question text and caption. Empty caption returns the text
/// unchanged; otherwise text, newline, "Image Description: ", caption.
std::string combine(const std::string& text, const std::string& caption);

/// Fills query.combined from query.text and query.caption. Empty
/// captions are normalized to absent.
Query combine_query(Query query);

/// Caption request for one image of a query. `pass` carries the image
/// index for multi-image queries (-1 for a single image).
llm::CompletionRequest build_request(const Query& query, const std::string& image_ref, int pass,
                                     const PipelineConfig& config);

/// Resolves the caption for one query: pre-supplied and cached captions
/// short-circuit; otherwise one backend call per image (joined with a
/// blank line), written through the cache. Throws on backend failure,
/// tagged with the query id. Also fills `combined`.
Query caption_query(Query query, const llm::LlmClient& client, io::CaptionCache& cache,
                    const PipelineConfig& config);

struct CaptionStats {
    int backend_calls = 0;
    int cache_hits = 0;
};

/// Batched captioning under the concurrency limit. A query whose backend
/// call fails gets a warning and proceeds caption-less. With
/// config.caption_on false, no calls are made and combined = text.
std::vector<Query> caption_all(std::vector<Query> queries, const llm::LlmClient& client,
                               io::CaptionCache& cache, const PipelineConfig& config,
                               std::vector<std::string>* warnings = nullptr,
                               CaptionStats* stats = nullptr);

} // namespace xrr::caption
