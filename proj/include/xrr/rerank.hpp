#pragma once

#include <string>
#include <vector>

#include "xrr/core.hpp"
#include "xrr/llm.hpp"

namespace xrr {

/// 1-based positions into the retrieved candidate list, length K1,
/// distinct, each within [1, K0].
struct Permutation {
    std::vector<int> indices;

    std::size_t size() const { return indices.size(); }

    /// Throws FormatError when the invariants do not hold.
    void validate(int k0, int k1) const;
};

/// Extracts bracketed integers in order of appearance, drops duplicates
/// (first wins) and out-of-range values, fills any shortfall with unused
/// candidates in retrieval order, truncates to k1. Total: never fails.
Permutation parse_permutation(const std::string& text, int k0, int k1);

/// Built-in rerank prompt (system message); override via
/// PipelineConfig::rerank_prompt.
std::string default_rerank_prompt();

/// Rerank request for one pass: the expanded query plus the candidates
/// labeled [1]..[K0], each truncated to config.rerank_doc_chars.
llm::CompletionRequest build_rerank_request(const Query& query, const RankedList& candidates,
                                            const Corpus& corpus, const PipelineConfig& config,
                                            int pass);

/// One reranking pass. Backend failure falls back to the identity
/// permutation (retrieval order) with a warning.
Permutation rerank_once(const Query& query, const RankedList& candidates, const Corpus& corpus,
                        const llm::LlmClient& client, const PipelineConfig& config, int pass,
                        std::vector<std::string>* warnings = nullptr);

/// Reciprocal rank fusion of the passes over one candidate list: each
/// document scores sum over passes of 1/(rank + k_rrf), absent passes
/// contributing nothing. Top-k1 by fused score; ties broken by original
/// retrieval score descending, then ascending doc id.
RankedList rrf_fuse(const std::vector<Permutation>& permutations, const RankedList& candidates,
                    double k_rrf, int k1);

/// T independent passes (concurrent under config.max_concurrency) fused
/// with rrf_fuse. Failed passes are excluded with a warning; if every
/// pass fails, falls back to retrieval order.
RankedList double_rerank(const Query& query, const RankedList& candidates, const Corpus& corpus,
                         const llm::LlmClient& client, const PipelineConfig& config,
                         std::vector<std::string>* warnings = nullptr,
                         std::vector<Permutation>* passes_out = nullptr);

} // namespace xrr
