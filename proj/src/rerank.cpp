#include "xrr/rerank.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "xrr/error.hpp"

namespace xrr {

void Permutation::validate(int k0, int k1) const {
    if (indices.size() != static_cast<std::size_t>(std::min(k0, k1))) {
        throw FormatError("permutation has " + std::to_string(indices.size()) +
                          " indices, expected " + std::to_string(std::min(k0, k1)));
    }
    std::set<int> seen;
    for (int idx : indices) {
        if (idx < 1 || idx > k0) {
            throw FormatError("permutation index " + std::to_string(idx) + " outside [1, " +
                              std::to_string(k0) + "]");
        }
        if (!seen.insert(idx).second) {
            throw FormatError("permutation repeats index " + std::to_string(idx));
        }
    }
}

Permutation parse_permutation(const std::string& text, int k0, int k1) {
    if (k0 < 1) throw ConfigError("k0 must be at least 1");
    if (k1 < 1 || k1 > k0) throw ConfigError("k1 must be in [1, k0]");

    Permutation perm;
    std::set<int> seen;
    std::size_t i = 0;
    while (i < text.size() && perm.indices.size() < static_cast<std::size_t>(k1)) {
        if (text[i] != '[') {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        std::size_t digits_start = j;
        while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j])) &&
               j - digits_start < 9) {
            ++j;
        }
        std::size_t digits_end = j;
        while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (digits_end == digits_start || j >= text.size() || text[j] != ']') {
            ++i;
            continue;
        }
        int value = std::stoi(text.substr(digits_start, digits_end - digits_start));
        if (value >= 1 && value <= k0 && seen.insert(value).second) {
            perm.indices.push_back(value);
        }
        i = j + 1;
    }
    for (int idx = 1; idx <= k0 && perm.indices.size() < static_cast<std::size_t>(k1); ++idx) {
        if (seen.insert(idx).second) perm.indices.push_back(idx);
    }
    return perm;
}

std::string default_rerank_prompt() {
    return "You are ranking candidate documents for a technical query. First, identify "
           "the essential problem the query poses. Then reason step by step about each "
           "candidate document, judging how well it addresses that problem. Finally, "
           "output only the ranked list of the most relevant document indices, from most "
           "to least relevant, in the exact format [i] > [j] > [k]. Do not add any text "
           "after the ranked list.";
}

llm::CompletionRequest build_rerank_request(const Query& query, const RankedList& candidates,
                                            const Corpus& corpus, const PipelineConfig& config,
                                            int pass) {
    if (!query.expanded) {
        throw FormatError("query '" + query.id + "' has no expanded text to rerank with");
    }
    if (candidates.empty()) {
        throw FormatError("query '" + query.id + "' has no candidates to rerank");
    }
    int k1 = std::min<int>(config.k1, static_cast<int>(candidates.size()));

    std::string body = "Query: " + *query.expanded + "\n";
    if (config.rerank_include_caption && query.caption && !query.caption->empty()) {
        body += "Image Description: " + *query.caption + "\n";
    }
    body += "\nCandidate documents:\n";
    std::size_t budget = static_cast<std::size_t>(config.rerank_doc_chars);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const std::string& doc_id = candidates.entries()[i].doc_id;
        const Document* doc = corpus.find(doc_id);
        if (!doc) throw FormatError("candidate '" + doc_id + "' is not in the corpus");
        std::string text = doc->text.size() > budget ? doc->text.substr(0, budget) : doc->text;
        body += "[" + std::to_string(i + 1) + "] " + text + "\n";
    }
    body += "\nRank the " + std::to_string(k1) +
            " most relevant documents as [i] > [j] > ... and output nothing else.";

    llm::CompletionRequest request;
    request.messages.push_back(llm::Message::system(
        config.rerank_prompt.empty() ? default_rerank_prompt() : config.rerank_prompt));
    request.messages.push_back(llm::Message::user(std::move(body)));
    request.temperature = config.gen_temperature;
    request.top_p = config.gen_top_p;
    request.max_tokens = 1024;
    request.tag = "rerank";
    request.query_id = query.id;
    request.pass = pass;
    return request;
}

Permutation rerank_once(const Query& query, const RankedList& candidates, const Corpus& corpus,
                        const llm::LlmClient& client, const PipelineConfig& config, int pass,
                        std::vector<std::string>* warnings) {
    llm::CompletionRequest request = build_rerank_request(query, candidates, corpus, config, pass);
    int k0 = static_cast<int>(candidates.size());
    int k1 = std::min<int>(config.k1, k0);
    try {
        return parse_permutation(client.complete(request).text, k0, k1);
    } catch (const std::exception& e) {
        if (warnings) {
            warnings->push_back("rerank pass " + std::to_string(pass) + " for query '" +
                                query.id + "' fell back to retrieval order: " + e.what());
        }
        Permutation identity;
        for (int idx = 1; idx <= k1; ++idx) identity.indices.push_back(idx);
        return identity;
    }
}

RankedList rrf_fuse(const std::vector<Permutation>& permutations, const RankedList& candidates,
                    double k_rrf, int k1) {
    if (permutations.empty()) throw FormatError("RRF needs at least one permutation");
    if (k_rrf <= 0) throw ConfigError("k_rrf must be positive");
    if (k1 < 1) throw ConfigError("k1 must be at least 1");

    std::size_t n = candidates.size();
    // rank_of[t][idx] = 1-based rank of candidate index idx in pass t, 0 if absent.
    std::vector<std::vector<int>> rank_of(permutations.size(), std::vector<int>(n + 1, 0));
    for (std::size_t t = 0; t < permutations.size(); ++t) {
        const Permutation& perm = permutations[t];
        for (std::size_t r = 0; r < perm.indices.size(); ++r) {
            int idx = perm.indices[r];
            if (idx < 1 || idx > static_cast<int>(n)) {
                throw FormatError("permutation index " + std::to_string(idx) +
                                  " outside the candidate list");
            }
            rank_of[t][idx] = static_cast<int>(r) + 1;
        }
    }

    std::vector<double> fused(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < permutations.size(); ++t) {
            int rank = rank_of[t][i + 1];
            if (rank > 0) fused[i] += 1.0 / (static_cast<double>(rank) + k_rrf);
        }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    const auto& entries = candidates.entries();
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (fused[a] != fused[b]) return fused[a] > fused[b];
        if (entries[a].score != entries[b].score) return entries[a].score > entries[b].score;
        return entries[a].doc_id < entries[b].doc_id;
    });

    std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(k1), n);
    std::vector<ScoredDoc> out;
    out.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        out.push_back({entries[order[i]].doc_id, fused[order[i]]});
    }
    return RankedList::from_ordered(candidates.query_id(), Stage::Fused, std::move(out));
}

RankedList double_rerank(const Query& query, const RankedList& candidates, const Corpus& corpus,
                         const llm::LlmClient& client, const PipelineConfig& config,
                         std::vector<std::string>* warnings,
                         std::vector<Permutation>* passes_out) {
    if (candidates.empty()) {
        // BM25 legitimately retrieves nothing for out-of-vocabulary queries.
        return RankedList::from_ordered(query.id, Stage::Fused, {});
    }
    int t_passes = config.double_rerank_on ? config.passes : 1;
    int k0 = static_cast<int>(candidates.size());
    int k1 = std::min<int>(config.k1, k0);

    std::vector<llm::CompletionRequest> requests;
    requests.reserve(static_cast<std::size_t>(t_passes));
    for (int pass = 1; pass <= t_passes; ++pass) {
        requests.push_back(build_rerank_request(query, candidates, corpus, config, pass));
    }
    auto outcomes = client.run_batch(requests, config.max_concurrency);

    std::vector<Permutation> survivors;
    for (int pass = 1; pass <= t_passes; ++pass) {
        const llm::BatchOutcome& outcome = outcomes[static_cast<std::size_t>(pass - 1)];
        if (!outcome.ok()) {
            if (warnings) {
                warnings->push_back("rerank pass " + std::to_string(pass) + " for query '" +
                                    query.id + "' failed and was excluded: " + outcome.error);
            }
            continue;
        }
        survivors.push_back(parse_permutation(outcome.result->text, k0, k1));
    }
    if (passes_out) *passes_out = survivors;

    if (survivors.empty()) {
        if (warnings) {
            warnings->push_back("all rerank passes failed for query '" + query.id +
                                "'; keeping retrieval order");
        }
        std::vector<ScoredDoc> kept(candidates.entries().begin(),
                                    candidates.entries().begin() + k1);
        return RankedList::from_ordered(query.id, Stage::Fused, std::move(kept));
    }
    return rrf_fuse(survivors, candidates, config.k_rrf, k1);
}

} // namespace xrr
