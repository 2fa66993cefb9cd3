#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "xrr/error.hpp"

namespace xrr {

/// A query flowing through the pipeline. `text` is the raw question;
/// `caption` / `combined` / `expanded` are filled in by successive stages.
struct Query {
    std::string id;
    std::string text;
    std::vector<std::string> image_refs;  // opaque paths/URIs, never decoded
    std::optional<std::string> caption;   // textual description of the image(s)
    std::optional<std::string> combined;  // text (+ "Image Description: " caption)
    std::optional<std::string> expanded;  // elaborated retrieval query
    std::string domain;                   // empty = untagged

    /// Best text available for text-driven retrieval: expanded, else
    /// combined, else the raw question.
    const std::string& retrieval_text() const {
        if (expanded && !expanded->empty()) return *expanded;
        if (combined && !combined->empty()) return *combined;
        return text;
    }
};

struct Document {
    std::string id;
    std::string text;
    std::string domain;  // optional tag, empty = untagged
};

/// Ordered collection of documents with unique non-empty ids.
class Corpus {
public:
    Corpus() = default;

    /// Throws FormatError on empty id/text or duplicate id.
    void add(Document doc);

    std::size_t size() const { return docs_.size(); }
    bool empty() const { return docs_.empty(); }
    const Document& at(std::size_t i) const { return docs_.at(i); }
    const std::vector<Document>& docs() const { return docs_; }

    bool contains(const std::string& id) const { return index_.count(id) > 0; }
    const Document* find(const std::string& id) const;
    /// Throws FormatError if the id is unknown.
    const Document& by_id(const std::string& id) const;

private:
    std::vector<Document> docs_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Fixed-length real vector; all values finite.
class EmbeddingVector {
public:
    EmbeddingVector() = default;
    /// Throws FormatError on empty or non-finite input.
    explicit EmbeddingVector(std::vector<double> values);

    std::size_t dim() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const { return values_; }

    double norm() const;
    /// Throws FormatError on zero norm.
    EmbeddingVector normalized() const;

    bool operator==(const EmbeddingVector& other) const { return values_ == other.values_; }

private:
    std::vector<double> values_;
};

/// Cosine similarity dot(a,b)/(|a||b|). Throws FormatError on dimension
/// mismatch or zero-norm input.
double cosine_score(const EmbeddingVector& a, const EmbeddingVector& b);

enum class Stage { Retrieval, Rerank, Fused };

const char* stage_name(Stage stage);
Stage stage_from_name(const std::string& name);

struct ScoredDoc {
    std::string doc_id;
    double score;
};

/// An ordered (doc_id, score) list for one query. Scores are
/// non-increasing and doc ids unique; construction enforces both.
class RankedList {
public:
    RankedList() = default;

    /// Sorts entries canonically (score descending, ties by ascending
    /// doc id). Throws FormatError on duplicate ids.
    static RankedList sorted(std::string query_id, Stage stage, std::vector<ScoredDoc> entries);

    /// Keeps the given order. Throws FormatError on duplicate ids or
    /// increasing scores. Used by stages with their own tie rules (RRF).
    static RankedList from_ordered(std::string query_id, Stage stage, std::vector<ScoredDoc> entries);

    const std::string& query_id() const { return query_id_; }
    Stage stage() const { return stage_; }
    const std::vector<ScoredDoc>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    bool contains(const std::string& doc_id) const;
    RankedList truncated(std::size_t k) const;

private:
    std::string query_id_;
    Stage stage_ = Stage::Retrieval;
    std::vector<ScoredDoc> entries_;
};

/// Graded relevance judgments. Absent pairs mean grade 0.
class Qrels {
public:
    /// Throws FormatError on negative grade. Returns true if the pair
    /// already had a judgment (overwrite).
    bool set(const std::string& query_id, const std::string& doc_id, int grade);

    int grade(const std::string& query_id, const std::string& doc_id) const;
    bool has_judgments(const std::string& query_id) const;

    /// All judged (doc_id, grade) pairs for one query; empty map if none.
    const std::map<std::string, int>& judgments_for(const std::string& query_id) const;

    std::size_t query_count() const { return by_query_.size(); }
    std::size_t pair_count() const;
    const std::map<std::string, std::map<std::string, int>>& all() const { return by_query_; }

private:
    std::map<std::string, std::map<std::string, int>> by_query_;
};

enum class RetrieverKind { Dense, Bm25 };
enum class BackendKind { Wire, Mock };

RetrieverKind retriever_kind_from_name(const std::string& name);
const char* retriever_kind_name(RetrieverKind kind);
BackendKind backend_kind_from_name(const std::string& name);
const char* backend_kind_name(BackendKind kind);

/// Every pipeline constant plus stage toggles and backend selection.
struct PipelineConfig {
    int k0 = 100;        // retrieval depth fed to the reranker
    int k1 = 10;         // final ranked depth
    int passes = 5;      // independent reranking passes (T)
    double k_rrf = 60.0; // RRF smoothing constant
    double tau = 0.02;   // contrastive temperature
    int hard_negatives = 7;

    double caption_temperature = 0.0;
    double gen_temperature = 0.8;
    double gen_top_p = 0.8;
    int max_expansion_tokens = 2048;
    int max_concurrency = 20;
    int retry_attempts = 3;

    bool caption_on = true;
    bool expand_on = true;
    bool rerank_on = true;
    bool double_rerank_on = true;

    RetrieverKind retriever = RetrieverKind::Dense;
    BackendKind backend = BackendKind::Mock;

    // Prompt template overrides; empty selects the built-in template.
    std::string caption_prompt;
    std::string expansion_prompt;
    std::string rerank_prompt;
    bool rerank_include_caption = false;
    int rerank_doc_chars = 1000;  // per-document budget in the rerank prompt

    double bm25_k1 = 0.9;
    double bm25_b = 0.4;

    // Wire backend settings.
    std::string api_base = "https://api.openai.com/v1";
    std::string model = "gpt-4o";
    std::string api_key_env = "OPENAI_API_KEY";
    int request_timeout_ms = 120000;

    // Remote query encoder; empty selects id-keyed lookup of
    // precomputed query vectors.
    std::string embed_endpoint;

    /// Number of reranking passes actually run under the toggles.
    int effective_passes() const {
        if (!rerank_on) return 0;
        return double_rerank_on ? passes : 1;
    }

    /// Throws ConfigError on violated invariants.
    void validate() const;
};

} // namespace xrr
