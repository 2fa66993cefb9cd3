#include "xrr/core.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace xrr {

void Corpus::add(Document doc) {
    if (doc.id.empty()) throw FormatError("document with empty id");
    if (doc.text.empty()) throw FormatError("document '" + doc.id + "' has empty text");
    if (index_.count(doc.id)) throw FormatError("duplicate document id '" + doc.id + "'");
    index_.emplace(doc.id, docs_.size());
    docs_.push_back(std::move(doc));
}

const Document* Corpus::find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &docs_[it->second];
}

const Document& Corpus::by_id(const std::string& id) const {
    const Document* doc = find(id);
    if (!doc) throw FormatError("unknown document id '" + id + "'");
    return *doc;
}

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw FormatError("embedding vector must be non-empty");
    for (double v : values_) {
        if (!std::isfinite(v)) throw FormatError("embedding vector contains a non-finite value");
    }
}

double EmbeddingVector::norm() const {
    double sum = 0.0;
    for (double v : values_) sum += v * v;
    return std::sqrt(sum);
}

EmbeddingVector EmbeddingVector::normalized() const {
    double n = norm();
    if (n == 0.0) throw FormatError("cannot normalize a zero-norm vector");
    std::vector<double> out(values_.size());
    for (std::size_t i = 0; i < values_.size(); ++i) out[i] = values_[i] / n;
    return EmbeddingVector(std::move(out));
}

double cosine_score(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw FormatError("cosine on mismatched dimensions (" + std::to_string(a.dim()) +
                          " vs " + std::to_string(b.dim()) + ")");
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) dot += a[i] * b[i];
    double na = a.norm();
    double nb = b.norm();
    if (na == 0.0 || nb == 0.0) throw FormatError("cosine on a zero-norm vector");
    return dot / (na * nb);
}

const char* stage_name(Stage stage) {
    switch (stage) {
        case Stage::Retrieval: return "retrieval";
        case Stage::Rerank: return "rerank";
        case Stage::Fused: return "fused";
    }
    return "retrieval";
}

Stage stage_from_name(const std::string& name) {
    if (name == "retrieval") return Stage::Retrieval;
    if (name == "rerank") return Stage::Rerank;
    if (name == "fused") return Stage::Fused;
    throw FormatError("unknown ranked-list stage '" + name + "'");
}

namespace {

void check_no_duplicates(const std::vector<ScoredDoc>& entries) {
    std::unordered_set<std::string> seen;
    seen.reserve(entries.size());
    for (const auto& e : entries) {
        if (e.doc_id.empty()) throw FormatError("ranked list entry with empty doc id");
        if (!seen.insert(e.doc_id).second) {
            throw FormatError("duplicate doc id '" + e.doc_id + "' in ranked list");
        }
    }
}

} // namespace

RankedList RankedList::sorted(std::string query_id, Stage stage, std::vector<ScoredDoc> entries) {
    check_no_duplicates(entries);
    std::sort(entries.begin(), entries.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
    RankedList list;
    list.query_id_ = std::move(query_id);
    list.stage_ = stage;
    list.entries_ = std::move(entries);
    return list;
}

RankedList RankedList::from_ordered(std::string query_id, Stage stage, std::vector<ScoredDoc> entries) {
    check_no_duplicates(entries);
    for (std::size_t i = 1; i < entries.size(); ++i) {
        if (entries[i].score > entries[i - 1].score) {
            throw FormatError("ranked list scores must be non-increasing");
        }
    }
    RankedList list;
    list.query_id_ = std::move(query_id);
    list.stage_ = stage;
    list.entries_ = std::move(entries);
    return list;
}

bool RankedList::contains(const std::string& doc_id) const {
    for (const auto& e : entries_) {
        if (e.doc_id == doc_id) return true;
    }
    return false;
}

RankedList RankedList::truncated(std::size_t k) const {
    RankedList list;
    list.query_id_ = query_id_;
    list.stage_ = stage_;
    list.entries_.assign(entries_.begin(),
                         entries_.begin() + std::min(k, entries_.size()));
    return list;
}

bool Qrels::set(const std::string& query_id, const std::string& doc_id, int grade) {
    if (grade < 0) {
        throw FormatError("negative relevance grade for (" + query_id + ", " + doc_id + ")");
    }
    auto& per_query = by_query_[query_id];
    bool existed = per_query.count(doc_id) > 0;
    per_query[doc_id] = grade;
    return existed;
}

int Qrels::grade(const std::string& query_id, const std::string& doc_id) const {
    auto it = by_query_.find(query_id);
    if (it == by_query_.end()) return 0;
    auto jt = it->second.find(doc_id);
    return jt == it->second.end() ? 0 : jt->second;
}

bool Qrels::has_judgments(const std::string& query_id) const {
    auto it = by_query_.find(query_id);
    return it != by_query_.end() && !it->second.empty();
}

const std::map<std::string, int>& Qrels::judgments_for(const std::string& query_id) const {
    static const std::map<std::string, int> empty;
    auto it = by_query_.find(query_id);
    return it == by_query_.end() ? empty : it->second;
}

std::size_t Qrels::pair_count() const {
    std::size_t n = 0;
    for (const auto& [qid, judgments] : by_query_) n += judgments.size();
    return n;
}

RetrieverKind retriever_kind_from_name(const std::string& name) {
    if (name == "dense") return RetrieverKind::Dense;
    if (name == "bm25") return RetrieverKind::Bm25;
    throw ConfigError("unknown retriever '" + name + "' (expected dense or bm25)");
}

const char* retriever_kind_name(RetrieverKind kind) {
    return kind == RetrieverKind::Dense ? "dense" : "bm25";
}

BackendKind backend_kind_from_name(const std::string& name) {
    if (name == "wire") return BackendKind::Wire;
    if (name == "mock") return BackendKind::Mock;
    throw ConfigError("unknown backend '" + name + "' (expected wire or mock)");
}

const char* backend_kind_name(BackendKind kind) {
    return kind == BackendKind::Wire ? "wire" : "mock";
}

void PipelineConfig::validate() const {
    if (k0 < 1) throw ConfigError("k0 must be >= 1");
    if (k1 < 1) throw ConfigError("k1 must be >= 1");
    if (k1 > k0) throw ConfigError("k1 must not exceed k0");
    if (passes < 1) throw ConfigError("passes must be >= 1");
    if (k_rrf <= 0.0) throw ConfigError("k_rrf must be positive");
    if (tau <= 0.0) throw ConfigError("tau must be positive");
    if (hard_negatives < 0) throw ConfigError("hard_negatives must be >= 0");
    if (max_concurrency < 1) throw ConfigError("max_concurrency must be >= 1");
    if (max_expansion_tokens < 1) throw ConfigError("max_expansion_tokens must be >= 1");
    if (caption_temperature < 0.0) throw ConfigError("caption_temperature must be >= 0");
    if (gen_temperature < 0.0) throw ConfigError("gen_temperature must be >= 0");
    if (gen_top_p <= 0.0 || gen_top_p > 1.0) throw ConfigError("gen_top_p must be in (0, 1]");
    if (retry_attempts < 1) throw ConfigError("retry_attempts must be >= 1");
    if (rerank_doc_chars < 1) throw ConfigError("rerank_doc_chars must be >= 1");
    if (bm25_k1 < 0.0) throw ConfigError("bm25_k1 must be >= 0");
    if (bm25_b < 0.0 || bm25_b > 1.0) throw ConfigError("bm25_b must be in [0, 1]");
}

} // namespace xrr
