#include "xrr/retriever.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "json.hpp"

#include "xrr/error.hpp"

using json = nlohmann::json;

namespace xrr {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

// ---------------------------------------------------------------------------
// Encoders

EmbeddingVector LookupEncoder::encode(const Query& query) const {
    auto it = table_.find(query.id);
    if (it == table_.end()) {
        throw FormatError("no precomputed vector for query '" + query.id + "'");
    }
    return it->second;
}

RemoteEncoder::RemoteEncoder(std::string endpoint, int timeout_ms)
    : endpoint_(std::move(endpoint)), timeout_ms_(timeout_ms) {
    if (endpoint_.empty()) throw ConfigError("remote encoder needs an endpoint URL");
}

EmbeddingVector RemoteEncoder::encode(const Query& query) const {
    std::size_t scheme_end = endpoint_.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("embed endpoint '" + endpoint_ + "' must include a scheme");
    }
    std::size_t path_start = endpoint_.find('/', scheme_end + 3);
    std::string host = path_start == std::string::npos ? endpoint_
                                                       : endpoint_.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : endpoint_.substr(path_start);

    httplib::Client client(host);
    client.set_connection_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
    client.set_read_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);

    json payload{{"text", query.retrieval_text()}};
    auto res = client.Post(path, payload.dump(), "application/json");
    if (!res) {
        throw TransientError("embed request failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw BackendError("embed endpoint returned status " + std::to_string(res->status));
    }
    json root = json::parse(res->body, nullptr, false);
    if (root.is_discarded() || !root.contains("embedding") || !root["embedding"].is_array()) {
        throw ProtocolError("embed endpoint returned no embedding array");
    }
    std::vector<double> values;
    for (const auto& v : root["embedding"]) {
        if (!v.is_number()) throw ProtocolError("embedding contains a non-numeric value");
        values.push_back(v.get<double>());
    }
    return EmbeddingVector(std::move(values));
}

// ---------------------------------------------------------------------------
// DenseIndex

DenseIndex DenseIndex::build(const Corpus& corpus, const io::EmbeddingTable& vectors) {
    if (corpus.empty()) throw FormatError("cannot build a dense index over an empty corpus");
    DenseIndex index;
    index.ids_.reserve(corpus.size());
    index.vectors_.reserve(corpus.size());
    for (const Document& doc : corpus.docs()) {
        auto it = vectors.find(doc.id);
        if (it == vectors.end()) {
            throw FormatError("no embedding for document '" + doc.id + "'");
        }
        if (index.dim_ == 0) {
            index.dim_ = it->second.dim();
        } else if (it->second.dim() != index.dim_) {
            throw FormatError("embedding for document '" + doc.id + "' has dimension " +
                              std::to_string(it->second.dim()) + ", index expects " +
                              std::to_string(index.dim_));
        }
        if (it->second.norm() == 0.0) {
            throw FormatError("embedding for document '" + doc.id + "' has zero norm");
        }
        index.ids_.push_back(doc.id);
        index.vectors_.push_back(it->second.normalized());
    }
    return index;
}

RankedList DenseIndex::search(const EmbeddingVector& query_vec, int k0,
                              const std::string& query_id) const {
    if (k0 < 1) throw ConfigError("retrieval depth must be at least 1");
    if (query_vec.dim() != dim_) {
        throw FormatError("query vector has dimension " + std::to_string(query_vec.dim()) +
                          ", index expects " + std::to_string(dim_));
    }
    EmbeddingVector unit = query_vec.normalized();

    std::vector<std::size_t> order(ids_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> scores(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        const EmbeddingVector& doc = vectors_[i];
        double dot = 0;
        for (std::size_t j = 0; j < dim_; ++j) dot += unit[j] * doc[j];
        scores[i] = dot;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return ids_[a] < ids_[b];
    });
    std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(k0), order.size());

    std::vector<ScoredDoc> entries;
    entries.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        entries.push_back({ids_[order[i]], scores[order[i]]});
    }
    return RankedList::from_ordered(query_id, Stage::Retrieval, std::move(entries));
}

// ---------------------------------------------------------------------------
// Bm25Index

Bm25Index Bm25Index::build(const Corpus& corpus, double k1, double b) {
    if (corpus.empty()) throw FormatError("cannot build a BM25 index over an empty corpus");
    if (k1 < 0) throw ConfigError("bm25 k1 must be non-negative");
    if (b < 0 || b > 1) throw ConfigError("bm25 b must be in [0, 1]");

    Bm25Index index;
    index.k1_ = k1;
    index.b_ = b;
    std::size_t total_len = 0;
    for (const Document& doc : corpus.docs()) {
        std::vector<std::string> terms = tokenize(doc.text);
        std::size_t doc_idx = index.ids_.size();
        index.ids_.push_back(doc.id);
        index.index_of_[doc.id] = doc_idx;
        index.lengths_.push_back(terms.size());
        total_len += terms.size();

        std::map<std::string, int> tf;
        for (const std::string& term : terms) ++tf[term];
        for (const auto& [term, count] : tf) {
            index.postings_[term].push_back({doc_idx, count});
        }
    }
    index.avgdl_ = static_cast<double>(total_len) / static_cast<double>(index.ids_.size());
    for (auto& [term, postings] : index.postings_) {
        std::sort(postings.begin(), postings.end(), [&](const Posting& a, const Posting& b2) {
            return index.ids_[a.doc] < index.ids_[b2.doc];
        });
    }
    return index;
}

double Bm25Index::idf(const std::string& term) const {
    double n = static_cast<double>(doc_frequency(term));
    double N = static_cast<double>(ids_.size());
    return std::log(1.0 + (N - n + 0.5) / (n + 0.5));
}

std::size_t Bm25Index::doc_frequency(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? 0 : it->second.size();
}

std::size_t Bm25Index::doc_length(const std::string& doc_id) const {
    auto it = index_of_.find(doc_id);
    if (it == index_of_.end()) throw FormatError("unknown document '" + doc_id + "'");
    return lengths_[it->second];
}

const std::vector<Bm25Index::Posting>* Bm25Index::postings(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? nullptr : &it->second;
}

std::map<std::string, double> Bm25Index::scores_for(const std::string& query_text) const {
    std::vector<std::string> terms = tokenize(query_text);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());

    std::map<std::string, double> scores;
    for (const std::string& term : terms) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        double term_idf = idf(term);
        for (const Posting& p : it->second) {
            double f = p.tf;
            double len = static_cast<double>(lengths_[p.doc]);
            double denom = f + k1_ * (1.0 - b_ + b_ * len / avgdl_);
            scores[ids_[p.doc]] += term_idf * f * (k1_ + 1.0) / denom;
        }
    }
    return scores;
}

double Bm25Index::score(const std::string& doc_id, const std::string& query_text) const {
    if (!index_of_.count(doc_id)) throw FormatError("unknown document '" + doc_id + "'");
    auto scores = scores_for(query_text);
    auto it = scores.find(doc_id);
    return it == scores.end() ? 0.0 : it->second;
}

RankedList Bm25Index::search(const std::string& query_text, int k0,
                             const std::string& query_id) const {
    if (k0 < 1) throw ConfigError("retrieval depth must be at least 1");
    auto scores = scores_for(query_text);

    std::vector<ScoredDoc> entries;
    entries.reserve(scores.size());
    for (const auto& [doc_id, s] : scores) entries.push_back({doc_id, s});
    std::sort(entries.begin(), entries.end(), [](const ScoredDoc& a, const ScoredDoc& b2) {
        if (a.score != b2.score) return a.score > b2.score;
        return a.doc_id < b2.doc_id;
    });
    if (entries.size() > static_cast<std::size_t>(k0)) {
        entries.resize(static_cast<std::size_t>(k0));
    }
    return RankedList::from_ordered(query_id, Stage::Retrieval, std::move(entries));
}

} // namespace xrr
