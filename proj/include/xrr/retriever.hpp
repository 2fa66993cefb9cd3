#pragma once

#include <map>
#include <string>
#include <vector>

#include "xrr/core.hpp"
#include "xrr/io.hpp"

namespace xrr {

/// Lowercases and splits on non-alphanumeric characters; no stemming,
/// no stopwords.
std::vector<std::string> tokenize(const std::string& text);

// ---------------------------------------------------------------------------
// Query encoders

class QueryEncoder {
public:
    virtual ~QueryEncoder() = default;
    virtual EmbeddingVector encode(const Query& query) const = 0;
};

/// Serves precomputed vectors keyed by query id.
class LookupEncoder : public QueryEncoder {
public:
    explicit LookupEncoder(io::EmbeddingTable table) : table_(std::move(table)) {}
    EmbeddingVector encode(const Query& query) const override;

private:
    io::EmbeddingTable table_;
};

/// Calls a remote endpoint with {"text": ...} and reads {"embedding": [...]}.
class RemoteEncoder : public QueryEncoder {
public:
    RemoteEncoder(std::string endpoint, int timeout_ms = 30000);
    EmbeddingVector encode(const Query& query) const override;

private:
    std::string endpoint_;
    int timeout_ms_;
};

// ---------------------------------------------------------------------------
// Dense index

/// Exact brute-force cosine search over unit-normalized vectors.
class DenseIndex {
public:
    /// Normalizes one vector per corpus document at build time; missing
    /// or zero-norm vectors and dimension mismatches are errors.
    static DenseIndex build(const Corpus& corpus, const io::EmbeddingTable& vectors);

    /// Top-k0 by cosine, score descending, ties by ascending doc id.
    RankedList search(const EmbeddingVector& query_vec, int k0,
                      const std::string& query_id) const;

    std::size_t size() const { return ids_.size(); }
    std::size_t dim() const { return dim_; }
    const std::vector<std::string>& ids() const { return ids_; }
    const EmbeddingVector& vector_for(std::size_t i) const { return vectors_[i]; }

private:
    std::vector<std::string> ids_;
    std::vector<EmbeddingVector> vectors_;  // unit-norm
    std::size_t dim_ = 0;
};

// ---------------------------------------------------------------------------
// BM25 index

/// Okapi BM25 with idf = ln(1 + (N - n + 0.5)/(n + 0.5)) and query term
/// deduplication (query term frequency weighting off).
class Bm25Index {
public:
    static Bm25Index build(const Corpus& corpus, double k1 = 0.9, double b = 0.4);

    /// Top-k0 matching documents by score, ties by ascending doc id.
    /// Queries with no indexed terms yield an empty list.
    RankedList search(const std::string& query_text, int k0,
                      const std::string& query_id) const;

    /// Okapi score of one document for the (deduplicated) query terms.
    double score(const std::string& doc_id, const std::string& query_text) const;

    std::size_t doc_count() const { return ids_.size(); }
    double avgdl() const { return avgdl_; }
    std::size_t doc_length(const std::string& doc_id) const;
    std::size_t doc_frequency(const std::string& term) const;
    double idf(const std::string& term) const;
    double k1() const { return k1_; }
    double b() const { return b_; }

    struct Posting {
        std::size_t doc;  // index into ids_
        int tf;
    };
    const std::vector<Posting>* postings(const std::string& term) const;
    const std::vector<std::string>& ids() const { return ids_; }

private:
    std::map<std::string, double> scores_for(const std::string& query_text) const;

    std::vector<std::string> ids_;
    std::vector<std::size_t> lengths_;
    std::map<std::string, std::size_t> index_of_;
    std::map<std::string, std::vector<Posting>> postings_;
    double avgdl_ = 0;
    double k1_ = 0.9;
    double b_ = 0.4;
};

} // namespace xrr
