#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xrr/core.hpp"

namespace xrr::io {

// ---------------------------------------------------------------------------
// File helpers

std::string read_file(const std::string& path);

/// Writes to a temporary sibling path, then renames over the target.
void atomic_write_file(const std::string& path, const std::string& content);

std::uint64_t fnv1a64(std::string_view bytes);

/// FNV-1a digest of the file's bytes as 16 hex characters.
std::string file_digest(const std::string& path);

// ---------------------------------------------------------------------------
// Corpora, queries, qrels
//
// Corpus and query files are newline-delimited JSON records, one object per
// line. Qrels are whitespace-separated "query_id doc_id grade" triples.

Corpus load_corpus(const std::string& path);
void save_corpus(const Corpus& corpus, const std::string& path);

std::vector<Query> load_queries(const std::string& path);
void save_queries(const std::vector<Query>& queries, const std::string& path);

/// Later duplicate (query, doc) pairs overwrite earlier ones; each
/// overwrite appends a warning when a sink is given.
Qrels load_qrels(const std::string& path, std::vector<std::string>* warnings = nullptr);
void save_qrels(const Qrels& qrels, const std::string& path);

// ---------------------------------------------------------------------------
// Embeddings
//
// Binary layout: u32 count, u32 dim (little-endian), then count*dim
// float32 values in row-major order. Ids live in a sidecar text file
// (one id per line, record order), by default at <path>.ids.

using EmbeddingTable = std::map<std::string, EmbeddingVector>;

/// Loads and checks coverage: every corpus document must have a vector
/// and all vectors share one dimension.
EmbeddingTable load_embeddings(const std::string& path, const Corpus& corpus);

/// Same format, no coverage requirement (precomputed query vectors).
EmbeddingTable load_embedding_table(const std::string& path);

void save_embeddings(const std::string& path,
                     const std::vector<std::pair<std::string, EmbeddingVector>>& rows);

// ---------------------------------------------------------------------------
// Runs and stage artifacts

/// One JSON record per query: {"query_id", "stage", "entries": [[doc, score]...]}.
std::map<std::string, RankedList> load_run(const std::string& path);
void save_run(const std::map<std::string, RankedList>& run, const std::string& path);

struct PermutationRecord {
    std::string query_id;
    int pass = 1;
    std::vector<int> indices;
};

std::vector<PermutationRecord> load_permutations(const std::string& path);
void save_permutations(const std::vector<PermutationRecord>& records, const std::string& path);

struct NegativesRecord {
    std::string query_id;
    std::vector<std::string> negatives;
};

std::vector<NegativesRecord> load_negatives(const std::string& path);
void save_negatives(const std::vector<NegativesRecord>& records, const std::string& path);

/// Newline-delimited "step loss" pairs.
void save_loss_trace(const std::vector<double>& trace, const std::string& path);

// ---------------------------------------------------------------------------
// Caption cache
//
// Append-only JSONL journal {"query_id", "caption"}; the last record for
// an id wins on load. Reads may run concurrently; writes are serialized.

class CaptionCache {
public:
    /// In-memory cache; nothing persisted.
    CaptionCache() = default;

    /// Opens (and loads) the journal at `path`, creating it lazily.
    explicit CaptionCache(std::string path);

    CaptionCache(const CaptionCache&) = delete;
    CaptionCache& operator=(const CaptionCache&) = delete;

    std::optional<std::string> get(const std::string& query_id) const;
    void put(const std::string& query_id, const std::string& caption);

    std::size_t size() const;
    const std::string& path() const { return path_; }

private:
    std::string path_;  // empty = memory-only
    std::map<std::string, std::string> entries_;
    mutable std::mutex mutex_;
};

} // namespace xrr::io
