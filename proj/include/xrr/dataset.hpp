#pragma once

#include <string>

namespace xrr::dataset {

struct DemoPaths {
    std::string corpus;
    std::string queries;
    std::string qrels;
    std::string doc_embeddings;
    std::string query_embeddings;
    std::string fixtures_oracle;    // reranker fixtures that sort relevant docs first
    std::string fixtures_identity;  // reranker fixtures that keep retrieval order
    std::string config;             // ready-to-run engine config (oracle fixtures)
};

/// Writes the bundled demo dataset into `dir`: 50 documents and 10
/// queries across two domains, 8-dimensional embeddings, qrels with
/// grades 2 and 1, and deterministic mock fixtures for captioning,
/// expansion, and reranking. Embedding values are quantized to float32
/// so in-memory vectors match the stored files exactly.
DemoPaths write_demo_dataset(const std::string& dir);

} // namespace xrr::dataset
