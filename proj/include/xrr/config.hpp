#pragma once

#include <string>
#include <vector>

#include "xrr/core.hpp"

namespace xrr {

/// Input and output locations for one engine run.
struct RunPaths {
    std::string corpus;            // JSONL documents
    std::string queries;           // JSONL queries
    std::string qrels;             // "qid did grade" triples (optional for non-eval stages)
    std::string doc_embeddings;    // binary f32 table + .ids sidecar
    std::string query_embeddings;  // binary f32 table keyed by query id
    std::string fixtures;          // mock backend fixture JSONL
    std::string caption_cache;     // caption journal (optional)
    std::string out_dir = "out";   // stage artifacts land here
};

/// Settings for the toy encoder trainer.
struct ToyTrainerConfig {
    int dim = 8;
    int steps = 50;
    double tau = 0.1;
    double learning_rate = 0.05;
    int batch_size = 4;
    std::uint64_t seed = 17;
};

struct EngineConfig {
    PipelineConfig pipeline;
    RunPaths paths;
    ToyTrainerConfig trainer;

    void validate() const;
};

/// Parses a JSON config file. Unknown keys are errors; missing keys keep
/// their defaults. Sections: "pipeline", "paths", "trainer".
EngineConfig load_engine_config(const std::string& path);

/// Applies the same key schema to an in-memory JSON string.
EngineConfig parse_engine_config(const std::string& text, const std::string& origin);

/// Serializes the full effective configuration (all keys, sorted) for
/// inclusion in run manifests.
std::string engine_config_to_json(const EngineConfig& config);

} // namespace xrr
