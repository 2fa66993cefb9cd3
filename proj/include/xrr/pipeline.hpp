#pragma once

#include <memory>
#include <string>
#include <vector>

#include "xrr/config.hpp"
#include "xrr/core.hpp"
#include "xrr/eval.hpp"
#include "xrr/llm.hpp"

namespace xrr::pipeline {

/// Stage artifact locations under one output directory.
struct Artifacts {
    std::string captioned;     // queries with caption + combined
    std::string expanded;      // queries with expanded
    std::string retrieval;     // run, stage retrieval
    std::string permutations;  // per-pass rerank permutations
    std::string fused;         // run, stage fused
    std::string report_txt;
    std::string report_json;
    std::string manifest;
    std::string caption_cache;
    std::string negatives;
    std::string loss_trace;
    std::string index_stats;
};

Artifacts artifacts_for(const EngineConfig& config);

struct StageCounts {
    int caption_calls = 0;
    int caption_cache_hits = 0;
    int expand_calls = 0;
    int rerank_calls = 0;
};

/// Builds the configured backend and retry policy.
llm::LlmClient make_client(const EngineConfig& config);
llm::LlmClient make_client(const EngineConfig& config, std::shared_ptr<llm::Backend> backend);

// Stage functions: each reads its inputs from the configured or upstream
// paths, writes its artifact, and accumulates counts and warnings.
void run_caption_stage(const EngineConfig& config, const llm::LlmClient& client,
                       StageCounts& counts, std::vector<std::string>& warnings);
void run_expand_stage(const EngineConfig& config, const llm::LlmClient& client,
                      StageCounts& counts, std::vector<std::string>& warnings);
void run_retrieve_stage(const EngineConfig& config, std::vector<std::string>& warnings);
void run_rerank_stage(const EngineConfig& config, const llm::LlmClient& client,
                      StageCounts& counts, std::vector<std::string>& warnings);
void run_fuse_stage(const EngineConfig& config, std::vector<std::string>& warnings);
EvaluationReport run_eval_stage(const EngineConfig& config, const std::string& run_path,
                                std::vector<std::string>& warnings);

void run_index_stage(const EngineConfig& config);
void run_mine_stage(const EngineConfig& config, std::vector<std::string>& warnings);
void run_train_stage(const EngineConfig& config);

/// The run path eval should score: fused when reranking is on, else
/// retrieval.
std::string final_run_path(const EngineConfig& config);

void write_manifest(const EngineConfig& config, const std::string& command,
                    const StageCounts& counts, const std::vector<std::string>& warnings);

struct PipelineResult {
    EvaluationReport report;
    StageCounts counts;
    std::vector<std::string> warnings;
    Artifacts artifacts;
};

/// caption -> expand -> retrieve -> rerank -> fuse -> eval, honoring the
/// stage toggles, then writes the manifest.
PipelineResult run_pipeline(const EngineConfig& config);

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepMode { K0Grid, Ablation, Retrievers };

struct SweepRow {
    std::string label;
    EngineConfig config;
    EvaluationReport report;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::string text;  // rendered comparative report
    std::string json;
};

/// Runs the pipeline once per grid row into <out_dir>/<label>/, reusing
/// captions (cache) and expansions (shared staging per upstream
/// configuration) across rows. Writes sweep.txt and sweep.json.
SweepResult run_sweep(const EngineConfig& base, SweepMode mode,
                      std::vector<int> k0_grid = {20, 50, 100});

} // namespace xrr::pipeline
