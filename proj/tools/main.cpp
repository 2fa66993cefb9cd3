#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "xrr/config.hpp"
#include "xrr/dataset.hpp"
#include "xrr/error.hpp"
#include "xrr/io.hpp"
#include "xrr/pipeline.hpp"

namespace fs = std::filesystem;
using namespace xrr;

namespace {

struct SharedOptions {
    std::string config_path;
    std::optional<int> k0;
    std::optional<int> k1;
    std::optional<int> passes;
    std::optional<int> k_rrf;
    std::optional<std::string> retriever;
    std::optional<std::string> backend;
    bool no_caption = false;
    bool no_expand = false;
    bool no_rerank = false;
    std::optional<std::string> corpus;
    std::optional<std::string> queries;
    std::optional<std::string> qrels;
    std::optional<std::string> doc_embeddings;
    std::optional<std::string> query_embeddings;
    std::optional<std::string> fixtures;
    std::optional<std::string> caption_cache;
    std::optional<std::string> out_dir;
};

void add_shared_options(CLI::App* cmd, SharedOptions& opts) {
    cmd->add_option("-c,--config", opts.config_path, "JSON configuration file");
    cmd->add_option("--k0", opts.k0, "retrieval depth fed to the reranker");
    cmd->add_option("--k1", opts.k1, "final ranked depth");
    cmd->add_option("--passes", opts.passes, "independent rerank passes to fuse");
    cmd->add_option("--k-rrf", opts.k_rrf, "reciprocal rank fusion constant");
    cmd->add_option("--retriever", opts.retriever, "retriever kind (dense|bm25)");
    cmd->add_option("--backend", opts.backend, "LLM backend (mock|wire)");
    cmd->add_flag("--no-caption", opts.no_caption, "skip captioning (raw question only)");
    cmd->add_flag("--no-expand", opts.no_expand, "skip query expansion");
    cmd->add_flag("--no-rerank", opts.no_rerank, "skip reranking and fusion");
    cmd->add_option("--corpus", opts.corpus, "corpus JSONL path");
    cmd->add_option("--queries", opts.queries, "queries JSONL path");
    cmd->add_option("--qrels", opts.qrels, "qrels path");
    cmd->add_option("--doc-embeddings", opts.doc_embeddings, "document embeddings path");
    cmd->add_option("--query-embeddings", opts.query_embeddings, "query embeddings path");
    cmd->add_option("--fixtures", opts.fixtures, "mock backend fixture path");
    cmd->add_option("--caption-cache", opts.caption_cache, "caption cache path");
    cmd->add_option("--out-dir", opts.out_dir, "output directory");
}

// Precedence: flag > file > built-in default.
EngineConfig resolve_config(const SharedOptions& opts) {
    EngineConfig config;
    if (!opts.config_path.empty()) {
        config = parse_engine_config(io::read_file(opts.config_path), opts.config_path);
    }
    if (opts.k0) config.pipeline.k0 = *opts.k0;
    if (opts.k1) config.pipeline.k1 = *opts.k1;
    if (opts.passes) config.pipeline.passes = *opts.passes;
    if (opts.k_rrf) config.pipeline.k_rrf = *opts.k_rrf;
    if (opts.retriever) config.pipeline.retriever = retriever_kind_from_name(*opts.retriever);
    if (opts.backend) config.pipeline.backend = backend_kind_from_name(*opts.backend);
    if (opts.no_caption) config.pipeline.caption_on = false;
    if (opts.no_expand) config.pipeline.expand_on = false;
    if (opts.no_rerank) config.pipeline.rerank_on = false;
    if (opts.corpus) config.paths.corpus = *opts.corpus;
    if (opts.queries) config.paths.queries = *opts.queries;
    if (opts.qrels) config.paths.qrels = *opts.qrels;
    if (opts.doc_embeddings) config.paths.doc_embeddings = *opts.doc_embeddings;
    if (opts.query_embeddings) config.paths.query_embeddings = *opts.query_embeddings;
    if (opts.fixtures) config.paths.fixtures = *opts.fixtures;
    if (opts.caption_cache) config.paths.caption_cache = *opts.caption_cache;
    if (opts.out_dir) config.paths.out_dir = *opts.out_dir;
    config.validate();
    return config;
}

int fail(const std::string& kind, const std::string& detail) {
    std::cerr << "error: " << kind << ": " << detail << "\n";
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"expand-retrieve-rerank pipeline for multimodal-to-text retrieval"};
    app.require_subcommand(1);

    SharedOptions opts;
    std::string eval_run_path;
    std::string sweep_mode = "ablation";
    std::vector<int> k0_grid{20, 50, 100};
    std::string demo_dir = "data";

    CLI::App* cmd_caption = app.add_subcommand("caption", "caption query images");
    CLI::App* cmd_expand = app.add_subcommand("expand", "expand combined queries");
    CLI::App* cmd_index = app.add_subcommand("index", "build the retrieval index and report stats");
    CLI::App* cmd_retrieve = app.add_subcommand("retrieve", "run first-stage retrieval");
    CLI::App* cmd_rerank = app.add_subcommand("rerank", "run listwise rerank passes");
    CLI::App* cmd_fuse = app.add_subcommand("fuse", "fuse rerank passes with RRF");
    CLI::App* cmd_eval = app.add_subcommand("eval", "score a run against qrels");
    CLI::App* cmd_pipeline = app.add_subcommand("pipeline", "run every stage end to end");
    CLI::App* cmd_mine = app.add_subcommand("mine-negatives", "mine BM25 hard negatives");
    CLI::App* cmd_train = app.add_subcommand("train-toy", "contrastive training demo");
    CLI::App* cmd_sweep = app.add_subcommand("sweep", "run a comparison grid");
    CLI::App* cmd_demo = app.add_subcommand("make-demo", "generate the bundled demo dataset");

    for (CLI::App* cmd : {cmd_caption, cmd_expand, cmd_index, cmd_retrieve, cmd_rerank, cmd_fuse,
                          cmd_eval, cmd_pipeline, cmd_mine, cmd_train, cmd_sweep}) {
        add_shared_options(cmd, opts);
    }
    cmd_eval->add_option("--run", eval_run_path, "run file to score (default: pipeline output)");
    cmd_sweep->add_option("--mode", sweep_mode, "k0|ablation|retrievers")
        ->check(CLI::IsMember({"k0", "ablation", "retrievers"}));
    cmd_sweep->add_option("--k0-grid", k0_grid, "depths for --mode k0");
    cmd_demo->add_option("--dir", demo_dir, "output directory for the dataset");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_demo->parsed()) {
            dataset::DemoPaths paths = dataset::write_demo_dataset(demo_dir);
            EngineConfig config = parse_engine_config(io::read_file(paths.config), paths.config);
            EngineConfig manifest_config = config;
            manifest_config.paths.out_dir = demo_dir;
            pipeline::write_manifest(manifest_config, "make-demo", {}, {});
            std::cout << "demo dataset written to " << demo_dir << "\n";
            return 0;
        }

        EngineConfig config = resolve_config(opts);
        pipeline::StageCounts counts;
        std::vector<std::string> warnings;
        fs::create_directories(config.paths.out_dir);

        if (cmd_caption->parsed()) {
            llm::LlmClient client = pipeline::make_client(config);
            pipeline::run_caption_stage(config, client, counts, warnings);
            pipeline::write_manifest(config, "caption", counts, warnings);
        } else if (cmd_expand->parsed()) {
            llm::LlmClient client = pipeline::make_client(config);
            pipeline::run_expand_stage(config, client, counts, warnings);
            pipeline::write_manifest(config, "expand", counts, warnings);
        } else if (cmd_index->parsed()) {
            pipeline::run_index_stage(config);
            pipeline::write_manifest(config, "index", counts, warnings);
        } else if (cmd_retrieve->parsed()) {
            pipeline::run_retrieve_stage(config, warnings);
            pipeline::write_manifest(config, "retrieve", counts, warnings);
        } else if (cmd_rerank->parsed()) {
            llm::LlmClient client = pipeline::make_client(config);
            pipeline::run_rerank_stage(config, client, counts, warnings);
            pipeline::write_manifest(config, "rerank", counts, warnings);
        } else if (cmd_fuse->parsed()) {
            pipeline::run_fuse_stage(config, warnings);
            pipeline::write_manifest(config, "fuse", counts, warnings);
        } else if (cmd_eval->parsed()) {
            std::string run_path =
                eval_run_path.empty() ? pipeline::final_run_path(config) : eval_run_path;
            EvaluationReport report = pipeline::run_eval_stage(config, run_path, warnings);
            pipeline::write_manifest(config, "eval", counts, warnings);
            std::cout << render_report_text(report);
        } else if (cmd_pipeline->parsed()) {
            pipeline::PipelineResult result = pipeline::run_pipeline(config);
            std::cout << render_report_text(result.report);
        } else if (cmd_mine->parsed()) {
            pipeline::run_mine_stage(config, warnings);
            pipeline::write_manifest(config, "mine-negatives", counts, warnings);
        } else if (cmd_train->parsed()) {
            pipeline::run_train_stage(config);
            pipeline::write_manifest(config, "train-toy", counts, warnings);
            std::cout << "loss trace written to " << config.paths.out_dir << "/loss_trace.txt\n";
        } else if (cmd_sweep->parsed()) {
            pipeline::SweepMode mode = sweep_mode == "k0" ? pipeline::SweepMode::K0Grid
                                       : sweep_mode == "retrievers"
                                           ? pipeline::SweepMode::Retrievers
                                           : pipeline::SweepMode::Ablation;
            pipeline::SweepResult result = pipeline::run_sweep(config, mode, k0_grid);
            std::cout << result.text;
        }
        for (const std::string& warning : warnings) std::cerr << "warning: " << warning << "\n";
        return 0;
    } catch (const ConfigError& e) {
        return fail("config", e.what());
    } catch (const FormatError& e) {
        return fail("format", e.what());
    } catch (const IoError& e) {
        return fail("io", e.what());
    } catch (const ProtocolError& e) {
        return fail("protocol", e.what());
    } catch (const TransientError& e) {
        return fail("backend", e.what());
    } catch (const BackendError& e) {
        return fail("backend", e.what());
    } catch (const Error& e) {
        return fail("runtime", e.what());
    } catch (const std::exception& e) {
        return fail("internal", e.what());
    }
}
