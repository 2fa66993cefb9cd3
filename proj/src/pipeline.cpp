#include "xrr/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <random>

#include "json.hpp"

#include "xrr/caption.hpp"
#include "xrr/dataset.hpp"
#include "xrr/error.hpp"
#include "xrr/expand.hpp"
#include "xrr/io.hpp"
#include "xrr/rerank.hpp"
#include "xrr/retriever.hpp"
#include "xrr/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace xrr::pipeline {

Artifacts artifacts_for(const EngineConfig& config) {
    const std::string& out = config.paths.out_dir;
    Artifacts a;
    a.captioned = out + "/captioned.jsonl";
    a.expanded = out + "/expanded.jsonl";
    a.retrieval = out + "/retrieval.jsonl";
    a.permutations = out + "/permutations.jsonl";
    a.fused = out + "/fused.jsonl";
    a.report_txt = out + "/report.txt";
    a.report_json = out + "/report.json";
    a.manifest = out + "/manifest.json";
    a.caption_cache = config.paths.caption_cache.empty() ? out + "/caption_cache.jsonl"
                                                         : config.paths.caption_cache;
    a.negatives = out + "/negatives.jsonl";
    a.loss_trace = out + "/loss_trace.txt";
    a.index_stats = out + "/index_stats.json";
    return a;
}

llm::LlmClient make_client(const EngineConfig& config, std::shared_ptr<llm::Backend> backend) {
    llm::RetryPolicy retry;
    retry.attempts = config.pipeline.retry_attempts;
    retry.jitter_seed = 0x5eedf00d;
    return llm::LlmClient(std::move(backend), retry);
}

llm::LlmClient make_client(const EngineConfig& config) {
    std::shared_ptr<llm::Backend> backend;
    if (config.pipeline.backend == BackendKind::Mock) {
        llm::FixtureStore fixtures;
        if (!config.paths.fixtures.empty()) {
            fixtures = llm::FixtureStore::load(config.paths.fixtures);
        }
        backend = std::make_shared<llm::MockBackend>(std::move(fixtures));
    } else {
        llm::WireSettings settings;
        settings.api_base = config.pipeline.api_base;
        settings.model = config.pipeline.model;
        settings.api_key_env = config.pipeline.api_key_env;
        settings.timeout_ms = config.pipeline.request_timeout_ms;
        backend = std::make_shared<llm::WireBackend>(std::move(settings));
    }
    return make_client(config, std::move(backend));
}

namespace {

/// Per-stage warning journal, so chained commands and the one-shot
/// pipeline see the same upstream history.
void write_stage_warnings(const EngineConfig& config, const std::string& stage,
                          const std::vector<std::string>& warnings) {
    std::string out;
    for (const std::string& warning : warnings) out += warning + "\n";
    io::atomic_write_file(config.paths.out_dir + "/warnings_" + stage + ".log", out);
}

int count_upstream_warnings(const EngineConfig& config) {
    int count = 0;
    for (const char* stage : {"caption", "expand", "retrieve", "rerank", "fuse"}) {
        fs::path path = config.paths.out_dir + "/warnings_" + std::string(stage) + ".log";
        if (!fs::exists(path)) continue;
        std::string bytes = io::read_file(path.string());
        count += static_cast<int>(std::count(bytes.begin(), bytes.end(), '\n'));
    }
    return count;
}

void reset_stage_journals(const std::string& out_dir) {
    for (const char* stage : {"caption", "expand", "retrieve", "rerank", "fuse"}) {
        fs::remove(fs::path(out_dir) / ("warnings_" + std::string(stage) + ".log"));
    }
}

/// Fail before any backend call is spent if a required input is absent.
void preflight_inputs(const EngineConfig& config) {
    std::vector<std::string> required{config.paths.corpus, config.paths.queries,
                                      config.paths.qrels};
    if (config.pipeline.retriever == RetrieverKind::Dense) {
        required.push_back(config.paths.doc_embeddings);
        if (config.pipeline.embed_endpoint.empty()) {
            required.push_back(config.paths.query_embeddings);
        }
    }
    if (config.pipeline.backend == BackendKind::Mock && !config.paths.fixtures.empty()) {
        required.push_back(config.paths.fixtures);
    }
    for (const std::string& path : required) {
        if (path.empty()) continue;
        if (!fs::exists(path)) throw IoError("missing input file '" + path + "'");
    }
}

} // namespace

void run_caption_stage(const EngineConfig& config, const llm::LlmClient& client,
                       StageCounts& counts, std::vector<std::string>& warnings) {
    Artifacts artifacts = artifacts_for(config);
    std::vector<Query> queries = io::load_queries(config.paths.queries);
    io::CaptionCache cache(artifacts.caption_cache);
    caption::CaptionStats stats;
    std::vector<std::string> stage_warnings;
    queries = caption::caption_all(std::move(queries), client, cache, config.pipeline,
                                   &stage_warnings, &stats);
    counts.caption_calls += stats.backend_calls;
    counts.caption_cache_hits += stats.cache_hits;
    io::save_queries(queries, artifacts.captioned);
    write_stage_warnings(config, "caption", stage_warnings);
    warnings.insert(warnings.end(), stage_warnings.begin(), stage_warnings.end());
}

void run_expand_stage(const EngineConfig& config, const llm::LlmClient& client,
                      StageCounts& counts, std::vector<std::string>& warnings) {
    Artifacts artifacts = artifacts_for(config);
    std::vector<Query> queries = io::load_queries(artifacts.captioned);
    std::vector<std::string> stage_warnings;
    queries = expansion::expand_all(std::move(queries), client, config.pipeline, &stage_warnings);
    if (config.pipeline.expand_on) counts.expand_calls += static_cast<int>(queries.size());
    io::save_queries(queries, artifacts.expanded);
    write_stage_warnings(config, "expand", stage_warnings);
    warnings.insert(warnings.end(), stage_warnings.begin(), stage_warnings.end());
}

void run_retrieve_stage(const EngineConfig& config, std::vector<std::string>& warnings) {
    Artifacts artifacts = artifacts_for(config);
    Corpus corpus = io::load_corpus(config.paths.corpus);
    std::vector<Query> queries = io::load_queries(artifacts.expanded);
    std::vector<std::string> stage_warnings;

    std::map<std::string, RankedList> run;
    if (config.pipeline.retriever == RetrieverKind::Dense) {
        io::EmbeddingTable doc_vectors =
            io::load_embeddings(config.paths.doc_embeddings, corpus);
        DenseIndex index = DenseIndex::build(corpus, doc_vectors);
        std::unique_ptr<QueryEncoder> encoder;
        if (!config.pipeline.embed_endpoint.empty()) {
            encoder = std::make_unique<RemoteEncoder>(config.pipeline.embed_endpoint,
                                                      config.pipeline.request_timeout_ms);
        } else {
            encoder = std::make_unique<LookupEncoder>(
                io::load_embedding_table(config.paths.query_embeddings));
        }
        for (const Query& query : queries) {
            run.emplace(query.id,
                        index.search(encoder->encode(query), config.pipeline.k0, query.id));
        }
    } else {
        Bm25Index index =
            Bm25Index::build(corpus, config.pipeline.bm25_k1, config.pipeline.bm25_b);
        for (const Query& query : queries) {
            RankedList list = index.search(query.retrieval_text(), config.pipeline.k0, query.id);
            if (list.empty()) {
                stage_warnings.push_back("retrieval matched no documents for query '" +
                                         query.id + "'");
            }
            run.emplace(query.id, std::move(list));
        }
    }
    io::save_run(run, artifacts.retrieval);
    write_stage_warnings(config, "retrieve", stage_warnings);
    warnings.insert(warnings.end(), stage_warnings.begin(), stage_warnings.end());
}

void run_rerank_stage(const EngineConfig& config, const llm::LlmClient& client,
                      StageCounts& counts, std::vector<std::string>& warnings) {
    Artifacts artifacts = artifacts_for(config);
    Corpus corpus = io::load_corpus(config.paths.corpus);
    std::vector<Query> queries = io::load_queries(artifacts.expanded);
    std::map<std::string, RankedList> run = io::load_run(artifacts.retrieval);
    std::vector<std::string> stage_warnings;

    int t_passes = config.pipeline.double_rerank_on ? config.pipeline.passes : 1;
    struct Slot {
        std::string query_id;
        int pass;
        int k0;
        int k1;
    };
    std::vector<Slot> slots;
    std::vector<llm::CompletionRequest> requests;
    for (const Query& query : queries) {
        auto it = run.find(query.id);
        if (it == run.end()) {
            throw FormatError("retrieval run has no entry for query '" + query.id + "'");
        }
        const RankedList& candidates = it->second;
        if (candidates.empty()) continue;
        int k0 = static_cast<int>(candidates.size());
        int k1 = std::min<int>(config.pipeline.k1, k0);
        for (int pass = 1; pass <= t_passes; ++pass) {
            requests.push_back(
                build_rerank_request(query, candidates, corpus, config.pipeline, pass));
            slots.push_back({query.id, pass, k0, k1});
        }
    }
    counts.rerank_calls += static_cast<int>(requests.size());

    auto outcomes = client.run_batch(requests, config.pipeline.max_concurrency);
    std::vector<io::PermutationRecord> records;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        const Slot& slot = slots[i];
        if (!outcomes[i].ok()) {
            stage_warnings.push_back("rerank pass " + std::to_string(slot.pass) +
                                     " for query '" + slot.query_id +
                                     "' failed and was excluded: " + outcomes[i].error);
            continue;
        }
        Permutation perm = parse_permutation(outcomes[i].result->text, slot.k0, slot.k1);
        records.push_back({slot.query_id, slot.pass, perm.indices});
    }
    io::save_permutations(records, artifacts.permutations);
    write_stage_warnings(config, "rerank", stage_warnings);
    warnings.insert(warnings.end(), stage_warnings.begin(), stage_warnings.end());
}

void run_fuse_stage(const EngineConfig& config, std::vector<std::string>& warnings) {
    Artifacts artifacts = artifacts_for(config);
    std::map<std::string, RankedList> run = io::load_run(artifacts.retrieval);
    std::vector<io::PermutationRecord> records = io::load_permutations(artifacts.permutations);
    std::vector<std::string> stage_warnings;

    std::map<std::string, std::vector<Permutation>> by_query;
    for (const io::PermutationRecord& record : records) {
        by_query[record.query_id].push_back(Permutation{record.indices});
    }

    std::map<std::string, RankedList> fused;
    for (const auto& [query_id, candidates] : run) {
        if (candidates.empty()) {
            fused.emplace(query_id, RankedList::from_ordered(query_id, Stage::Fused, {}));
            continue;
        }
        int k1 = std::min<int>(config.pipeline.k1, static_cast<int>(candidates.size()));
        auto it = by_query.find(query_id);
        if (it == by_query.end()) {
            stage_warnings.push_back("no surviving rerank passes for query '" + query_id +
                                     "'; keeping retrieval order");
            std::vector<ScoredDoc> kept(candidates.entries().begin(),
                                        candidates.entries().begin() + k1);
            fused.emplace(query_id,
                          RankedList::from_ordered(query_id, Stage::Fused, std::move(kept)));
            continue;
        }
        fused.emplace(query_id, rrf_fuse(it->second, candidates, config.pipeline.k_rrf, k1));
    }
    io::save_run(fused, artifacts.fused);
    write_stage_warnings(config, "fuse", stage_warnings);
    warnings.insert(warnings.end(), stage_warnings.begin(), stage_warnings.end());
}

std::string final_run_path(const EngineConfig& config) {
    Artifacts artifacts = artifacts_for(config);
    return config.pipeline.rerank_on ? artifacts.fused : artifacts.retrieval;
}

EvaluationReport run_eval_stage(const EngineConfig& config, const std::string& run_path,
                                std::vector<std::string>& warnings) {
    Artifacts artifacts = artifacts_for(config);
    if (config.paths.qrels.empty()) throw ConfigError("eval needs a qrels path");
    std::vector<Query> queries = io::load_queries(config.paths.queries);
    std::vector<std::string> qrel_warnings;
    Qrels qrels = io::load_qrels(config.paths.qrels, &qrel_warnings);
    std::map<std::string, RankedList> run = io::load_run(run_path);

    EvaluationReport report = evaluate_run(run, qrels, queries, 10);
    report.warnings.insert(report.warnings.begin(), qrel_warnings.begin(), qrel_warnings.end());
    report.upstream_warnings = count_upstream_warnings(config);
    io::atomic_write_file(artifacts.report_txt, render_report_text(report));
    io::atomic_write_file(artifacts.report_json, report_to_json(report));
    warnings.insert(warnings.end(), report.warnings.begin(), report.warnings.end());
    return report;
}

void run_index_stage(const EngineConfig& config) {
    Artifacts artifacts = artifacts_for(config);
    Corpus corpus = io::load_corpus(config.paths.corpus);
    json stats;
    if (config.pipeline.retriever == RetrieverKind::Dense) {
        io::EmbeddingTable doc_vectors =
            io::load_embeddings(config.paths.doc_embeddings, corpus);
        DenseIndex index = DenseIndex::build(corpus, doc_vectors);
        stats = {{"retriever", "dense"},
                 {"documents", index.size()},
                 {"dim", index.dim()}};
    } else {
        Bm25Index index =
            Bm25Index::build(corpus, config.pipeline.bm25_k1, config.pipeline.bm25_b);
        stats = {{"retriever", "bm25"},
                 {"documents", index.doc_count()},
                 {"avgdl", index.avgdl()},
                 {"k1", index.k1()},
                 {"b", index.b()}};
    }
    io::atomic_write_file(artifacts.index_stats, stats.dump(2) + "\n");
}

void run_mine_stage(const EngineConfig& config, std::vector<std::string>& warnings) {
    Artifacts artifacts = artifacts_for(config);
    Corpus corpus = io::load_corpus(config.paths.corpus);
    std::vector<Query> queries = io::load_queries(config.paths.queries);
    if (config.paths.qrels.empty()) throw ConfigError("mining needs a qrels path");
    Qrels qrels = io::load_qrels(config.paths.qrels);
    Bm25Index index = Bm25Index::build(corpus, config.pipeline.bm25_k1, config.pipeline.bm25_b);

    std::vector<io::NegativesRecord> records;
    for (const Query& query : queries) {
        records.push_back({query.id, mine_hard_negatives(index, query, qrels,
                                                         config.pipeline.hard_negatives,
                                                         &warnings)});
    }
    io::save_negatives(records, artifacts.negatives);
}

void run_train_stage(const EngineConfig& config) {
    Artifacts artifacts = artifacts_for(config);
    const ToyTrainerConfig& t = config.trainer;
    if (t.dim < 4) throw ConfigError("trainer.dim must be at least 4");
    std::size_t dim = static_cast<std::size_t>(t.dim);

    // Synthetic separable data on disjoint axes: query i lives on axis i,
    // its positive on axis pairs+i, so the encoder has to learn the
    // pairing rather than inherit it from shared features.
    std::size_t pairs = dim / 2;
    std::mt19937_64 rng(t.seed);
    auto noisy_axis = [&](std::size_t axis) {
        std::vector<double> v(dim, 0.0);
        v[axis] = 1.0;
        for (double& x : v) {
            x += 0.05 * ((static_cast<double>(rng() >> 11) / 9007199254740992.0) * 2.0 - 1.0);
        }
        return v;
    };
    std::vector<TrainingInstance> instances;
    for (std::size_t i = 0; i < pairs; ++i) {
        TrainingInstance inst;
        inst.query_id = "tq" + std::to_string(i);
        inst.query_features = noisy_axis(i);
        inst.positive_id = "tp" + std::to_string(i);
        inst.positive_features = noisy_axis(pairs + i);
        for (std::size_t j = 1; j <= 2; ++j) {
            inst.negative_ids.push_back("tn" + std::to_string(i) + "_" + std::to_string(j));
            inst.negative_features.push_back(noisy_axis(pairs + (i + j) % pairs));
        }
        instances.push_back(std::move(inst));
    }

    ToyEncoder encoder(dim, dim, t.seed);
    TrainResult result =
        train_toy(std::move(encoder), instances, t.tau, t.steps, t.learning_rate, t.batch_size);
    io::save_loss_trace(result.trace, artifacts.loss_trace);
    json summary{{"steps", t.steps},
                 {"initial_loss", result.trace.front()},
                 {"final_loss", result.trace.back()}};
    io::atomic_write_file(config.paths.out_dir + "/trainer.json", summary.dump(2) + "\n");
}

void write_manifest(const EngineConfig& config, const std::string& command,
                    const StageCounts& counts, const std::vector<std::string>& warnings) {
    Artifacts artifacts = artifacts_for(config);
    json inputs = json::object();
    auto add_input = [&](const char* key, const std::string& path) {
        if (path.empty()) return;
        if (!fs::exists(path)) {
            inputs[key] = {{"path", path}, {"digest", "missing"}};
            return;
        }
        inputs[key] = {{"path", path}, {"digest", io::file_digest(path)}};
    };
    add_input("corpus", config.paths.corpus);
    add_input("queries", config.paths.queries);
    add_input("qrels", config.paths.qrels);
    add_input("doc_embeddings", config.paths.doc_embeddings);
    add_input("query_embeddings", config.paths.query_embeddings);
    add_input("fixtures", config.paths.fixtures);

    json manifest{{"command", command},
                  {"config", json::parse(engine_config_to_json(config))},
                  {"inputs", inputs},
                  {"stages",
                   {{"caption_calls", counts.caption_calls},
                    {"caption_cache_hits", counts.caption_cache_hits},
                    {"expand_calls", counts.expand_calls},
                    {"rerank_calls", counts.rerank_calls}}},
                  {"warnings", warnings}};
    io::atomic_write_file(artifacts.manifest, manifest.dump(2) + "\n");
}

PipelineResult run_pipeline(const EngineConfig& config) {
    config.validate();
    preflight_inputs(config);
    fs::create_directories(config.paths.out_dir);
    reset_stage_journals(config.paths.out_dir);
    llm::LlmClient client = make_client(config);

    PipelineResult result;
    result.artifacts = artifacts_for(config);
    run_caption_stage(config, client, result.counts, result.warnings);
    run_expand_stage(config, client, result.counts, result.warnings);
    run_retrieve_stage(config, result.warnings);
    if (config.pipeline.rerank_on) {
        run_rerank_stage(config, client, result.counts, result.warnings);
        run_fuse_stage(config, result.warnings);
    }
    result.report = run_eval_stage(config, final_run_path(config), result.warnings);
    write_manifest(config, "pipeline", result.counts, result.warnings);
    return result;
}

// ---------------------------------------------------------------------------
// Sweeps

namespace {

std::string slugify(const std::string& label) {
    std::string slug;
    for (char c : label) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            slug.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!slug.empty() && slug.back() != '-') {
            slug.push_back('-');
        }
    }
    while (!slug.empty() && slug.back() == '-') slug.pop_back();
    return slug.empty() ? "row" : slug;
}

struct GridRow {
    std::string label;
    EngineConfig config;
};

std::vector<GridRow> build_grid(const EngineConfig& base, SweepMode mode,
                                const std::vector<int>& k0_grid) {
    std::vector<GridRow> rows;
    switch (mode) {
    case SweepMode::K0Grid: {
        if (k0_grid.empty()) throw ConfigError("k0 sweep needs a non-empty grid");
        for (int k0 : k0_grid) {
            EngineConfig row = base;
            row.pipeline.k0 = k0;
            rows.push_back({"k0=" + std::to_string(k0), std::move(row)});
        }
        break;
    }
    case SweepMode::Ablation: {
        struct Step {
            const char* label;
            bool caption, expand, rerank, fusion;
        };
        const Step ladder[] = {{"retrieval-only", false, false, false, false},
                               {"+caption", true, false, false, false},
                               {"+expansion", true, true, false, false},
                               {"+rerank", true, true, true, false},
                               {"+fusion", true, true, true, true}};
        for (const Step& step : ladder) {
            EngineConfig row = base;
            row.pipeline.caption_on = step.caption;
            row.pipeline.expand_on = step.expand;
            row.pipeline.rerank_on = step.rerank;
            row.pipeline.double_rerank_on = step.fusion;
            rows.push_back({step.label, std::move(row)});
        }
        break;
    }
    case SweepMode::Retrievers: {
        for (RetrieverKind kind : {RetrieverKind::Bm25, RetrieverKind::Dense}) {
            EngineConfig bare = base;
            bare.pipeline.retriever = kind;
            bare.pipeline.caption_on = false;
            bare.pipeline.expand_on = false;
            bare.pipeline.rerank_on = false;
            bare.pipeline.double_rerank_on = false;
            EngineConfig full = base;
            full.pipeline.retriever = kind;
            full.pipeline.caption_on = true;
            full.pipeline.expand_on = true;
            full.pipeline.rerank_on = true;
            full.pipeline.double_rerank_on = true;
            std::string name = retriever_kind_name(kind);
            rows.push_back({name + "-base", std::move(bare)});
            rows.push_back({name + "-full", std::move(full)});
        }
        break;
    }
    }
    return rows;
}

} // namespace

SweepResult run_sweep(const EngineConfig& base, SweepMode mode, std::vector<int> k0_grid) {
    base.validate();
    preflight_inputs(base);
    fs::create_directories(base.paths.out_dir);
    llm::LlmClient client = make_client(base);

    // One caption cache for the whole sweep, so captions are produced at
    // most once per query across all rows.
    std::string shared_cache = base.paths.caption_cache.empty()
                                   ? base.paths.out_dir + "/caption_cache.jsonl"
                                   : base.paths.caption_cache;

    std::vector<GridRow> grid = build_grid(base, mode, k0_grid);
    for (GridRow& row : grid) row.config.paths.caption_cache = shared_cache;

    StageCounts counts;
    std::vector<std::string> warnings;

    // Captions and expansions depend only on the upstream toggles, so
    // each distinct (caption_on, expand_on) pair is staged once.
    std::map<std::pair<bool, bool>, Artifacts> staged;
    auto stage_upstream = [&](const EngineConfig& row) -> const Artifacts& {
        std::pair<bool, bool> key{row.pipeline.caption_on, row.pipeline.expand_on};
        auto it = staged.find(key);
        if (it != staged.end()) return it->second;
        EngineConfig staging = row;
        staging.paths.out_dir = base.paths.out_dir + "/stage_c" +
                                (key.first ? "1" : "0") + "_e" + (key.second ? "1" : "0");
        fs::create_directories(staging.paths.out_dir);
        run_caption_stage(staging, client, counts, warnings);
        run_expand_stage(staging, client, counts, warnings);
        return staged.emplace(key, artifacts_for(staging)).first->second;
    };

    SweepResult result;
    std::vector<ComparisonColumn> columns;
    for (const GridRow& row : grid) {
        EngineConfig run_config = row.config;
        run_config.paths.out_dir = base.paths.out_dir + "/" + slugify(row.label);
        fs::create_directories(run_config.paths.out_dir);
        reset_stage_journals(run_config.paths.out_dir);

        const Artifacts& upstream = stage_upstream(row.config);
        const std::string staging_dir = fs::path(upstream.captioned).parent_path().string();
        Artifacts local = artifacts_for(run_config);
        fs::copy_file(upstream.captioned, local.captioned,
                      fs::copy_options::overwrite_existing);
        fs::copy_file(upstream.expanded, local.expanded, fs::copy_options::overwrite_existing);
        for (const char* stage : {"caption", "expand"}) {
            fs::path journal =
                fs::path(staging_dir) / ("warnings_" + std::string(stage) + ".log");
            if (fs::exists(journal)) {
                fs::copy_file(journal,
                              fs::path(run_config.paths.out_dir) / journal.filename(),
                              fs::copy_options::overwrite_existing);
            }
        }

        run_retrieve_stage(run_config, warnings);
        if (run_config.pipeline.rerank_on) {
            run_rerank_stage(run_config, client, counts, warnings);
            run_fuse_stage(run_config, warnings);
        }
        EvaluationReport report =
            run_eval_stage(run_config, final_run_path(run_config), warnings);
        columns.push_back({row.label, report});
        result.rows.push_back({row.label, run_config, std::move(report)});
    }

    result.text = render_comparison_text(columns);
    if (mode == SweepMode::Retrievers) {
        std::string deltas = "\nretriever  base -> full (macro nDCG@10)\n";
        for (std::size_t i = 0; i + 1 < result.rows.size(); i += 2) {
            double base_macro = result.rows[i].report.macro;
            double full_macro = result.rows[i + 1].report.macro;
            char line[160];
            std::snprintf(line, sizeof(line), "%-9s  %.4f -> %.4f  (%+.4f)\n",
                          retriever_kind_name(result.rows[i].config.pipeline.retriever),
                          base_macro, full_macro, full_macro - base_macro);
            deltas += line;
        }
        result.text += deltas;
    }

    json rows_json = json::array();
    for (const SweepRow& row : result.rows) {
        rows_json.push_back({{"label", row.label},
                             {"config", json::parse(engine_config_to_json(row.config))},
                             {"report", json::parse(report_to_json(row.report))}});
    }
    const char* mode_name = mode == SweepMode::K0Grid      ? "k0"
                            : mode == SweepMode::Ablation  ? "ablation"
                                                           : "retrievers";
    result.json = json{{"mode", mode_name}, {"rows", rows_json}}.dump(2) + "\n";

    io::atomic_write_file(base.paths.out_dir + "/sweep.txt", result.text);
    io::atomic_write_file(base.paths.out_dir + "/sweep.json", result.json);
    write_manifest(base, "sweep", counts, warnings);
    return result;
}

} // namespace xrr::pipeline
