#include "xrr/config.hpp"

#include <set>

#include "json.hpp"

#include "xrr/error.hpp"
#include "xrr/io.hpp"

using json = nlohmann::json;

namespace xrr {

namespace {

void reject_unknown_keys(const json& section, const std::set<std::string>& known,
                         const std::string& origin, const std::string& where) {
    for (const auto& [key, value] : section.items()) {
        if (!known.count(key)) {
            throw ConfigError(origin + ": unknown key '" + where + key + "'");
        }
    }
}

template <typename T>
void read_field(const json& section, const char* key, T& target, const std::string& origin) {
    auto it = section.find(key);
    if (it == section.end()) return;
    try {
        target = it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError(origin + ": bad value for '" + std::string(key) + "'");
    }
}

void parse_pipeline(const json& section, PipelineConfig& p, const std::string& origin) {
    static const std::set<std::string> known = {
        "k0", "k1", "passes", "k_rrf", "tau", "hard_negatives",
        "caption_temperature", "gen_temperature", "gen_top_p",
        "max_expansion_tokens", "max_concurrency", "retry_attempts",
        "caption_on", "expand_on", "rerank_on", "double_rerank_on",
        "retriever", "backend",
        "caption_prompt", "expansion_prompt", "rerank_prompt",
        "rerank_include_caption", "rerank_doc_chars",
        "bm25_k1", "bm25_b",
        "api_base", "model", "api_key_env", "request_timeout_ms",
        "embed_endpoint"};
    reject_unknown_keys(section, known, origin, "pipeline.");

    read_field(section, "k0", p.k0, origin);
    read_field(section, "k1", p.k1, origin);
    read_field(section, "passes", p.passes, origin);
    read_field(section, "k_rrf", p.k_rrf, origin);
    read_field(section, "tau", p.tau, origin);
    read_field(section, "hard_negatives", p.hard_negatives, origin);
    read_field(section, "caption_temperature", p.caption_temperature, origin);
    read_field(section, "gen_temperature", p.gen_temperature, origin);
    read_field(section, "gen_top_p", p.gen_top_p, origin);
    read_field(section, "max_expansion_tokens", p.max_expansion_tokens, origin);
    read_field(section, "max_concurrency", p.max_concurrency, origin);
    read_field(section, "retry_attempts", p.retry_attempts, origin);
    read_field(section, "caption_on", p.caption_on, origin);
    read_field(section, "expand_on", p.expand_on, origin);
    read_field(section, "rerank_on", p.rerank_on, origin);
    read_field(section, "double_rerank_on", p.double_rerank_on, origin);
    if (auto it = section.find("retriever"); it != section.end()) {
        if (!it->is_string()) throw ConfigError(origin + ": bad value for 'retriever'");
        p.retriever = retriever_kind_from_name(it->get<std::string>());
    }
    if (auto it = section.find("backend"); it != section.end()) {
        if (!it->is_string()) throw ConfigError(origin + ": bad value for 'backend'");
        p.backend = backend_kind_from_name(it->get<std::string>());
    }
    read_field(section, "caption_prompt", p.caption_prompt, origin);
    read_field(section, "expansion_prompt", p.expansion_prompt, origin);
    read_field(section, "rerank_prompt", p.rerank_prompt, origin);
    read_field(section, "rerank_include_caption", p.rerank_include_caption, origin);
    read_field(section, "rerank_doc_chars", p.rerank_doc_chars, origin);
    read_field(section, "bm25_k1", p.bm25_k1, origin);
    read_field(section, "bm25_b", p.bm25_b, origin);
    read_field(section, "api_base", p.api_base, origin);
    read_field(section, "model", p.model, origin);
    read_field(section, "api_key_env", p.api_key_env, origin);
    read_field(section, "request_timeout_ms", p.request_timeout_ms, origin);
    read_field(section, "embed_endpoint", p.embed_endpoint, origin);
}

void parse_paths(const json& section, RunPaths& paths, const std::string& origin) {
    static const std::set<std::string> known = {
        "corpus", "queries", "qrels", "doc_embeddings", "query_embeddings",
        "fixtures", "caption_cache", "out_dir"};
    reject_unknown_keys(section, known, origin, "paths.");

    read_field(section, "corpus", paths.corpus, origin);
    read_field(section, "queries", paths.queries, origin);
    read_field(section, "qrels", paths.qrels, origin);
    read_field(section, "doc_embeddings", paths.doc_embeddings, origin);
    read_field(section, "query_embeddings", paths.query_embeddings, origin);
    read_field(section, "fixtures", paths.fixtures, origin);
    read_field(section, "caption_cache", paths.caption_cache, origin);
    read_field(section, "out_dir", paths.out_dir, origin);
}

void parse_trainer(const json& section, ToyTrainerConfig& t, const std::string& origin) {
    static const std::set<std::string> known = {"dim", "steps", "tau", "learning_rate",
                                                "batch_size", "seed"};
    reject_unknown_keys(section, known, origin, "trainer.");

    read_field(section, "dim", t.dim, origin);
    read_field(section, "steps", t.steps, origin);
    read_field(section, "tau", t.tau, origin);
    read_field(section, "learning_rate", t.learning_rate, origin);
    read_field(section, "batch_size", t.batch_size, origin);
    read_field(section, "seed", t.seed, origin);
}

} // namespace

void EngineConfig::validate() const {
    pipeline.validate();
    if (trainer.dim <= 0) throw ConfigError("trainer.dim must be positive");
    if (trainer.steps < 0) throw ConfigError("trainer.steps must be non-negative");
    if (trainer.tau <= 0) throw ConfigError("trainer.tau must be positive");
    if (trainer.learning_rate <= 0) throw ConfigError("trainer.learning_rate must be positive");
    if (trainer.batch_size <= 0) throw ConfigError("trainer.batch_size must be positive");
}

EngineConfig parse_engine_config(const std::string& text, const std::string& origin) {
    json root = json::parse(text, nullptr, false);
    if (root.is_discarded() || !root.is_object()) {
        throw ConfigError(origin + ": config must be a JSON object");
    }
    static const std::set<std::string> known = {"pipeline", "paths", "trainer"};
    reject_unknown_keys(root, known, origin, "");

    EngineConfig config;
    if (auto it = root.find("pipeline"); it != root.end()) {
        if (!it->is_object()) throw ConfigError(origin + ": 'pipeline' must be an object");
        parse_pipeline(*it, config.pipeline, origin);
    }
    if (auto it = root.find("paths"); it != root.end()) {
        if (!it->is_object()) throw ConfigError(origin + ": 'paths' must be an object");
        parse_paths(*it, config.paths, origin);
    }
    if (auto it = root.find("trainer"); it != root.end()) {
        if (!it->is_object()) throw ConfigError(origin + ": 'trainer' must be an object");
        parse_trainer(*it, config.trainer, origin);
    }
    config.validate();
    return config;
}

EngineConfig load_engine_config(const std::string& path) {
    return parse_engine_config(io::read_file(path), path);
}

std::string engine_config_to_json(const EngineConfig& config) {
    const PipelineConfig& p = config.pipeline;
    json pipeline{
        {"k0", p.k0},
        {"k1", p.k1},
        {"passes", p.passes},
        {"k_rrf", p.k_rrf},
        {"tau", p.tau},
        {"hard_negatives", p.hard_negatives},
        {"caption_temperature", p.caption_temperature},
        {"gen_temperature", p.gen_temperature},
        {"gen_top_p", p.gen_top_p},
        {"max_expansion_tokens", p.max_expansion_tokens},
        {"max_concurrency", p.max_concurrency},
        {"retry_attempts", p.retry_attempts},
        {"caption_on", p.caption_on},
        {"expand_on", p.expand_on},
        {"rerank_on", p.rerank_on},
        {"double_rerank_on", p.double_rerank_on},
        {"retriever", retriever_kind_name(p.retriever)},
        {"backend", backend_kind_name(p.backend)},
        {"caption_prompt", p.caption_prompt},
        {"expansion_prompt", p.expansion_prompt},
        {"rerank_prompt", p.rerank_prompt},
        {"rerank_include_caption", p.rerank_include_caption},
        {"rerank_doc_chars", p.rerank_doc_chars},
        {"bm25_k1", p.bm25_k1},
        {"bm25_b", p.bm25_b},
        {"api_base", p.api_base},
        {"model", p.model},
        {"api_key_env", p.api_key_env},
        {"request_timeout_ms", p.request_timeout_ms},
        {"embed_endpoint", p.embed_endpoint},
    };
    const RunPaths& r = config.paths;
    json paths{
        {"corpus", r.corpus},
        {"queries", r.queries},
        {"qrels", r.qrels},
        {"doc_embeddings", r.doc_embeddings},
        {"query_embeddings", r.query_embeddings},
        {"fixtures", r.fixtures},
        {"caption_cache", r.caption_cache},
        {"out_dir", r.out_dir},
    };
    const ToyTrainerConfig& t = config.trainer;
    json trainer{
        {"dim", t.dim},
        {"steps", t.steps},
        {"tau", t.tau},
        {"learning_rate", t.learning_rate},
        {"batch_size", t.batch_size},
        {"seed", t.seed},
    };
    json root{{"pipeline", pipeline}, {"paths", paths}, {"trainer", trainer}};
    return root.dump(2);
}

} // namespace xrr
