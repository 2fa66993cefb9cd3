#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <set>

#include "json.hpp"

#include "helpers.hpp"
#include "xrr/dataset.hpp"
#include "xrr/io.hpp"
#include "xrr/pipeline.hpp"

using namespace xrr;
namespace fs = std::filesystem;

namespace {

EngineConfig demo_config(testutil::TempDir& dir) {
    dataset::DemoPaths demo = dataset::write_demo_dataset(dir.file("data"));
    EngineConfig config = load_engine_config(demo.config);
    config.paths.out_dir = dir.file("out");
    return config;
}

} // namespace

TEST_CASE("oracle fixtures give a perfect run") {
    testutil::TempDir dir;
    EngineConfig config = demo_config(dir);

    pipeline::PipelineResult result = pipeline::run_pipeline(config);
    CHECK(result.report.macro == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(result.report.micro == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(result.report.per_domain.size() == 2);
    for (const auto& [domain, mean] : result.report.per_domain) {
        CHECK(mean == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(result.report.warnings.empty());
    CHECK(result.report.upstream_warnings == 0);
    CHECK(result.counts.caption_calls == 10);
    CHECK(result.counts.expand_calls == 10);
    CHECK(result.counts.rerank_calls == 50);  // 10 queries x 5 passes

    for (const std::string& path :
         {result.artifacts.captioned, result.artifacts.expanded, result.artifacts.retrieval,
          result.artifacts.permutations, result.artifacts.fused, result.artifacts.report_txt,
          result.artifacts.report_json, result.artifacts.manifest}) {
        CHECK(fs::exists(path));
    }

    // Every fused ranking stays inside the retrieved candidate set.
    auto retrieval = io::load_run(result.artifacts.retrieval);
    auto fused = io::load_run(result.artifacts.fused);
    REQUIRE(fused.size() == 10);
    for (const auto& [query_id, list] : fused) {
        REQUIRE(retrieval.count(query_id) == 1);
        for (const auto& entry : list.entries()) {
            CHECK(retrieval.at(query_id).contains(entry.doc_id));
        }
    }
}

TEST_CASE("staged commands produce the one-shot artifacts byte for byte") {
    testutil::TempDir dir;
    EngineConfig config = demo_config(dir);
    pipeline::PipelineResult one_shot = pipeline::run_pipeline(config);

    EngineConfig staged = config;
    staged.paths.out_dir = dir.file("staged");
    llm::LlmClient client = pipeline::make_client(staged);
    pipeline::StageCounts counts;
    std::vector<std::string> warnings;
    pipeline::run_caption_stage(staged, client, counts, warnings);
    pipeline::run_expand_stage(staged, client, counts, warnings);
    pipeline::run_retrieve_stage(staged, warnings);
    pipeline::run_rerank_stage(staged, client, counts, warnings);
    pipeline::run_fuse_stage(staged, warnings);
    pipeline::run_eval_stage(staged, pipeline::final_run_path(staged), warnings);

    pipeline::Artifacts a = pipeline::artifacts_for(config);
    pipeline::Artifacts b = pipeline::artifacts_for(staged);
    CHECK(io::read_file(b.captioned) == io::read_file(a.captioned));
    CHECK(io::read_file(b.expanded) == io::read_file(a.expanded));
    CHECK(io::read_file(b.retrieval) == io::read_file(a.retrieval));
    CHECK(io::read_file(b.permutations) == io::read_file(a.permutations));
    CHECK(io::read_file(b.fused) == io::read_file(a.fused));
    CHECK(io::read_file(b.report_txt) == io::read_file(a.report_txt));
    CHECK(io::read_file(b.report_json) == io::read_file(a.report_json));
    CHECK(counts.caption_calls == one_shot.counts.caption_calls);
    CHECK(counts.rerank_calls == one_shot.counts.rerank_calls);
}

TEST_CASE("second run hits the caption cache and reproduces the report") {
    testutil::TempDir dir;
    EngineConfig config = demo_config(dir);

    pipeline::PipelineResult first = pipeline::run_pipeline(config);
    std::string first_txt = io::read_file(first.artifacts.report_txt);
    std::string first_json = io::read_file(first.artifacts.report_json);
    CHECK(first.counts.caption_calls == 10);
    CHECK(first.counts.caption_cache_hits == 0);

    pipeline::PipelineResult second = pipeline::run_pipeline(config);
    CHECK(second.counts.caption_calls == 0);
    CHECK(second.counts.caption_cache_hits == 10);
    CHECK(io::read_file(second.artifacts.report_txt) == first_txt);
    CHECK(io::read_file(second.artifacts.report_json) == first_json);
}

TEST_CASE("manifest is reproducible from a clean slate") {
    testutil::TempDir dir;
    EngineConfig config = demo_config(dir);

    pipeline::PipelineResult first = pipeline::run_pipeline(config);
    std::string manifest = io::read_file(first.artifacts.manifest);

    auto parsed = nlohmann::json::parse(manifest);
    CHECK(parsed["command"] == "pipeline");
    CHECK(parsed["stages"]["caption_calls"] == 10);
    CHECK(parsed["stages"]["rerank_calls"] == 50);
    CHECK(parsed["config"]["pipeline"]["k0"] == 100);
    for (const auto& [name, record] : parsed["inputs"].items()) {
        CHECK(record["digest"].get<std::string>().size() == 16);
    }

    fs::remove_all(config.paths.out_dir);
    pipeline::run_pipeline(config);
    CHECK(io::read_file(first.artifacts.manifest) == manifest);
}

TEST_CASE("identity reranking scores exactly like no reranking") {
    testutil::TempDir dir;
    dataset::DemoPaths demo = dataset::write_demo_dataset(dir.file("data"));
    EngineConfig config = load_engine_config(demo.config);

    EngineConfig identity = config;
    identity.paths.fixtures = demo.fixtures_identity;
    identity.paths.out_dir = dir.file("identity");
    pipeline::PipelineResult reranked = pipeline::run_pipeline(identity);

    EngineConfig plain = config;
    plain.pipeline.rerank_on = false;
    plain.paths.out_dir = dir.file("plain");
    pipeline::PipelineResult retrieved = pipeline::run_pipeline(plain);

    CHECK(reranked.report.macro ==
          doctest::Approx(retrieved.report.macro).epsilon(1e-12));
    CHECK(reranked.report.micro ==
          doctest::Approx(retrieved.report.micro).epsilon(1e-12));
    for (const auto& [query_id, score] : retrieved.report.per_query) {
        CHECK(reranked.report.per_query.at(query_id) ==
              doctest::Approx(score).epsilon(1e-12));
    }
    // The identity run is strictly worse than the oracle run.
    EngineConfig oracle = config;
    oracle.paths.out_dir = dir.file("oracle");
    pipeline::PipelineResult best = pipeline::run_pipeline(oracle);
    CHECK(best.report.macro > reranked.report.macro);
    CHECK(best.report.macro == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ablation sweep walks the toggle ladder") {
    testutil::TempDir dir;
    EngineConfig config = demo_config(dir);

    pipeline::SweepResult sweep = pipeline::run_sweep(config, pipeline::SweepMode::Ablation);
    REQUIRE(sweep.rows.size() == 5);
    CHECK(sweep.rows[0].label == "retrieval-only");
    CHECK(sweep.rows[1].label == "+caption");
    CHECK(sweep.rows[2].label == "+expansion");
    CHECK(sweep.rows[3].label == "+rerank");
    CHECK(sweep.rows[4].label == "+fusion");

    // Each rung enables exactly one more stage than the previous.
    auto toggles = [](const EngineConfig& c) {
        return std::vector<bool>{c.pipeline.caption_on, c.pipeline.expand_on,
                                 c.pipeline.rerank_on, c.pipeline.double_rerank_on};
    };
    CHECK(toggles(sweep.rows[0].config) == std::vector<bool>{false, false, false, false});
    CHECK(toggles(sweep.rows[1].config) == std::vector<bool>{true, false, false, false});
    CHECK(toggles(sweep.rows[2].config) == std::vector<bool>{true, true, false, false});
    CHECK(toggles(sweep.rows[3].config) == std::vector<bool>{true, true, true, false});
    CHECK(toggles(sweep.rows[4].config) == std::vector<bool>{true, true, true, true});

    CHECK(sweep.rows[4].report.macro == doctest::Approx(1.0).epsilon(1e-12));
    for (const pipeline::SweepRow& row : sweep.rows) {
        CHECK(row.report.macro >= 0.0);
        CHECK(row.report.macro <= 1.0 + 1e-12);
    }

    CHECK(fs::exists(dir.file("out/retrieval-only/report.json")));
    CHECK(fs::exists(dir.file("out/fusion/report.json")));
    CHECK(fs::exists(dir.file("out/sweep.txt")));
    CHECK(sweep.text.find("retrieval-only") != std::string::npos);
    CHECK(sweep.text.find("+fusion") != std::string::npos);
    CHECK(sweep.text.find("macro average") != std::string::npos);

    auto parsed = nlohmann::json::parse(io::read_file(dir.file("out/sweep.json")));
    REQUIRE(parsed["rows"].size() == 5);
    CHECK(parsed["mode"] == "ablation");
    CHECK(parsed["rows"][4]["label"] == "+fusion");

    // Captions were computed once and shared across the rows that use them.
    auto manifest = nlohmann::json::parse(io::read_file(dir.file("out/manifest.json")));
    CHECK(manifest["command"] == "sweep");
    CHECK(manifest["stages"]["caption_calls"] == 10);
    CHECK(manifest["stages"]["caption_cache_hits"] == 10);
    CHECK(manifest["stages"]["expand_calls"] == 10);
    CHECK(manifest["stages"]["rerank_calls"] == 60);  // 10 single-pass + 50 fused
}

TEST_CASE("k0 sweep improves with retrieval depth on the demo set") {
    testutil::TempDir dir;
    EngineConfig config = demo_config(dir);

    pipeline::SweepResult sweep =
        pipeline::run_sweep(config, pipeline::SweepMode::K0Grid, {5, 10, 50});
    REQUIRE(sweep.rows.size() == 3);
    CHECK(sweep.rows[0].label == "k0=5");
    CHECK(sweep.rows[1].label == "k0=10");
    CHECK(sweep.rows[2].label == "k0=50");
    CHECK(sweep.rows[0].config.pipeline.k0 == 5);
    CHECK(sweep.rows[2].config.pipeline.k0 == 50);
    CHECK(sweep.rows[0].report.macro <= sweep.rows[1].report.macro);
    CHECK(sweep.rows[1].report.macro <= sweep.rows[2].report.macro);
    CHECK(sweep.rows[2].report.macro == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(pipeline::run_sweep(config, pipeline::SweepMode::K0Grid, {}), ConfigError);
}

TEST_CASE("retriever sweep compares base against the full stack") {
    testutil::TempDir dir;
    EngineConfig config = demo_config(dir);

    pipeline::SweepResult sweep = pipeline::run_sweep(config, pipeline::SweepMode::Retrievers);
    REQUIRE(sweep.rows.size() == 4);

    std::set<std::pair<std::string, bool>> seen;
    for (const pipeline::SweepRow& row : sweep.rows) {
        const PipelineConfig& p = row.config.pipeline;
        seen.insert({retriever_kind_name(p.retriever), p.rerank_on});
        // Base rows switch every stage off; full rows switch every stage on.
        CHECK(p.caption_on == p.rerank_on);
        CHECK(p.expand_on == p.rerank_on);
        CHECK(p.double_rerank_on == p.rerank_on);
    }
    CHECK(seen.size() == 4);

    double dense_full = 0;
    for (const pipeline::SweepRow& row : sweep.rows) {
        if (row.config.pipeline.retriever == RetrieverKind::Dense &&
            row.config.pipeline.rerank_on) {
            dense_full = row.report.macro;
        }
    }
    CHECK(dense_full == doctest::Approx(1.0).epsilon(1e-12));

    // The rendered table ends with a base -> full delta block.
    CHECK(sweep.text.find("->") != std::string::npos);
    CHECK(sweep.text.find("dense") != std::string::npos);
    CHECK(sweep.text.find("bm25") != std::string::npos);

    // Fused output stays within the retrieved pool for every row.
    for (const pipeline::SweepRow& row : sweep.rows) {
        if (!row.config.pipeline.rerank_on) continue;
        pipeline::Artifacts arts = pipeline::artifacts_for(row.config);
        auto retrieval = io::load_run(arts.retrieval);
        auto fused = io::load_run(arts.fused);
        for (const auto& [query_id, list] : fused) {
            for (const auto& entry : list.entries()) {
                CHECK(retrieval.at(query_id).contains(entry.doc_id));
            }
        }
    }
}

TEST_CASE("mining, training, and index stages leave artifacts") {
    testutil::TempDir dir;
    EngineConfig config = demo_config(dir);
    pipeline::Artifacts arts = pipeline::artifacts_for(config);

    std::vector<std::string> warnings;
    pipeline::run_mine_stage(config, warnings);
    auto negatives = io::load_negatives(arts.negatives);
    REQUIRE(negatives.size() == 10);
    Qrels qrels = io::load_qrels(config.paths.qrels);
    for (const auto& record : negatives) {
        CHECK(record.negatives.size() <= 7);
        for (const std::string& doc_id : record.negatives) {
            CHECK(qrels.grade(record.query_id, doc_id) == 0);
        }
    }

    pipeline::run_train_stage(config);
    CHECK(fs::exists(arts.loss_trace));
    auto trainer = nlohmann::json::parse(io::read_file(dir.file("out/trainer.json")));
    CHECK(trainer["steps"] == config.trainer.steps);
    CHECK(trainer["final_loss"].get<double>() < trainer["initial_loss"].get<double>());

    pipeline::run_index_stage(config);
    auto dense = nlohmann::json::parse(io::read_file(arts.index_stats));
    CHECK(dense["retriever"] == "dense");
    CHECK(dense["documents"] == 50);
    CHECK(dense["dim"] == 8);

    EngineConfig lexical = config;
    lexical.pipeline.retriever = RetrieverKind::Bm25;
    pipeline::run_index_stage(lexical);
    auto bm25 = nlohmann::json::parse(io::read_file(arts.index_stats));
    CHECK(bm25["retriever"] == "bm25");
    CHECK(bm25["documents"] == 50);
    CHECK(bm25["avgdl"].get<double>() > 0.0);
}

TEST_CASE("upstream stage warnings surface in the evaluation report") {
    testutil::TempDir dir;
    EngineConfig config = demo_config(dir);

    // An out-of-vocabulary query makes BM25 retrieve nothing, which the
    // retrieve stage journals and the eval stage then reports.
    auto queries = io::load_queries(config.paths.queries);
    Query stray;
    stray.id = "q-stray";
    stray.text = "zzyzx quux flibbertigibbet";
    stray.domain = "chemistry";
    queries.push_back(stray);
    io::save_queries(queries, config.paths.queries);

    config.pipeline.retriever = RetrieverKind::Bm25;
    pipeline::PipelineResult result = pipeline::run_pipeline(config);
    CHECK(result.report.upstream_warnings >= 1);
    bool mentions_stray = false;
    for (const std::string& warning : result.warnings) {
        if (warning.find("q-stray") != std::string::npos) mentions_stray = true;
    }
    CHECK(mentions_stray);
    CHECK(io::read_file(result.artifacts.report_txt).find("upstream stage warnings") !=
          std::string::npos);
}

TEST_CASE("missing inputs fail before any backend call") {
    testutil::TempDir dir;
    EngineConfig config = demo_config(dir);
    config.paths.corpus = dir.file("nope/corpus.jsonl");

    CHECK_THROWS_WITH_AS(pipeline::run_pipeline(config), doctest::Contains("missing input file"),
                         IoError);
    CHECK(!fs::exists(pipeline::artifacts_for(config).captioned));
}
