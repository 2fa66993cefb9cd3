#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "xrr/core.hpp"

using namespace xrr;

TEST_CASE("cosine hand anchor") {
    EmbeddingVector a({1, 2, 2});
    EmbeddingVector b({2, 1, 2});
    CHECK(cosine_score(a, b) == doctest::Approx(8.0 / 9.0).epsilon(1e-12));
    CHECK(cosine_score(a, a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cosine properties") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> av(5), bv(5);
        for (auto& x : av) x = u(rng);
        for (auto& x : bv) x = u(rng);
        if (std::abs(av[0]) < 1e-6) av[0] = 0.5;
        if (std::abs(bv[0]) < 1e-6) bv[0] = 0.5;
        EmbeddingVector a(av), b(bv);
        double s = cosine_score(a, b);
        CHECK(s >= -1.0 - 1e-12);
        CHECK(s <= 1.0 + 1e-12);
        CHECK(cosine_score(b, a) == doctest::Approx(s).epsilon(1e-12));
        // Scale invariance: powers of two keep the quotient exact.
        std::vector<double> scaled = bv;
        for (auto& x : scaled) x *= 4.0;
        CHECK(cosine_score(a, EmbeddingVector(scaled)) == s);
    }
}

TEST_CASE("cosine error cases") {
    EmbeddingVector a({1, 0});
    CHECK_THROWS_AS(cosine_score(a, EmbeddingVector({1, 2, 3})), FormatError);
    CHECK_THROWS_AS(cosine_score(a, EmbeddingVector({0, 0})), FormatError);
    CHECK_THROWS_AS(EmbeddingVector(std::vector<double>{}), FormatError);
    CHECK_THROWS_AS(EmbeddingVector({1.0, std::nan("")}), FormatError);
    CHECK_THROWS_AS(EmbeddingVector({std::numeric_limits<double>::infinity()}), FormatError);
}

TEST_CASE("embedding normalization") {
    EmbeddingVector v({3, 4});
    CHECK(v.norm() == doctest::Approx(5.0));
    EmbeddingVector n = v.normalized();
    CHECK(n[0] == doctest::Approx(0.6));
    CHECK(n[1] == doctest::Approx(0.8));
    CHECK_THROWS_AS(EmbeddingVector({0.0, 0.0}).normalized(), FormatError);
}

TEST_CASE("query retrieval_text precedence") {
    Query q;
    q.text = "raw";
    CHECK(q.retrieval_text() == "raw");
    q.combined = "combined";
    CHECK(q.retrieval_text() == "combined");
    q.expanded = "expanded";
    CHECK(q.retrieval_text() == "expanded");
    q.expanded = "";
    CHECK(q.retrieval_text() == "combined");
}

TEST_CASE("corpus uniqueness and lookup") {
    Corpus corpus;
    corpus.add({"d1", "alpha", ""});
    corpus.add({"d2", "beta", "chem"});
    CHECK(corpus.size() == 2);
    CHECK(corpus.contains("d1"));
    CHECK(corpus.find("d3") == nullptr);
    CHECK(corpus.by_id("d2").domain == "chem");
    CHECK_THROWS_AS(corpus.add({"d1", "dup", ""}), FormatError);
    CHECK_THROWS_AS(corpus.add({"", "x", ""}), FormatError);
    CHECK_THROWS_AS(corpus.add({"d9", "", ""}), FormatError);
    CHECK_THROWS_AS(corpus.by_id("nope"), FormatError);
}

TEST_CASE("stage names round-trip") {
    for (Stage s : {Stage::Retrieval, Stage::Rerank, Stage::Fused}) {
        CHECK(stage_from_name(stage_name(s)) == s);
    }
    CHECK_THROWS_AS(stage_from_name("bogus"), FormatError);
}

TEST_CASE("ranked list sorted applies canonical tie rule") {
    RankedList list = RankedList::sorted("q", Stage::Retrieval,
                                         {{"b", 1.0}, {"c", 2.0}, {"a", 1.0}});
    REQUIRE(list.size() == 3);
    CHECK(list.entries()[0].doc_id == "c");
    CHECK(list.entries()[1].doc_id == "a");  // tie at 1.0 -> ascending id
    CHECK(list.entries()[2].doc_id == "b");
    CHECK(list.contains("a"));
    CHECK_FALSE(list.contains("z"));
}

TEST_CASE("ranked list from_ordered validates") {
    CHECK_THROWS_AS(
        RankedList::from_ordered("q", Stage::Fused, {{"a", 1.0}, {"b", 2.0}}),
        FormatError);
    CHECK_THROWS_AS(
        RankedList::from_ordered("q", Stage::Fused, {{"a", 1.0}, {"a", 0.5}}),
        FormatError);
    RankedList ok = RankedList::from_ordered("q", Stage::Fused, {{"a", 1.0}, {"b", 1.0}});
    CHECK(ok.size() == 2);
    RankedList empty = RankedList::from_ordered("q", Stage::Fused, {});
    CHECK(empty.empty());
}

TEST_CASE("ranked list truncation") {
    RankedList list = RankedList::sorted("q", Stage::Retrieval,
                                         {{"a", 3.0}, {"b", 2.0}, {"c", 1.0}});
    RankedList top = list.truncated(2);
    CHECK(top.size() == 2);
    CHECK(top.entries()[1].doc_id == "b");
    CHECK(list.truncated(10).size() == 3);
}

TEST_CASE("qrels grades") {
    Qrels qrels;
    CHECK_FALSE(qrels.set("q1", "d1", 2));
    CHECK_FALSE(qrels.set("q1", "d2", 0));
    CHECK(qrels.set("q1", "d1", 1));  // overwrite reported
    CHECK(qrels.grade("q1", "d1") == 1);
    CHECK(qrels.grade("q1", "dx") == 0);
    CHECK(qrels.grade("qx", "d1") == 0);
    CHECK(qrels.has_judgments("q1"));
    CHECK_FALSE(qrels.has_judgments("q2"));
    CHECK(qrels.judgments_for("q1").size() == 2);
    CHECK(qrels.pair_count() == 2);
    CHECK_THROWS_AS(qrels.set("q1", "d3", -1), FormatError);
}

TEST_CASE("enum names") {
    CHECK(retriever_kind_from_name("dense") == RetrieverKind::Dense);
    CHECK(retriever_kind_from_name("bm25") == RetrieverKind::Bm25);
    CHECK_THROWS_AS(retriever_kind_from_name("faiss"), ConfigError);
    CHECK(backend_kind_from_name("mock") == BackendKind::Mock);
    CHECK(backend_kind_from_name("wire") == BackendKind::Wire);
    CHECK_THROWS_AS(backend_kind_from_name("none"), ConfigError);
    CHECK(std::string(retriever_kind_name(RetrieverKind::Bm25)) == "bm25");
    CHECK(std::string(backend_kind_name(BackendKind::Wire)) == "wire");
}

TEST_CASE("pipeline config defaults carry the published constants") {
    PipelineConfig config;
    CHECK(config.k0 == 100);
    CHECK(config.k1 == 10);
    CHECK(config.passes == 5);
    CHECK(config.k_rrf == 60.0);
    CHECK(config.tau == 0.02);
    CHECK(config.hard_negatives == 7);
    CHECK(config.gen_temperature == 0.8);
    CHECK(config.gen_top_p == 0.8);
    CHECK(config.caption_temperature == 0.0);
    CHECK(config.max_expansion_tokens == 2048);
    CHECK(config.bm25_k1 == 0.9);
    CHECK(config.bm25_b == 0.4);
    config.validate();
}

TEST_CASE("pipeline config validation") {
    PipelineConfig config;
    config.k1 = 200;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config = {};
    config.k0 = 0;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config = {};
    config.passes = 0;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config = {};
    config.k_rrf = 0.0;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config = {};
    config.tau = 0.0;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config = {};
    config.max_concurrency = 0;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config = {};
    config.gen_temperature = -0.1;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config = {};
    config.gen_top_p = 1.5;
    CHECK_THROWS_AS(config.validate(), ConfigError);
}

TEST_CASE("effective passes follow the toggles") {
    PipelineConfig config;
    CHECK(config.effective_passes() == 5);
    config.double_rerank_on = false;
    CHECK(config.effective_passes() == 1);
    config.rerank_on = false;
    CHECK(config.effective_passes() == 0);
}
