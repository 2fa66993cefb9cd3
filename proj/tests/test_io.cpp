#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>

#include "helpers.hpp"
#include "xrr/io.hpp"

using namespace xrr;
using testutil::TempDir;
using testutil::write_file;

TEST_CASE("read_file and atomic_write_file") {
    TempDir tmp;
    CHECK_THROWS_AS(io::read_file(tmp.file("absent.txt")), IoError);
    io::atomic_write_file(tmp.file("deep/nested/out.txt"), "payload");
    CHECK(io::read_file(tmp.file("deep/nested/out.txt")) == "payload");
    io::atomic_write_file(tmp.file("deep/nested/out.txt"), "replaced");
    CHECK(io::read_file(tmp.file("deep/nested/out.txt")) == "replaced");
    // No leftover temporaries next to the target.
    std::size_t entries = 0;
    for ([[maybe_unused]] auto& e :
         std::filesystem::directory_iterator(tmp.file("deep/nested"))) {
        ++entries;
    }
    CHECK(entries == 1);
}

TEST_CASE("file digest is content-addressed") {
    TempDir tmp;
    write_file(tmp.file("a.txt"), "hello");
    write_file(tmp.file("b.txt"), "hello");
    write_file(tmp.file("c.txt"), "hello!");
    CHECK(io::file_digest(tmp.file("a.txt")) == io::file_digest(tmp.file("b.txt")));
    CHECK(io::file_digest(tmp.file("a.txt")) != io::file_digest(tmp.file("c.txt")));
    CHECK(io::file_digest(tmp.file("a.txt")).size() == 16);
    CHECK(io::fnv1a64("") == 0xcbf29ce484222325ULL);
}

TEST_CASE("corpus round-trip") {
    TempDir tmp;
    Corpus corpus;
    corpus.add({"d1", "resistor ladder network", "circuits"});
    corpus.add({"d2", "benzene ring substitution", "chemistry"});
    io::save_corpus(corpus, tmp.file("corpus.jsonl"));
    Corpus loaded = io::load_corpus(tmp.file("corpus.jsonl"));
    REQUIRE(loaded.size() == 2);
    CHECK(loaded.at(0).id == "d1");
    CHECK(loaded.at(1).text == "benzene ring substitution");
    CHECK(loaded.at(1).domain == "chemistry");
}

TEST_CASE("corpus format errors carry the line number") {
    TempDir tmp;
    write_file(tmp.file("bad.jsonl"), R"({"id":"d1","text":"ok"})"
                                      "\nnot json\n");
    CHECK_THROWS_WITH_AS(io::load_corpus(tmp.file("bad.jsonl")),
                         doctest::Contains("bad.jsonl:2"), FormatError);
    write_file(tmp.file("dup.jsonl"), R"({"id":"d1","text":"a"})"
                                      "\n" R"({"id":"d1","text":"b"})" "\n");
    CHECK_THROWS_AS(io::load_corpus(tmp.file("dup.jsonl")), FormatError);
    write_file(tmp.file("missing.jsonl"), R"({"id":"d1"})" "\n");
    CHECK_THROWS_AS(io::load_corpus(tmp.file("missing.jsonl")), FormatError);
}

TEST_CASE("query round-trip with stage fields") {
    TempDir tmp;
    Query q1 = testutil::query("q1", "what is this circuit", "circuits");
    q1.image_refs = {"img/q1a.png", "img/q1b.png"};
    q1.caption = "a schematic";
    q1.combined = "what is this circuit\nImage Description: a schematic";
    q1.expanded = "long form";
    Query q2 = testutil::query("q2", "plain text only");
    io::save_queries({q1, q2}, tmp.file("queries.jsonl"));
    auto loaded = io::load_queries(tmp.file("queries.jsonl"));
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].image_refs.size() == 2);
    CHECK(*loaded[0].caption == "a schematic");
    CHECK(*loaded[0].expanded == "long form");
    CHECK(loaded[0].domain == "circuits");
    CHECK_FALSE(loaded[1].caption.has_value());
    CHECK_FALSE(loaded[1].expanded.has_value());
}

TEST_CASE("query loader accepts single image_ref and arrays") {
    TempDir tmp;
    write_file(tmp.file("q.jsonl"),
               R"({"id":"q1","text":"t","image_ref":"one.png"})"
               "\n"
               R"({"id":"q2","text":"t","image_refs":["a.png","b.png"]})"
               "\n");
    auto loaded = io::load_queries(tmp.file("q.jsonl"));
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].image_refs == std::vector<std::string>{"one.png"});
    CHECK(loaded[1].image_refs.size() == 2);

    write_file(tmp.file("dup.jsonl"), R"({"id":"q1","text":"a"})"
                                      "\n" R"({"id":"q1","text":"b"})" "\n");
    CHECK_THROWS_AS(io::load_queries(tmp.file("dup.jsonl")), FormatError);
}

TEST_CASE("qrels round-trip, overwrite warning, format errors") {
    TempDir tmp;
    write_file(tmp.file("qrels.txt"), "q1 d1 2\nq1 d2 1\nq2 d3 0\nq1 d1 1\n");
    std::vector<std::string> warnings;
    Qrels qrels = io::load_qrels(tmp.file("qrels.txt"), &warnings);
    CHECK(qrels.grade("q1", "d1") == 1);  // later value kept
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("later value kept") != std::string::npos);
    CHECK(warnings[0].find("line 4") != std::string::npos);

    io::save_qrels(qrels, tmp.file("saved.txt"));
    Qrels reloaded = io::load_qrels(tmp.file("saved.txt"));
    CHECK(reloaded.pair_count() == qrels.pair_count());
    CHECK(reloaded.grade("q1", "d2") == 1);

    write_file(tmp.file("neg.txt"), "q1 d1 -2\n");
    CHECK_THROWS_AS(io::load_qrels(tmp.file("neg.txt")), FormatError);
    write_file(tmp.file("junk.txt"), "q1 d1 two\n");
    CHECK_THROWS_AS(io::load_qrels(tmp.file("junk.txt")), FormatError);
    write_file(tmp.file("short.txt"), "q1 d1\n");
    CHECK_THROWS_AS(io::load_qrels(tmp.file("short.txt")), FormatError);
}

TEST_CASE("embeddings binary round-trip is float32-exact") {
    TempDir tmp;
    Corpus corpus;
    corpus.add({"d1", "a", ""});
    corpus.add({"d2", "b", ""});
    std::vector<std::pair<std::string, EmbeddingVector>> rows{
        {"d1", EmbeddingVector({0.125, -2.5, 0.75})},
        {"d2", EmbeddingVector({1.0, 0.0009765625, -8.0})},
    };
    io::save_embeddings(tmp.file("e.bin"), rows);
    io::EmbeddingTable table = io::load_embeddings(tmp.file("e.bin"), corpus);
    REQUIRE(table.size() == 2);
    CHECK(table.at("d1") == rows[0].second);  // values picked to be f32-exact
    CHECK(table.at("d2") == rows[1].second);

    io::EmbeddingTable bare = io::load_embedding_table(tmp.file("e.bin"));
    CHECK(bare.size() == 2);
}

TEST_CASE("embedding loader errors") {
    TempDir tmp;
    Corpus corpus;
    corpus.add({"d1", "a", ""});
    corpus.add({"d3", "c", ""});
    std::vector<std::pair<std::string, EmbeddingVector>> rows{
        {"d1", EmbeddingVector({1.0, 2.0})},
        {"d2", EmbeddingVector({3.0, 4.0})},
    };
    io::save_embeddings(tmp.file("e.bin"), rows);
    // d3 lacks a vector.
    CHECK_THROWS_AS(io::load_embeddings(tmp.file("e.bin"), corpus), FormatError);

    // Sidecar id count disagreeing with the header.
    write_file(tmp.file("e.bin.ids"), "d1\n");
    CHECK_THROWS_AS(io::load_embedding_table(tmp.file("e.bin")), FormatError);

    // Truncated payload.
    std::string bytes = io::read_file(tmp.file("e.bin"));
    write_file(tmp.file("t.bin"), bytes.substr(0, bytes.size() - 4));
    write_file(tmp.file("t.bin.ids"), "d1\nd2\n");
    CHECK_THROWS_AS(io::load_embedding_table(tmp.file("t.bin")), FormatError);

    // Ragged dimensions rejected at save time.
    std::vector<std::pair<std::string, EmbeddingVector>> ragged{
        {"d1", EmbeddingVector({1.0})},
        {"d2", EmbeddingVector({1.0, 2.0})},
    };
    CHECK_THROWS_AS(io::save_embeddings(tmp.file("r.bin"), ragged), FormatError);
}

TEST_CASE("run files round-trip with exact scores") {
    TempDir tmp;
    std::map<std::string, RankedList> run;
    run.emplace("q1", RankedList::from_ordered(
                          "q1", Stage::Fused,
                          {{"d2", 0.03278688524590164}, {"d1", 0.03252247488101534}}));
    run.emplace("q2", RankedList::from_ordered("q2", Stage::Retrieval, {}));
    io::save_run(run, tmp.file("run.jsonl"));
    auto loaded = io::load_run(tmp.file("run.jsonl"));
    REQUIRE(loaded.size() == 2);
    CHECK(loaded.at("q1").stage() == Stage::Fused);
    CHECK(loaded.at("q1").entries()[0].score == 0.03278688524590164);
    CHECK(loaded.at("q1").entries()[1].score == 0.03252247488101534);
    CHECK(loaded.at("q2").empty());
}

TEST_CASE("run loader rejects malformed rankings") {
    TempDir tmp;
    write_file(tmp.file("bad.jsonl"),
               R"({"query_id":"q1","stage":"retrieval","entries":[["d1",0.1],["d2",0.9]]})"
               "\n");
    CHECK_THROWS_WITH_AS(io::load_run(tmp.file("bad.jsonl")), doctest::Contains("bad.jsonl:1"),
                         FormatError);
    write_file(tmp.file("dupq.jsonl"),
               R"({"query_id":"q1","stage":"retrieval","entries":[]})"
               "\n"
               R"({"query_id":"q1","stage":"retrieval","entries":[]})"
               "\n");
    CHECK_THROWS_AS(io::load_run(tmp.file("dupq.jsonl")), FormatError);
}

TEST_CASE("permutation and negatives records round-trip") {
    TempDir tmp;
    std::vector<io::PermutationRecord> perms{{"q1", 1, {2, 5, 1}}, {"q1", 2, {1, 2, 3}}};
    io::save_permutations(perms, tmp.file("perms.jsonl"));
    auto loaded = io::load_permutations(tmp.file("perms.jsonl"));
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].pass == 1);
    CHECK(loaded[1].indices == std::vector<int>{1, 2, 3});

    std::vector<io::NegativesRecord> negs{{"q1", {"d9", "d7"}}};
    io::save_negatives(negs, tmp.file("negs.jsonl"));
    auto nloaded = io::load_negatives(tmp.file("negs.jsonl"));
    REQUIRE(nloaded.size() == 1);
    CHECK(nloaded[0].negatives == std::vector<std::string>{"d9", "d7"});
}

TEST_CASE("loss trace format") {
    TempDir tmp;
    io::save_loss_trace({2.0, 1.0, 0.5}, tmp.file("trace.txt"));
    std::string text = io::read_file(tmp.file("trace.txt"));
    CHECK(text.substr(0, 2) == "0 ");
    CHECK(text.find("\n1 ") != std::string::npos);
    CHECK(text.find("0.5") != std::string::npos);
}

TEST_CASE("caption cache journals and reloads") {
    TempDir tmp;
    std::string path = tmp.file("cache.jsonl");
    {
        io::CaptionCache cache(path);
        CHECK(cache.size() == 0);
        CHECK_FALSE(cache.get("q1").has_value());
        cache.put("q1", "first");
        cache.put("q2", "second");
        cache.put("q1", "revised");
        CHECK(*cache.get("q1") == "revised");
    }
    io::CaptionCache reloaded(path);
    CHECK(reloaded.size() == 2);
    CHECK(*reloaded.get("q1") == "revised");  // last record wins
    CHECK(*reloaded.get("q2") == "second");

    io::CaptionCache memory_only;
    memory_only.put("q", "v");
    CHECK(*memory_only.get("q") == "v");
    CHECK(memory_only.path().empty());
}
