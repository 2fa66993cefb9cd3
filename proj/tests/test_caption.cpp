#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "helpers.hpp"
#include "xrr/caption.hpp"

using namespace xrr;
using namespace xrr::caption;
using testutil::TempDir;

namespace {

llm::LlmClient mock_client(llm::FixtureStore store,
                           llm::OnMissing on_missing = llm::OnMissing::Echo,
                           std::shared_ptr<llm::MockBackend>* out = nullptr) {
    auto backend = std::make_shared<llm::MockBackend>(std::move(store), on_missing);
    if (out) *out = backend;
    llm::RetryPolicy retry;
    retry.attempts = 1;
    retry.base_delay_ms = 1;
    retry.jitter_seed = 1;
    return llm::LlmClient(backend, retry);
}

Query image_query(const std::string& id, const std::string& text,
                  std::vector<std::string> refs = {"img.png"}) {
    Query q = testutil::query(id, text);
    q.image_refs = std::move(refs);
    return q;
}

} // namespace

TEST_CASE("combine joins question and caption with the literal prefix") {
    CHECK(combine("What is the cutoff frequency?", "an RC low-pass filter") ==
          "What is the cutoff frequency?\nImage Description: an RC low-pass filter");
    CHECK(combine("bare question", "") == "bare question");
}

TEST_CASE("combine_query normalizes empty captions to absent") {
    Query q = testutil::query("q1", "text");
    q.caption = "";
    q = combine_query(std::move(q));
    CHECK_FALSE(q.caption.has_value());
    CHECK(*q.combined == "text");

    Query with = testutil::query("q2", "text");
    with.caption = "cap";
    with = combine_query(std::move(with));
    CHECK(*with.combined == "text\nImage Description: cap");
}

TEST_CASE("caption request shape") {
    PipelineConfig config;
    Query q = image_query("q1", "what is shown?");
    llm::CompletionRequest request = build_request(q, "img.png", -1, config);
    CHECK(request.tag == "caption");
    CHECK(request.query_id == "q1");
    CHECK(request.pass == -1);
    CHECK(request.temperature == 0.0);  // deterministic captions
    CHECK(request.max_tokens == 1024);
    REQUIRE(request.messages.size() == 2);
    CHECK(request.messages[0].role == "system");
    CHECK(request.messages[1].image_refs == std::vector<std::string>{"img.png"});
    CHECK_FALSE(default_caption_prompt().empty());

    config.caption_prompt = "override";
    CHECK(build_request(q, "img.png", -1, config).messages[0].content == "override");
}

TEST_CASE("caption_query fills caption and combined from the backend") {
    llm::FixtureStore store;
    store.add("caption", "q1", "a full-wave rectifier");
    io::CaptionCache cache;
    PipelineConfig config;
    Query q = caption_query(image_query("q1", "identify the topology"), mock_client(store),
                            cache, config);
    CHECK(*q.caption == "a full-wave rectifier");
    CHECK(*q.combined == "identify the topology\nImage Description: a full-wave rectifier");
    CHECK(*cache.get("q1") == "a full-wave rectifier");
}

TEST_CASE("multi-image captions join with a blank line, keyed by image index") {
    llm::FixtureStore store;
    store.add("caption", "q1", 0, "first view");
    store.add("caption", "q1", 1, "second view");
    io::CaptionCache cache;
    PipelineConfig config;
    Query q = caption_query(image_query("q1", "compare", {"a.png", "b.png"}),
                            mock_client(store), cache, config);
    CHECK(*q.caption == "first view\n\nsecond view");
}

TEST_CASE("pre-supplied and cached captions short-circuit the backend") {
    std::shared_ptr<llm::MockBackend> backend;
    llm::LlmClient client = mock_client(llm::FixtureStore{}, llm::OnMissing::Fail, &backend);
    PipelineConfig config;

    io::CaptionCache cache;
    Query pre = image_query("q1", "text");
    pre.caption = "already described";
    Query out = caption_query(std::move(pre), client, cache, config);
    CHECK(*out.combined == "text\nImage Description: already described");
    CHECK(backend->total_calls() == 0);

    cache.put("q2", "from cache");
    Query cached = caption_query(image_query("q2", "text"), client, cache, config);
    CHECK(*cached.caption == "from cache");
    CHECK(backend->total_calls() == 0);
}

TEST_CASE("queries without images make no calls") {
    std::shared_ptr<llm::MockBackend> backend;
    llm::LlmClient client = mock_client(llm::FixtureStore{}, llm::OnMissing::Fail, &backend);
    io::CaptionCache cache;
    PipelineConfig config;
    Query q = caption_query(testutil::query("q1", "text only"), client, cache, config);
    CHECK_FALSE(q.caption.has_value());
    CHECK(*q.combined == "text only");
    CHECK(backend->total_calls() == 0);
}

TEST_CASE("caption_all caches, counts, and tolerates per-query failure") {
    llm::FixtureStore store;
    store.add("caption", "q1", "described");
    // q2 has no fixture and the backend is in fail mode.
    std::shared_ptr<llm::MockBackend> backend;
    llm::LlmClient client = mock_client(store, llm::OnMissing::Fail, &backend);
    PipelineConfig config;
    io::CaptionCache cache;
    std::vector<std::string> warnings;
    CaptionStats stats;

    std::vector<Query> queries{image_query("q1", "first"), image_query("q2", "second"),
                               testutil::query("q3", "no image")};
    auto out = caption_all(std::move(queries), client, cache, config, &warnings, &stats);
    REQUIRE(out.size() == 3);
    CHECK(*out[0].caption == "described");
    CHECK_FALSE(out[1].caption.has_value());
    CHECK(*out[1].combined == "second");  // proceeds caption-less
    CHECK(*out[2].combined == "no image");
    CHECK(stats.backend_calls == 2);
    CHECK(stats.cache_hits == 0);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("q2") != std::string::npos);

    // Second round: q1 now comes from the cache.
    warnings.clear();
    CaptionStats second;
    auto again = caption_all({image_query("q1", "first")}, client, cache, config, &warnings,
                             &second);
    CHECK(*again[0].caption == "described");
    CHECK(second.backend_calls == 0);
    CHECK(second.cache_hits == 1);
}

TEST_CASE("caption_on=false ignores images and pre-supplied captions") {
    std::shared_ptr<llm::MockBackend> backend;
    llm::LlmClient client = mock_client(llm::FixtureStore{}, llm::OnMissing::Fail, &backend);
    PipelineConfig config;
    config.caption_on = false;
    io::CaptionCache cache;
    CaptionStats stats;

    Query q = image_query("q1", "raw question");
    q.caption = "stale caption";
    auto out = caption_all({std::move(q)}, client, cache, config, nullptr, &stats);
    CHECK_FALSE(out[0].caption.has_value());
    CHECK(*out[0].combined == "raw question");
    CHECK(stats.backend_calls == 0);
    CHECK(backend->total_calls() == 0);
}

TEST_CASE("caption cache persists across clients") {
    TempDir tmp;
    PipelineConfig config;
    {
        llm::FixtureStore store;
        store.add("caption", "q1", "persisted");
        io::CaptionCache cache(tmp.file("cache.jsonl"));
        caption_query(image_query("q1", "t"), mock_client(store), cache, config);
    }
    io::CaptionCache reopened(tmp.file("cache.jsonl"));
    std::shared_ptr<llm::MockBackend> backend;
    llm::LlmClient client = mock_client(llm::FixtureStore{}, llm::OnMissing::Fail, &backend);
    Query q = caption_query(image_query("q1", "t"), client, reopened, config);
    CHECK(*q.caption == "persisted");
    CHECK(backend->total_calls() == 0);
}
