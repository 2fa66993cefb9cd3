#include "xrr/dataset.hpp"

#include <filesystem>
#include <random>
#include <vector>

#include "json.hpp"

#include "xrr/config.hpp"
#include "xrr/core.hpp"
#include "xrr/io.hpp"
#include "xrr/retriever.hpp"

using json = nlohmann::json;

namespace xrr::dataset {

namespace {

const std::vector<std::string> kCircuitWords = {
    "resistor",   "capacitor", "inductor",  "voltage",     "current",
    "oscillator", "amplifier", "impedance", "transistor",  "diode",
    "feedback",   "filter",    "relay",     "transformer", "rectifier"};

const std::vector<std::string> kChemistryWords = {
    "benzene",     "acid",   "titration", "enthalpy",       "polymer",
    "catalyst",    "isotope", "electrolyte", "oxidation",   "solvent",
    "buffer",      "ester",  "ketone",    "chromatography", "equilibrium"};

std::string two_digits(int n) {
    return (n < 10 ? "0" : "") + std::to_string(n);
}

/// Deterministic uniform double in [-1, 1); mt19937_64 output is
/// standard-mandated, so the data is identical across platforms.
double uniform_pm1(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) / 9007199254740992.0) * 2.0 - 1.0;
}

double quantize(double x) { return static_cast<double>(static_cast<float>(x)); }

struct DomainSpec {
    std::string name;
    const std::vector<std::string>* words;
    int doc_offset;    // first doc number (1-based)
    int query_offset;  // first query number (1-based)
};

std::string doc_text(const DomainSpec& domain, int local) {
    const auto& w = *domain.words;
    const std::string& wa = w[static_cast<std::size_t>(local) % w.size()];
    const std::string& wb = w[static_cast<std::size_t>(local + 4) % w.size()];
    const std::string& wc = w[static_cast<std::size_t>(local + 9) % w.size()];
    std::string text = "Working notes on " + wa + " behavior: how the " + wa +
                       " couples to the " + wb + " stage, when the " + wc +
                       " dominates, and which measurements separate " + wa + " effects from " +
                       wb + " drift.";
    if (local % 3 == 0) {
        text += " Includes a worked example with step by step calculations.";
    }
    return text;
}

} // namespace

DemoPaths write_demo_dataset(const std::string& dir) {
    std::filesystem::create_directories(dir);
    DemoPaths paths;
    paths.corpus = dir + "/corpus.jsonl";
    paths.queries = dir + "/queries.jsonl";
    paths.qrels = dir + "/qrels.txt";
    paths.doc_embeddings = dir + "/doc_embeddings.bin";
    paths.query_embeddings = dir + "/query_embeddings.bin";
    paths.fixtures_oracle = dir + "/fixtures_oracle.jsonl";
    paths.fixtures_identity = dir + "/fixtures_identity.jsonl";
    paths.config = dir + "/config.json";

    const std::vector<DomainSpec> domains = {{"circuits", &kCircuitWords, 1, 1},
                                             {"chemistry", &kChemistryWords, 26, 6}};
    constexpr int kDocsPerDomain = 25;
    constexpr int kQueriesPerDomain = 5;
    constexpr std::size_t kDim = 8;

    Corpus corpus;
    std::vector<Query> queries;
    Qrels qrels;
    std::string caption_fixtures, expand_fixtures, oracle_rerank, identity_rerank;

    for (const DomainSpec& domain : domains) {
        const auto& w = *domain.words;
        for (int local = 0; local < kDocsPerDomain; ++local) {
            Document doc;
            doc.id = "d" + two_digits(domain.doc_offset + local);
            doc.text = doc_text(domain, local);
            doc.domain = domain.name;
            corpus.add(std::move(doc));
        }
        for (int qi = 0; qi < kQueriesPerDomain; ++qi) {
            int primary_local = 2 * qi;
            int secondary_local = 2 * qi + 1;
            auto word = [&](int local, int shift) -> const std::string& {
                return w[static_cast<std::size_t>(local + shift) % w.size()];
            };
            Query query;
            query.id = "q" + two_digits(domain.query_offset + qi);
            query.text = "Why does the " + word(primary_local, 0) +
                         " respond like this when the " + word(secondary_local, 0) +
                         " is adjusted?";
            query.image_refs = {"images/" + query.id + ".png"};
            query.domain = domain.name;

            std::string primary_id = "d" + two_digits(domain.doc_offset + primary_local);
            std::string secondary_id = "d" + two_digits(domain.doc_offset + secondary_local);
            qrels.set(query.id, primary_id, 2);
            qrels.set(query.id, secondary_id, 1);

            std::string caption = "a labeled diagram showing a " + word(primary_local, 0) +
                                  " connected to a " + word(primary_local, 4) +
                                  " with annotated " + word(secondary_local, 0) + " readings";
            caption_fixtures +=
                json{{"tag", "caption"}, {"query_id", query.id}, {"response", caption}}.dump() +
                "\n";

            std::string expansion =
                "The question concerns the " + word(primary_local, 0) +
                " and its interaction with the " + word(primary_local, 4) +
                ". The essential problem is how the " + word(primary_local, 0) +
                " responds when the " + word(secondary_local, 0) +
                " is adjusted. Relevant background: the " + word(primary_local, 9) +
                " sets the operating region, while " + word(secondary_local, 4) +
                " effects and " + word(secondary_local, 9) +
                " behavior shape the transient. Useful directions include measuring the " +
                word(primary_local, 0) + " directly, separating " + word(primary_local, 4) +
                " drift from " + word(secondary_local, 0) +
                " coupling, and checking whether the " + word(primary_local, 0) +
                " dominates the response.";
            expand_fixtures +=
                json{{"tag", "expand"}, {"query_id", query.id}, {"response", expansion}}.dump() +
                "\n";

            queries.push_back(std::move(query));
        }
    }

    // Embeddings: documents are random; each query vector leans toward
    // its two relevant documents with enough noise that raw retrieval is
    // imperfect. Values are float32-quantized before any use.
    std::mt19937_64 rng(42);
    std::vector<std::pair<std::string, EmbeddingVector>> doc_rows;
    io::EmbeddingTable doc_table;
    for (const Document& doc : corpus.docs()) {
        std::vector<double> values(kDim);
        for (double& v : values) v = quantize(uniform_pm1(rng));
        EmbeddingVector vec(values);
        doc_rows.emplace_back(doc.id, vec);
        doc_table.emplace(doc.id, vec);
    }

    std::vector<std::pair<std::string, EmbeddingVector>> query_rows;
    for (const DomainSpec& domain : domains) {
        for (int qi = 0; qi < kQueriesPerDomain; ++qi) {
            std::string query_id = "q" + two_digits(domain.query_offset + qi);
            const EmbeddingVector& primary =
                doc_table.at("d" + two_digits(domain.doc_offset + 2 * qi));
            const EmbeddingVector& secondary =
                doc_table.at("d" + two_digits(domain.doc_offset + 2 * qi + 1));
            std::vector<double> values(kDim);
            for (std::size_t j = 0; j < kDim; ++j) {
                values[j] = quantize(0.6 * primary[j] + 0.3 * secondary[j] +
                                     0.45 * uniform_pm1(rng));
            }
            query_rows.emplace_back(query_id, EmbeddingVector(std::move(values)));
        }
    }

    // Rerank fixtures need the retrieval order the pipeline will see.
    DenseIndex index = DenseIndex::build(corpus, doc_table);
    constexpr int kK1 = 10;
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        const Query& query = queries[qi];
        RankedList retrieved =
            index.search(query_rows[qi].second, static_cast<int>(corpus.size()), query.id);

        const DomainSpec& domain = qi < 5 ? domains[0] : domains[1];
        int local = static_cast<int>(qi) % kQueriesPerDomain;
        std::string primary_id = "d" + two_digits(domain.doc_offset + 2 * local);
        std::string secondary_id = "d" + two_digits(domain.doc_offset + 2 * local + 1);
        int primary_pos = 0, secondary_pos = 0;
        for (std::size_t r = 0; r < retrieved.size(); ++r) {
            if (retrieved.entries()[r].doc_id == primary_id) {
                primary_pos = static_cast<int>(r) + 1;
            } else if (retrieved.entries()[r].doc_id == secondary_id) {
                secondary_pos = static_cast<int>(r) + 1;
            }
        }

        std::vector<int> oracle = {primary_pos, secondary_pos};
        for (int pos = 1; static_cast<int>(oracle.size()) < kK1; ++pos) {
            if (pos != primary_pos && pos != secondary_pos) oracle.push_back(pos);
        }
        std::string oracle_text, identity_text;
        for (int r = 0; r < kK1; ++r) {
            if (r) {
                oracle_text += " > ";
                identity_text += " > ";
            }
            oracle_text += "[" + std::to_string(oracle[static_cast<std::size_t>(r)]) + "]";
            identity_text += "[" + std::to_string(r + 1) + "]";
        }
        oracle_rerank +=
            json{{"tag", "rerank"}, {"query_id", query.id}, {"response", oracle_text}}.dump() +
            "\n";
        identity_rerank +=
            json{{"tag", "rerank"}, {"query_id", query.id}, {"response", identity_text}}.dump() +
            "\n";
    }

    io::save_corpus(corpus, paths.corpus);
    io::save_queries(queries, paths.queries);
    io::save_qrels(qrels, paths.qrels);
    io::save_embeddings(paths.doc_embeddings, doc_rows);
    io::save_embeddings(paths.query_embeddings, query_rows);
    io::atomic_write_file(paths.fixtures_oracle,
                          caption_fixtures + expand_fixtures + oracle_rerank);
    io::atomic_write_file(paths.fixtures_identity,
                          caption_fixtures + expand_fixtures + identity_rerank);

    EngineConfig config;
    config.paths.corpus = paths.corpus;
    config.paths.queries = paths.queries;
    config.paths.qrels = paths.qrels;
    config.paths.doc_embeddings = paths.doc_embeddings;
    config.paths.query_embeddings = paths.query_embeddings;
    config.paths.fixtures = paths.fixtures_oracle;
    config.paths.out_dir = "out";
    io::atomic_write_file(paths.config, engine_config_to_json(config) + "\n");

    return paths;
}

} // namespace xrr::dataset
