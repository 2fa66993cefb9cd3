#include "xrr/io.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace xrr::io {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failure on '" + path + "'");
    return buf.str();
}

void atomic_write_file(const std::string& path, const std::string& content) {
    fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
    }
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw IoError("write failure on '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw IoError("cannot promote '" + tmp.string() + "' to '" + path + "': " + ec.message());
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

std::string file_digest(const std::string& path) {
    std::uint64_t h = fnv1a64(read_file(path));
    static const char* hex = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = hex[h & 0xf];
        h >>= 4;
    }
    return out;
}

namespace {

// Applies `fn` to each non-empty line; errors name the 1-based line number.
template <typename Fn>
void for_each_record(const std::string& path, Fn fn) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        fn(line, line_no);
    }
    if (in.bad()) throw IoError("read failure on '" + path + "'");
}

json parse_record(const std::string& path, const std::string& line, std::size_t line_no) {
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object()) {
        throw FormatError(path + ":" + std::to_string(line_no) + ": malformed record");
    }
    return record;
}

std::string require_string(const json& record, const char* key,
                           const std::string& path, std::size_t line_no) {
    auto it = record.find(key);
    if (it == record.end() || !it->is_string() || it->get<std::string>().empty()) {
        throw FormatError(path + ":" + std::to_string(line_no) +
                          ": missing or empty field '" + std::string(key) + "'");
    }
    return it->get<std::string>();
}

std::string optional_string(const json& record, const char* key) {
    auto it = record.find(key);
    if (it == record.end() || !it->is_string()) return {};
    return it->get<std::string>();
}

} // namespace

Corpus load_corpus(const std::string& path) {
    Corpus corpus;
    for_each_record(path, [&](const std::string& line, std::size_t line_no) {
        json record = parse_record(path, line, line_no);
        Document doc;
        doc.id = require_string(record, "id", path, line_no);
        doc.text = require_string(record, "text", path, line_no);
        doc.domain = optional_string(record, "domain");
        try {
            corpus.add(std::move(doc));
        } catch (const FormatError& e) {
            throw FormatError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    });
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
    std::string out;
    for (const Document& doc : corpus.docs()) {
        json record{{"id", doc.id}, {"text", doc.text}};
        if (!doc.domain.empty()) record["domain"] = doc.domain;
        out += record.dump();
        out += '\n';
    }
    atomic_write_file(path, out);
}

std::vector<Query> load_queries(const std::string& path) {
    std::vector<Query> queries;
    std::map<std::string, std::size_t> seen;
    for_each_record(path, [&](const std::string& line, std::size_t line_no) {
        json record = parse_record(path, line, line_no);
        Query q;
        q.id = require_string(record, "id", path, line_no);
        q.text = require_string(record, "text", path, line_no);
        if (auto it = record.find("image_ref"); it != record.end() && it->is_string()) {
            std::string ref = it->get<std::string>();
            if (!ref.empty()) q.image_refs.push_back(std::move(ref));
        }
        if (auto it = record.find("image_refs"); it != record.end() && it->is_array()) {
            for (const auto& ref : *it) {
                if (ref.is_string() && !ref.get<std::string>().empty()) {
                    q.image_refs.push_back(ref.get<std::string>());
                }
            }
        }
        if (auto cap = optional_string(record, "caption"); !cap.empty()) q.caption = cap;
        if (auto comb = optional_string(record, "combined"); !comb.empty()) q.combined = comb;
        if (auto exp = optional_string(record, "expanded"); !exp.empty()) q.expanded = exp;
        q.domain = optional_string(record, "domain");
        if (!seen.emplace(q.id, line_no).second) {
            throw FormatError(path + ":" + std::to_string(line_no) +
                              ": duplicate query id '" + q.id + "'");
        }
        queries.push_back(std::move(q));
    });
    return queries;
}

void save_queries(const std::vector<Query>& queries, const std::string& path) {
    std::string out;
    for (const Query& q : queries) {
        json record{{"id", q.id}, {"text", q.text}};
        if (!q.image_refs.empty()) record["image_refs"] = q.image_refs;
        if (q.caption) record["caption"] = *q.caption;
        if (q.combined) record["combined"] = *q.combined;
        if (q.expanded) record["expanded"] = *q.expanded;
        if (!q.domain.empty()) record["domain"] = q.domain;
        out += record.dump();
        out += '\n';
    }
    atomic_write_file(path, out);
}

Qrels load_qrels(const std::string& path, std::vector<std::string>* warnings) {
    Qrels qrels;
    for_each_record(path, [&](const std::string& line, std::size_t line_no) {
        std::istringstream fields(line);
        std::string qid, did, grade_str, extra;
        if (!(fields >> qid >> did >> grade_str) || (fields >> extra)) {
            throw FormatError(path + ":" + std::to_string(line_no) +
                              ": expected 'query_id doc_id grade'");
        }
        int grade = 0;
        std::size_t consumed = 0;
        try {
            grade = std::stoi(grade_str, &consumed);
        } catch (const std::exception&) {
            consumed = 0;
        }
        if (consumed != grade_str.size()) {
            throw FormatError(path + ":" + std::to_string(line_no) +
                              ": non-integer grade '" + grade_str + "'");
        }
        if (grade < 0) {
            throw FormatError(path + ":" + std::to_string(line_no) +
                              ": negative grade for (" + qid + ", " + did + ")");
        }
        if (qrels.set(qid, did, grade) && warnings) {
            warnings->push_back("qrels: duplicate judgment for (" + qid + ", " + did +
                                ") at line " + std::to_string(line_no) + "; later value kept");
        }
    });
    return qrels;
}

void save_qrels(const Qrels& qrels, const std::string& path) {
    std::string out;
    for (const auto& [qid, judgments] : qrels.all()) {
        for (const auto& [did, grade] : judgments) {
            out += qid;
            out += ' ';
            out += did;
            out += ' ';
            out += std::to_string(grade);
            out += '\n';
        }
    }
    atomic_write_file(path, out);
}

namespace {

std::uint32_t read_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void append_u32_le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

float read_f32_le(const unsigned char* p) {
    std::uint32_t bits = read_u32_le(p);
    float value;
    std::memcpy(&value, &bits, sizeof(float));
    return value;
}

void append_f32_le(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof(float));
    append_u32_le(out, bits);
}

std::vector<std::string> load_id_sidecar(const std::string& path, std::size_t expected) {
    std::vector<std::string> ids;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open embedding id sidecar '" + path + "'");
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ids.push_back(line);
    }
    if (ids.size() != expected) {
        throw FormatError("embedding id sidecar '" + path + "' lists " +
                          std::to_string(ids.size()) + " ids, expected " +
                          std::to_string(expected));
    }
    return ids;
}

} // namespace

EmbeddingTable load_embedding_table(const std::string& path) {
    std::string bytes = read_file(path);
    if (bytes.size() < 8) throw FormatError("embedding file '" + path + "' truncated header");
    const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
    std::uint32_t count = read_u32_le(data);
    std::uint32_t dim = read_u32_le(data + 4);
    if (dim == 0) throw FormatError("embedding file '" + path + "' declares dimension 0");
    std::size_t expected = 8 + static_cast<std::size_t>(count) * dim * 4;
    if (bytes.size() != expected) {
        throw FormatError("embedding file '" + path + "' has " + std::to_string(bytes.size()) +
                          " bytes, expected " + std::to_string(expected));
    }
    std::vector<std::string> ids = load_id_sidecar(path + ".ids", count);

    EmbeddingTable table;
    const unsigned char* cursor = data + 8;
    for (std::uint32_t row = 0; row < count; ++row) {
        std::vector<double> values(dim);
        for (std::uint32_t j = 0; j < dim; ++j) {
            values[j] = static_cast<double>(read_f32_le(cursor));
            cursor += 4;
        }
        if (!table.emplace(ids[row], EmbeddingVector(std::move(values))).second) {
            throw FormatError("duplicate id '" + ids[row] + "' in embedding file '" + path + "'");
        }
    }
    return table;
}

EmbeddingTable load_embeddings(const std::string& path, const Corpus& corpus) {
    EmbeddingTable table = load_embedding_table(path);
    std::vector<std::string> missing;
    for (const Document& doc : corpus.docs()) {
        if (!table.count(doc.id)) missing.push_back(doc.id);
    }
    if (!missing.empty()) {
        std::string list;
        for (std::size_t i = 0; i < missing.size() && i < 10; ++i) {
            if (i) list += ", ";
            list += missing[i];
        }
        if (missing.size() > 10) list += ", ...";
        throw FormatError("embedding file '" + path + "' is missing vectors for " +
                          std::to_string(missing.size()) + " document(s): " + list);
    }
    return table;
}

void save_embeddings(const std::string& path,
                     const std::vector<std::pair<std::string, EmbeddingVector>>& rows) {
    std::size_t dim = rows.empty() ? 0 : rows.front().second.dim();
    for (const auto& [id, vec] : rows) {
        if (vec.dim() != dim) {
            throw FormatError("embedding rows disagree on dimension (" + std::to_string(dim) +
                              " vs " + std::to_string(vec.dim()) + " for '" + id + "')");
        }
    }
    std::string bytes;
    bytes.reserve(8 + rows.size() * dim * 4);
    append_u32_le(bytes, static_cast<std::uint32_t>(rows.size()));
    append_u32_le(bytes, static_cast<std::uint32_t>(dim));
    std::string ids;
    for (const auto& [id, vec] : rows) {
        for (std::size_t j = 0; j < dim; ++j) append_f32_le(bytes, static_cast<float>(vec[j]));
        ids += id;
        ids += '\n';
    }
    atomic_write_file(path, bytes);
    atomic_write_file(path + ".ids", ids);
}

std::map<std::string, RankedList> load_run(const std::string& path) {
    std::map<std::string, RankedList> run;
    for_each_record(path, [&](const std::string& line, std::size_t line_no) {
        json record = parse_record(path, line, line_no);
        std::string qid = require_string(record, "query_id", path, line_no);
        std::string stage_str = require_string(record, "stage", path, line_no);
        auto entries_it = record.find("entries");
        if (entries_it == record.end() || !entries_it->is_array()) {
            throw FormatError(path + ":" + std::to_string(line_no) + ": missing entries array");
        }
        std::vector<ScoredDoc> entries;
        entries.reserve(entries_it->size());
        for (const auto& pair : *entries_it) {
            if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() ||
                !pair[1].is_number()) {
                throw FormatError(path + ":" + std::to_string(line_no) +
                                  ": entry must be [doc_id, score]");
            }
            entries.push_back({pair[0].get<std::string>(), pair[1].get<double>()});
        }
        try {
            RankedList list =
                RankedList::from_ordered(qid, stage_from_name(stage_str), std::move(entries));
            if (!run.emplace(qid, std::move(list)).second) {
                throw FormatError("duplicate query id '" + qid + "'");
            }
        } catch (const FormatError& e) {
            throw FormatError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    });
    return run;
}

void save_run(const std::map<std::string, RankedList>& run, const std::string& path) {
    std::string out;
    for (const auto& [qid, list] : run) {
        json entries = json::array();
        for (const ScoredDoc& e : list.entries()) {
            entries.push_back(json::array({e.doc_id, e.score}));
        }
        json record{{"query_id", qid}, {"stage", stage_name(list.stage())}, {"entries", entries}};
        out += record.dump();
        out += '\n';
    }
    atomic_write_file(path, out);
}

std::vector<PermutationRecord> load_permutations(const std::string& path) {
    std::vector<PermutationRecord> records;
    for_each_record(path, [&](const std::string& line, std::size_t line_no) {
        json record = parse_record(path, line, line_no);
        PermutationRecord out;
        out.query_id = require_string(record, "query_id", path, line_no);
        out.pass = record.value("pass", 1);
        auto it = record.find("indices");
        if (it == record.end() || !it->is_array()) {
            throw FormatError(path + ":" + std::to_string(line_no) + ": missing indices array");
        }
        for (const auto& v : *it) {
            if (!v.is_number_integer()) {
                throw FormatError(path + ":" + std::to_string(line_no) +
                                  ": indices must be integers");
            }
            out.indices.push_back(v.get<int>());
        }
        records.push_back(std::move(out));
    });
    return records;
}

void save_permutations(const std::vector<PermutationRecord>& records, const std::string& path) {
    std::string out;
    for (const auto& rec : records) {
        json record{{"query_id", rec.query_id}, {"pass", rec.pass}, {"indices", rec.indices}};
        out += record.dump();
        out += '\n';
    }
    atomic_write_file(path, out);
}

std::vector<NegativesRecord> load_negatives(const std::string& path) {
    std::vector<NegativesRecord> records;
    for_each_record(path, [&](const std::string& line, std::size_t line_no) {
        json record = parse_record(path, line, line_no);
        NegativesRecord out;
        out.query_id = require_string(record, "query_id", path, line_no);
        auto it = record.find("negatives");
        if (it == record.end() || !it->is_array()) {
            throw FormatError(path + ":" + std::to_string(line_no) + ": missing negatives array");
        }
        for (const auto& v : *it) {
            if (!v.is_string()) {
                throw FormatError(path + ":" + std::to_string(line_no) +
                                  ": negatives must be doc id strings");
            }
            out.negatives.push_back(v.get<std::string>());
        }
        records.push_back(std::move(out));
    });
    return records;
}

void save_negatives(const std::vector<NegativesRecord>& records, const std::string& path) {
    std::string out;
    for (const auto& rec : records) {
        json record{{"query_id", rec.query_id}, {"negatives", rec.negatives}};
        out += record.dump();
        out += '\n';
    }
    atomic_write_file(path, out);
}

void save_loss_trace(const std::vector<double>& trace, const std::string& path) {
    std::string out;
    for (std::size_t step = 0; step < trace.size(); ++step) {
        out += std::to_string(step);
        out += ' ';
        out += json(trace[step]).dump();
        out += '\n';
    }
    atomic_write_file(path, out);
}

CaptionCache::CaptionCache(std::string path) : path_(std::move(path)) {
    if (!fs::exists(path_)) return;
    for_each_record(path_, [&](const std::string& line, std::size_t line_no) {
        json record = parse_record(path_, line, line_no);
        std::string qid = require_string(record, "query_id", path_, line_no);
        entries_[qid] = record.value("caption", "");
    });
}

std::optional<std::string> CaptionCache::get(const std::string& query_id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = entries_.find(query_id);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void CaptionCache::put(const std::string& query_id, const std::string& caption) {
    std::lock_guard<std::mutex> lock(mutex_);
    entries_[query_id] = caption;
    if (path_.empty()) return;
    fs::path target(path_);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
    }
    std::ofstream out(path_, std::ios::app);
    if (!out) throw IoError("cannot open caption cache '" + path_ + "' for append");
    json record{{"query_id", query_id}, {"caption", caption}};
    out << record.dump() << '\n';
    if (!out) throw IoError("write failure on caption cache '" + path_ + "'");
}

std::size_t CaptionCache::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
}

} // namespace xrr::io
