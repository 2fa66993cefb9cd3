#include "xrr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "json.hpp"

#include "xrr/error.hpp"

using json = nlohmann::json;

namespace xrr {

double ndcg_at_k(const RankedList& ranking, const Qrels& qrels, int k) {
    if (k < 1) throw ConfigError("nDCG cutoff must be at least 1");

    const auto& judgments = qrels.judgments_for(ranking.query_id());
    std::vector<int> grades;
    grades.reserve(judgments.size());
    for (const auto& [doc_id, grade] : judgments) grades.push_back(grade);
    std::sort(grades.begin(), grades.end(), std::greater<int>());

    double idcg = 0;
    for (std::size_t i = 0; i < grades.size() && i < static_cast<std::size_t>(k); ++i) {
        idcg += (std::exp2(grades[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    }
    if (idcg == 0.0) return 0.0;

    double dcg = 0;
    const auto& entries = ranking.entries();
    for (std::size_t i = 0; i < entries.size() && i < static_cast<std::size_t>(k); ++i) {
        int grade = qrels.grade(ranking.query_id(), entries[i].doc_id);
        if (grade > 0) {
            dcg += (std::exp2(grade) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
        }
    }
    return dcg / idcg;
}

EvaluationReport evaluate_run(const std::map<std::string, RankedList>& run, const Qrels& qrels,
                              const std::vector<Query>& queries, int k) {
    std::set<std::string> known;
    for (const Query& query : queries) known.insert(query.id);
    for (const auto& [query_id, list] : run) {
        if (!known.count(query_id)) {
            throw FormatError("run contains unknown query '" + query_id + "'");
        }
    }

    EvaluationReport report;
    report.k = k;
    std::map<std::string, double> domain_sums;
    for (const Query& query : queries) {
        double score = 0.0;
        auto it = run.find(query.id);
        if (it == run.end()) {
            report.warnings.push_back("run has no ranking for query '" + query.id + "'");
        } else {
            if (!qrels.has_judgments(query.id)) {
                report.warnings.push_back("query '" + query.id +
                                          "' has no relevance judgments; scored 0");
            }
            score = ndcg_at_k(it->second, qrels, k);
        }
        report.per_query[query.id] = score;
        domain_sums[query.domain] += score;
        report.domain_query_count[query.domain] += 1;
    }

    double macro_sum = 0;
    for (const auto& [domain, sum] : domain_sums) {
        double mean = sum / report.domain_query_count[domain];
        report.per_domain[domain] = mean;
        macro_sum += mean;
    }
    if (!report.per_domain.empty()) {
        report.macro = macro_sum / static_cast<double>(report.per_domain.size());
    }
    if (!report.per_query.empty()) {
        double total = 0;
        for (const auto& [query_id, score] : report.per_query) total += score;
        report.micro = total / static_cast<double>(report.per_query.size());
    }
    return report;
}

namespace {

std::string format_score(double value) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4) << value;
    return out.str();
}

std::string pad_right(const std::string& text, std::size_t width) {
    return text + std::string(width > text.size() ? width - text.size() : 0, ' ');
}

std::string pad_left(const std::string& text, std::size_t width) {
    return std::string(width > text.size() ? width - text.size() : 0, ' ') + text;
}

std::string domain_label(const std::string& domain) {
    return domain.empty() ? "(none)" : domain;
}

json report_to_json_object(const EvaluationReport& report) {
    json per_domain = json::object();
    for (const auto& [domain, mean] : report.per_domain) per_domain[domain_label(domain)] = mean;
    json counts = json::object();
    for (const auto& [domain, count] : report.domain_query_count) {
        counts[domain_label(domain)] = count;
    }
    return json{{"k", report.k},
                {"macro", report.macro},
                {"micro", report.micro},
                {"per_domain", per_domain},
                {"domain_query_count", counts},
                {"per_query", report.per_query},
                {"warnings", report.warnings},
                {"upstream_warnings", report.upstream_warnings}};
}

} // namespace

std::string render_report_text(const EvaluationReport& report) {
    std::string metric = "nDCG@" + std::to_string(report.k);
    std::size_t name_width = std::string("macro average").size();
    for (const auto& [domain, mean] : report.per_domain) {
        name_width = std::max(name_width, domain_label(domain).size());
    }
    std::size_t count_width = std::string("queries").size();
    std::size_t score_width = metric.size();

    std::string out;
    out += pad_right("domain", name_width) + "  " + pad_left("queries", count_width) + "  " +
           pad_left(metric, score_width) + "\n";
    for (const auto& [domain, mean] : report.per_domain) {
        out += pad_right(domain_label(domain), name_width) + "  " +
               pad_left(std::to_string(report.domain_query_count.at(domain)), count_width) +
               "  " + pad_left(format_score(mean), score_width) + "\n";
    }
    out += "\n";
    out += pad_right("macro average", name_width) + "  " + pad_left("", count_width) + "  " +
           pad_left(format_score(report.macro), score_width) + "\n";
    out += pad_right("micro average", name_width) + "  " + pad_left("", count_width) + "  " +
           pad_left(format_score(report.micro), score_width) + "\n";
    if (!report.warnings.empty()) {
        out += "\nwarnings (" + std::to_string(report.warnings.size()) + "):\n";
        for (const std::string& warning : report.warnings) out += "  " + warning + "\n";
    }
    if (report.upstream_warnings > 0) {
        out += "\nupstream stage warnings: " + std::to_string(report.upstream_warnings) + "\n";
    }
    return out;
}

std::string report_to_json(const EvaluationReport& report) {
    return report_to_json_object(report).dump(2) + "\n";
}

std::string render_comparison_text(const std::vector<ComparisonColumn>& columns) {
    if (columns.empty()) throw FormatError("comparison needs at least one column");

    std::set<std::string> domains;
    for (const ComparisonColumn& column : columns) {
        for (const auto& [domain, mean] : column.report.per_domain) domains.insert(domain);
    }
    std::size_t name_width = std::string("macro average").size();
    for (const std::string& domain : domains) {
        name_width = std::max(name_width, domain_label(domain).size());
    }
    std::vector<std::size_t> widths;
    for (const ComparisonColumn& column : columns) {
        widths.push_back(std::max<std::size_t>(column.label.size(), 7));
    }

    std::string out = pad_right("domain", name_width);
    for (std::size_t c = 0; c < columns.size(); ++c) {
        out += "  " + pad_left(columns[c].label, widths[c]);
    }
    out += "\n";
    for (const std::string& domain : domains) {
        out += pad_right(domain_label(domain), name_width);
        for (std::size_t c = 0; c < columns.size(); ++c) {
            auto it = columns[c].report.per_domain.find(domain);
            out += "  " + pad_left(it == columns[c].report.per_domain.end()
                                       ? std::string("-")
                                       : format_score(it->second),
                                   widths[c]);
        }
        out += "\n";
    }
    out += pad_right("macro average", name_width);
    for (std::size_t c = 0; c < columns.size(); ++c) {
        out += "  " + pad_left(format_score(columns[c].report.macro), widths[c]);
    }
    out += "\n";
    out += pad_right("micro average", name_width);
    for (std::size_t c = 0; c < columns.size(); ++c) {
        out += "  " + pad_left(format_score(columns[c].report.micro), widths[c]);
    }
    out += "\n";
    return out;
}

std::string comparison_to_json(const std::vector<ComparisonColumn>& columns) {
    if (columns.empty()) throw FormatError("comparison needs at least one column");
    json rows = json::array();
    for (const ComparisonColumn& column : columns) {
        rows.push_back({{"label", column.label}, {"report", report_to_json_object(column.report)}});
    }
    return json{{"columns", rows}}.dump(2) + "\n";
}

} // namespace xrr
