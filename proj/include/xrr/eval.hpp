#pragma once

#include <map>
#include <string>
#include <vector>

#include "xrr/core.hpp"

namespace xrr {

/// nDCG@k with gain 2^grade - 1 and discount log2(i + 1). The ideal
/// ordering ranges over all judged grades for the query. Queries with no
/// relevant documents score 0.
double ndcg_at_k(const RankedList& ranking, const Qrels& qrels, int k);

struct EvaluationReport {
    int k = 10;
    std::map<std::string, double> per_query;
    std::map<std::string, double> per_domain;       // mean over the domain's queries
    std::map<std::string, int> domain_query_count;
    double macro = 0.0;  // unweighted mean over domains
    double micro = 0.0;  // mean over queries
    std::vector<std::string> warnings;
    int upstream_warnings = 0;  // fallbacks recorded by earlier stages
};

/// Scores a run against the query set. Queries missing from the run
/// contribute 0 with a warning, as do judged-empty queries; run entries
/// for unknown query ids are an error.
EvaluationReport evaluate_run(const std::map<std::string, RankedList>& run, const Qrels& qrels,
                              const std::vector<Query>& queries, int k = 10);

/// Aligned plain-text table: one row per domain plus macro/micro rows.
std::string render_report_text(const EvaluationReport& report);

/// Machine-readable report (stable key order, no timestamps).
std::string report_to_json(const EvaluationReport& report);

/// One labeled column of a comparative report.
struct ComparisonColumn {
    std::string label;
    EvaluationReport report;
};

/// Domains-by-systems table with an average row, matching the
/// single-report renderer's alignment rules.
std::string render_comparison_text(const std::vector<ComparisonColumn>& columns);

std::string comparison_to_json(const std::vector<ComparisonColumn>& columns);

} // namespace xrr
