#pragma once

#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "semrank/error.hpp"

namespace semrank {

// ---------------------------------------------------------------------------
// Click-log labeling

struct ClickRecord {
    std::string query;
    std::string doc_id;
    std::uint64_t abstract_clicks = 0;
    std::uint64_t fulltext_clicks = 0;
    bool has_fulltext = false;
    std::uint64_t query_occurrences = 0;
    std::uint64_t results_returned = 0;
};

struct LabelParams {
    double mu = 0.33;
    double lambda_boost = 15.0;
};

using QueryPredicate = std::function<bool(std::string_view)>;

/// Default filter for navigational queries: author-name shapes ("smith j",
/// "smith ja", field tags like "[au]") and journal names/abbreviations.
bool is_noninformational_query(std::string_view normalized_query);

/// Lowercase, trim, collapse internal whitespace.
std::string normalize_query(std::string_view query);

struct AggregateOptions {
    std::uint64_t min_occurrences = 10;
    std::uint64_t min_results = 20;
    QueryPredicate noninformational = is_noninformational_query;
};

/// Merges records by (normalized query, doc id) summing clicks, then drops
/// queries below either threshold or matched by the predicate. Query-level
/// counts (occurrences, results) take the maximum seen for the query; the
/// full-text flag is OR-ed. Output sorted by query, then doc id.
std::vector<ClickRecord> aggregate_and_filter(const std::vector<ClickRecord>& records,
                                              const AggregateOptions& options = {});

/// mu*a + (1-mu)*f + (a/lambda)*(1-FT). Throws if f > 0 without a full-text link.
double relevance_label(std::uint64_t abstract_clicks, std::uint64_t fulltext_clicks, bool has_fulltext,
                       const LabelParams& params = {});

/// TSV: query, doc_id, abstract_clicks, fulltext_clicks, has_fulltext(0|1),
/// query_occurrences, results_returned.
std::vector<ClickRecord> read_click_log(std::istream& in);

// ---------------------------------------------------------------------------
// Judgments and runs

struct JudgedQuery {
    std::string query_id;
    std::string text;
    /// Every judged document, including grade 0.
    std::map<std::string, double> grades;

    double grade(const std::string& doc_id) const;
    bool judged(const std::string& doc_id) const { return grades.contains(doc_id); }
    std::size_t relevant_count() const;
};

using Judgments = std::map<std::string, JudgedQuery>;

/// Labels aggregated records. Query ids are "q1", "q2", ... in query order.
Judgments judgments_from_clicks(const std::vector<ClickRecord>& aggregated, const LabelParams& params = {});

/// "qid 0 doc_id grade" lines; grades written with 4 decimals.
void write_qrels(std::ostream& out, const Judgments& judgments);
Judgments read_qrels(std::istream& in);

/// "qid<TAB>query text" lines.
void write_queries(std::ostream& out, const Judgments& judgments);
std::vector<std::pair<std::string, std::string>> read_queries(std::istream& in);

struct RunEntry {
    std::string doc_id;
    double score;
};
using Run = std::map<std::string, std::vector<RunEntry>>;

/// TREC format "qid Q0 doc_id rank score tag".
void write_run(std::ostream& out, const Run& run, std::string_view tag);
Run read_run(std::istream& in);

// ---------------------------------------------------------------------------
// Metrics

/// 2^y - 1
double dcg_gain(double grade);
/// 1 / log2(rank + 1) for 1-based rank.
double dcg_discount(std::size_t rank);

/// Binary relevance (grade > 0). With judged_only, unjudged documents are
/// dropped before ranks are assigned. nullopt when the query has no
/// relevant document.
std::optional<double> average_precision(const std::vector<std::string>& ranked, const JudgedQuery& judged,
                                        bool judged_only);

/// Unjudged documents gain 0; ideal DCG comes from all judged grades. Zero
/// ideal DCG gives 0.
double ndcg_at_k(const std::vector<std::string>& ranked, const JudgedQuery& judged, std::size_t k);

struct Metric {
    enum class Kind { map, ndcg } kind;
    std::size_t k = 0;

    std::string name() const;
    static Metric parse(std::string_view spec);
};

struct Evaluation {
    std::vector<Metric> metrics;
    /// qid -> one value per metric, only for queries that were evaluated.
    std::map<std::string, std::vector<double>> per_query;
    std::vector<double> mean;
    std::vector<std::string> skipped;
};

/// Evaluates every run query that has judgments and at least one relevant
/// document; others land in `skipped`. judged_only condenses the ranking
/// for all metrics.
Evaluation evaluate_run(const std::map<std::string, std::vector<std::string>>& rankings,
                        const Judgments& judgments, const std::vector<Metric>& metrics, bool judged_only);

/// Header "qid<TAB>metric...", one row per query, final "mean" row.
void write_report(std::ostream& out, const Evaluation& eval);

}  // namespace semrank
