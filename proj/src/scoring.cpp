#include "semrank/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace semrank {

double FlowMatrix::amount(std::size_t source, std::size_t sink) const {
    double total = 0.0;
    for (const auto& e : entries) {
        if (e.source == source && e.sink == sink) total += e.amount;
    }
    return total;
}

std::vector<double> FlowMatrix::row_sums() const {
    std::vector<double> sums(sources.size(), 0.0);
    for (const auto& e : entries) sums[e.source] += e.amount;
    return sums;
}

std::vector<double> FlowMatrix::column_sums() const {
    std::vector<double> sums(sinks.size(), 0.0);
    for (const auto& e : entries) sums[e.sink] += e.amount;
    return sums;
}

namespace {

std::map<std::string, std::uint32_t> count_terms(std::span<const std::string> tokens) {
    std::map<std::string, std::uint32_t> counts;
    for (const auto& t : tokens) ++counts[t];
    return counts;
}

double field_idf(const CorpusIndex& index, TermId t) {
    return idf_from_counts(index.size(), index.df(t, Field::both));
}

}  // namespace

double score_tfidf(std::span<const std::string> query_tokens, const CorpusIndex& index, DocOrdinal doc,
                   Field field) {
    if (query_tokens.empty()) throw Error("empty query");
    const auto& bag = index.doc(doc).field(field);

    double dot = 0.0, query_norm = 0.0;
    for (const auto& [term, tf] : count_terms(query_tokens)) {
        const double w = tf * idf(index, term);
        query_norm += w * w;
        if (auto id = index.term_id(term)) {
            if (auto dtf = bag.tf(*id)) dot += w * (dtf * field_idf(index, *id));
        }
    }
    double doc_norm = 0.0;
    for (std::size_t i = 0; i < bag.terms.size(); ++i) {
        const double w = bag.tfs[i] * field_idf(index, bag.terms[i]);
        doc_norm += w * w;
    }
    if (dot == 0.0 || query_norm == 0.0 || doc_norm == 0.0) return 0.0;
    return dot / (std::sqrt(query_norm) * std::sqrt(doc_norm));
}

double score_bm25(std::span<const std::string> query_tokens, const CorpusIndex& index, DocOrdinal doc,
                  const Bm25Params& params, Field field) {
    if (query_tokens.empty()) throw Error("empty query");
    const auto& bag = index.doc(doc).field(field);
    const double avgdl = index.avg_field_length(field);
    const double norm = avgdl > 0.0 ? params.k * (1.0 - params.b + params.b * bag.length / avgdl) : params.k;

    double score = 0.0;
    for (const auto& term : query_tokens) {
        auto id = index.term_id(term);
        if (!id) continue;
        const double tf = bag.tf(*id);
        if (tf == 0.0) continue;
        double w = field_idf(index, *id);
        if (params.clamp_negative_idf) w = std::max(0.0, w);
        score += w * (tf * (params.k + 1.0)) / (tf + norm);
    }
    return score;
}

double score_centroid(std::span<const std::string> query_tokens, const CorpusIndex& index, DocOrdinal doc,
                      const EmbeddingTable& table, Field field) {
    auto query = centroid(table, query_tokens);
    const auto& bag = index.doc(doc).field(field);
    std::vector<double> sum(table.dim(), 0.0);
    std::uint64_t count = 0;
    for (std::size_t i = 0; i < bag.terms.size(); ++i) {
        auto r = table.row(index.term(bag.terms[i]));
        if (!r) continue;
        auto v = table.vector(*r);
        for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += static_cast<double>(bag.tfs[i]) * v[k];
        count += bag.tfs[i];
    }
    if (count == 0) throw Error("no embeddable tokens");
    for (auto& x : sum) x /= static_cast<double>(count);
    return cosine(query, sum);
}

namespace {

// Doc terms must be visited in lexicographic order so that the strict '>'
// keeps the smallest term on cosine ties.
template <typename DocRow, typename DocTerm, typename Verbatim>
SemResult sem_kernel(const TermWeights& query, std::span<const std::optional<EmbeddingTable::Row>> query_rows,
                     std::size_t n_doc_terms, DocRow doc_row, DocTerm doc_term, Verbatim verbatim,
                     const EmbeddingTable& table) {
    SemResult out;
    for (std::size_t i = 0; i < query.entries.size(); ++i) {
        const auto& qt = query.entries[i];
        if (!query_rows[i]) {
            if (verbatim(i)) out.score += qt.weight;
            continue;
        }
        const auto qv = table.vector(*query_rows[i]);
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_j = n_doc_terms;
        for (std::size_t j = 0; j < n_doc_terms; ++j) {
            auto r = doc_row(j);
            if (r < 0) continue;
            const double c = EmbeddingTable::dot(qv, table.vector(static_cast<EmbeddingTable::Row>(r)));
            if (c > best) {
                best = c;
                best_j = j;
            }
        }
        if (best_j == n_doc_terms) continue;
        out.score += qt.weight * best;
        out.matches.push_back({qt.term, std::string(doc_term(best_j)), best});
    }
    return out;
}

std::vector<std::optional<EmbeddingTable::Row>> rows_of(const TermWeights& w, const EmbeddingTable& table) {
    std::vector<std::optional<EmbeddingTable::Row>> rows;
    rows.reserve(w.entries.size());
    for (const auto& e : w.entries) rows.push_back(table.row(e.term));
    return rows;
}

std::vector<std::string> unique_sorted(std::span<const std::string> terms) {
    std::vector<std::string> out(terms.begin(), terms.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace

SemResult relaxed_flow_score(const TermWeights& query, std::span<const std::string> doc_terms,
                             const EmbeddingTable& table) {
    const auto terms = unique_sorted(doc_terms);
    std::vector<std::int64_t> rows;
    rows.reserve(terms.size());
    for (const auto& t : terms) {
        auto r = table.row(t);
        rows.push_back(r ? static_cast<std::int64_t>(*r) : -1);
    }
    const auto query_rows = rows_of(query, table);
    return sem_kernel(
        query, query_rows, terms.size(), [&](std::size_t j) { return rows[j]; },
        [&](std::size_t j) -> const std::string& { return terms[j]; },
        [&](std::size_t i) { return std::binary_search(terms.begin(), terms.end(), query.entries[i].term); },
        table);
}

FlowMatrix greedy_flow(const TermWeights& query, std::span<const std::string> doc_terms,
                       const EmbeddingTable& table) {
    FlowMatrix flow;
    flow.sinks = unique_sorted(doc_terms);
    auto result = relaxed_flow_score(query, doc_terms, table);
    std::size_t m = 0;
    for (std::size_t i = 0; i < query.entries.size(); ++i) {
        const auto& qt = query.entries[i];
        flow.sources.push_back(qt.term);
        std::string target;
        if (m < result.matches.size() && result.matches[m].query_term == qt.term) {
            target = result.matches[m++].doc_term;
        } else if (!table.contains(qt.term) &&
                   std::binary_search(flow.sinks.begin(), flow.sinks.end(), qt.term)) {
            target = qt.term;
        } else {
            continue;
        }
        auto it = std::lower_bound(flow.sinks.begin(), flow.sinks.end(), target);
        flow.entries.push_back({i, static_cast<std::size_t>(it - flow.sinks.begin()), qt.weight});
    }
    return flow;
}

ScoredDoc score_sem(std::span<const std::string> query_tokens, const CorpusIndex& index, DocOrdinal doc,
                    const EmbeddingTable& table, Field field) {
    const auto weights = term_weights(query_tokens, index, WeightScheme::idf);
    const auto query_rows = rows_of(weights, table);
    const auto& bag = index.doc(doc).field(field);
    auto result = sem_kernel(
        weights, query_rows, bag.terms.size(),
        [&](std::size_t j) -> std::int64_t {
            auto r = table.row(index.term(bag.terms[j]));
            return r ? static_cast<std::int64_t>(*r) : -1;
        },
        [&](std::size_t j) -> const std::string& { return index.term(bag.terms[j]); },
        [&](std::size_t i) {
            auto id = index.term_id(weights.entries[i].term);
            return id && bag.tf(*id) > 0;
        },
        table);
    return {index.doc(doc).id, result.score, std::move(result.matches)};
}

SemScorer::SemScorer(const CorpusIndex& index, const EmbeddingTable& table)
    : index_(index), table_(table), term_rows_(index.vocabulary_size(), -1) {
    for (TermId t = 0; t < index.vocabulary_size(); ++t) {
        if (auto r = table.row(index.term(t))) term_rows_[t] = *r;
    }
}

SemScorer::Query SemScorer::prepare(std::span<const std::string> query_tokens) const {
    Query q;
    q.weights = term_weights(query_tokens, index_, WeightScheme::idf);
    q.rows = rows_of(q.weights, table_);
    for (const auto& e : q.weights.entries) q.ids.push_back(index_.term_id(e.term));
    return q;
}

SemResult SemScorer::score(const Query& query, DocOrdinal doc, Field field) const {
    const auto& bag = index_.doc(doc).field(field);
    return sem_kernel(
        query.weights, query.rows, bag.terms.size(), [&](std::size_t j) { return term_rows_[bag.terms[j]]; },
        [&](std::size_t j) -> const std::string& { return index_.term(bag.terms[j]); },
        [&](std::size_t i) { return query.ids[i] && bag.tf(*query.ids[i]) > 0; }, table_);
}

}  // namespace semrank
