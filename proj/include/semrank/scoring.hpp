#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semrank/corpus.hpp"
#include "semrank/embeddings.hpp"

namespace semrank {

struct Bm25Params {
    double k = 1.9;
    double b = 1.0;
    /// Floor idf at zero (off: ubiquitous terms score negatively).
    bool clamp_negative_idf = false;
};

/// Best document term found for one query term.
struct Match {
    std::string query_term;
    std::string doc_term;
    double cosine;
};

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;
    /// Only filled by the semantic scorer.
    std::optional<std::vector<Match>> matches;
};

struct FlowEntry {
    std::size_t source;
    std::size_t sink;
    double amount;
};

/// Sparse transport plan between a source and a sink term list.
struct FlowMatrix {
    std::vector<std::string> sources;
    std::vector<std::string> sinks;
    std::vector<FlowEntry> entries;

    double amount(std::size_t source, std::size_t sink) const;
    std::vector<double> row_sums() const;
    std::vector<double> column_sums() const;
};

/// Cosine between tf*idf vectors over the chosen field; 0 when nothing is shared.
double score_tfidf(std::span<const std::string> query_tokens, const CorpusIndex& index, DocOrdinal doc,
                   Field field = Field::both);

/// Okapi BM25 over query tokens (repeats counted), idf from combined-field df.
double score_bm25(std::span<const std::string> query_tokens, const CorpusIndex& index, DocOrdinal doc,
                  const Bm25Params& params = {}, Field field = Field::both);

/// Cosine between query and document-field embedding centroids. Throws
/// when either side has no in-vocabulary token.
double score_centroid(std::span<const std::string> query_tokens, const CorpusIndex& index, DocOrdinal doc,
                      const EmbeddingTable& table, Field field = Field::both);

struct SemResult {
    double score = 0.0;
    std::vector<Match> matches;
};

/// Relaxed query->document transport: every query term sends its whole
/// weight to its most similar document term. `doc_terms` may repeat and come
/// in any order. A query term missing from the table earns its weight only
/// on a verbatim hit; OOV document terms never match by similarity.
SemResult relaxed_flow_score(const TermWeights& query, std::span<const std::string> doc_terms,
                             const EmbeddingTable& table);

/// The optimal plan behind relaxed_flow_score, sinks = unique doc terms
/// (sorted). Rows of OOV query terms without a verbatim hit are empty.
FlowMatrix greedy_flow(const TermWeights& query, std::span<const std::string> doc_terms,
                       const EmbeddingTable& table);

/// Semantic score with idf-weighted query terms (query tf, collection idf).
ScoredDoc score_sem(std::span<const std::string> query_tokens, const CorpusIndex& index, DocOrdinal doc,
                    const EmbeddingTable& table, Field field = Field::both);

/// Batch form of score_sem with the index->table vocabulary alignment
/// precomputed. Produces bit-identical results to score_sem.
class SemScorer {
  public:
    SemScorer(const CorpusIndex& index, const EmbeddingTable& table);

    struct Query {
        TermWeights weights;
        std::vector<std::optional<EmbeddingTable::Row>> rows;
        std::vector<std::optional<TermId>> ids;
    };

    Query prepare(std::span<const std::string> query_tokens) const;
    SemResult score(const Query& query, DocOrdinal doc, Field field) const;

  private:
    const CorpusIndex& index_;
    const EmbeddingTable& table_;
    std::vector<std::int64_t> term_rows_;
};

struct WmdResult {
    double distance = 0.0;
    FlowMatrix flow;
};

/// Exact earth mover's distance between two uniform bags under Euclidean
/// ground cost. Solved by successive shortest paths; meant for small
/// instances. Throws on unbalanced mass or OOV terms.
WmdResult wmd_exact(const TermWeights& a, const TermWeights& b, const EmbeddingTable& table);

/// Same objective with only the outgoing-mass constraints: sum of a_i times
/// the distance to the nearest term of b.
double wmd_relaxed(const TermWeights& a, const TermWeights& b, const EmbeddingTable& table);

double euclidean_distance(const EmbeddingTable& table, EmbeddingTable::Row a, EmbeddingTable::Row b);

}  // namespace semrank
