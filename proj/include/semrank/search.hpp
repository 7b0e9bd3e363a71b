#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semrank/corpus.hpp"
#include "semrank/embeddings.hpp"
#include "semrank/ranking.hpp"
#include "semrank/scoring.hpp"

namespace semrank {

enum class ScorerKind { tfidf, bm25, centroid, sem, ltr };

ScorerKind parse_scorer(std::string_view name);
std::string_view to_string(ScorerKind kind);

struct SearchConfig {
    ScorerKind scorer = ScorerKind::bm25;
    /// Field used by tfidf, bm25, centroid and sem. The ltr scorer takes its
    /// fields from the model schema.
    Field field = Field::both;
    std::size_t top_k = 1000;
    /// Candidate depth from BM25 for centroid/sem/ltr; 0 scores every document.
    std::size_t candidates = 0;
    Bm25Params bm25;
    std::size_t threads = 1;
};

/// Query-time driver over a loaded index, optional embeddings and optional
/// reranking model. Output order is score descending, doc id ascending, and
/// does not depend on the thread count.
class Searcher {
  public:
    explicit Searcher(const CorpusIndex& index, const EmbeddingTable* table = nullptr,
                      const RankingModel* model = nullptr);

    std::vector<ScoredDoc> search(std::string_view query_text, const SearchConfig& cfg) const;
    std::vector<ScoredDoc> search_tokens(std::span<const std::string> tokens, const SearchConfig& cfg) const;

    /// Documents sharing at least one term with the query, best BM25 first;
    /// `limit` 0 keeps all of them.
    std::vector<ScoredDoc> bm25_ranking(std::span<const std::string> tokens, const Bm25Params& params, Field field,
                                        std::size_t limit, std::size_t threads) const;

    const CorpusIndex& index() const { return index_; }

  private:
    std::vector<DocOrdinal> candidate_set(std::span<const std::string> tokens, const SearchConfig& cfg) const;

    const CorpusIndex& index_;
    const EmbeddingTable* table_;
    const RankingModel* model_;
    std::optional<SemScorer> sem_;
};

/// Sorts by score descending then doc id ascending and keeps the first k
/// (k = 0 keeps everything).
void sort_and_truncate(std::vector<ScoredDoc>& docs, std::size_t k);

}  // namespace semrank
