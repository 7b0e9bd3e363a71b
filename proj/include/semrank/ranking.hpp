#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "semrank/corpus.hpp"
#include "semrank/embeddings.hpp"
#include "semrank/scoring.hpp"

namespace semrank {

// ---------------------------------------------------------------------------
// Features

/// Ordered feature names. Recognized names: "bm25" (both fields) and
/// "sem_title" / "sem_abstract" / "sem_both".
struct FeatureSchema {
    std::vector<std::string> names = {"bm25", "sem_title"};

    std::size_t size() const { return names.size(); }
    bool operator==(const FeatureSchema&) const = default;
};

struct FeatureVector {
    std::vector<double> values;
};

struct FeatureConfig {
    FeatureSchema schema;
    Bm25Params bm25;
};

/// Computes the configured features for one document. A semantic feature
/// with no usable document terms is 0 rather than an error.
FeatureVector extract_features(std::span<const std::string> query_tokens, const CorpusIndex& index,
                               DocOrdinal doc, const EmbeddingTable& table, const FeatureConfig& config);

/// Reusable form of extract_features for scoring many documents of one query.
class FeatureExtractor {
  public:
    FeatureExtractor(const CorpusIndex& index, const EmbeddingTable& table, FeatureConfig config);

    void set_query(std::span<const std::string> query_tokens);
    FeatureVector extract(DocOrdinal doc) const;

  private:
    enum class Kind { bm25, sem };
    struct Slot {
        Kind kind;
        Field field;
    };

    const CorpusIndex& index_;
    FeatureConfig config_;
    SemScorer sem_;
    std::vector<Slot> slots_;
    std::vector<std::string> query_;
    std::optional<SemScorer::Query> prepared_;
};

// ---------------------------------------------------------------------------
// Training data

struct TrainingInstance {
    std::string query_id;
    std::string doc_id;
    FeatureVector features;
    double label = 0.0;
};

/// Instances grouped by query; group order and in-group order as given.
struct RankingDataset {
    FeatureSchema schema;
    std::vector<TrainingInstance> instances;

    /// [begin, end) ranges of consecutive instances sharing a query id.
    std::vector<std::pair<std::size_t, std::size_t>> groups() const;
};

/// "<label> qid:<qid> 1:<v1> 2:<v2> # <doc_id>"
void write_letor(std::ostream& out, const RankingDataset& data);
/// Feature names come from the schema argument; the file only carries indexes.
RankingDataset read_letor(std::istream& in, const FeatureSchema& schema);

/// Seeded query-level shuffle, first `train_fraction` of queries to train.
std::pair<RankingDataset, RankingDataset> split_by_query(const RankingDataset& data, double train_fraction,
                                                          std::uint64_t seed);

// ---------------------------------------------------------------------------
// Model

struct LtrHyperparams {
    std::size_t num_trees = 300;
    std::size_t num_leaves = 10;
    double learning_rate = 0.1;
    std::size_t min_instances_per_leaf = 1;
    std::size_t ndcg_truncation = 10;
    std::uint64_t rng_seed = 7;
};

/// Flat binary regression tree. Internal nodes send values <= threshold left.
struct RegressionTree {
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        double value = 0.0;  // leaf output
    };
    std::vector<Node> nodes;

    double evaluate(std::span<const double> x) const;
};

struct RankingModel {
    FeatureSchema schema;
    LtrHyperparams hyperparams;
    double learning_rate = 0.1;
    std::vector<RegressionTree> trees;

    /// learning_rate * sum of leaf outputs. Throws on a length mismatch.
    double predict(const FeatureVector& fv) const;
    /// Sum over the first `n_trees` trees only.
    double predict_prefix(std::span<const double> x, std::size_t n_trees) const;

    std::string to_json() const;
    static RankingModel from_json(const std::string& text);
};

/// Observer called after each boosting round with the tree count so far.
using TrainingCallback = std::function<void(std::size_t trees, const RankingModel& model)>;

/// LambdaMART: trees fitted to NDCG-weighted RankNet lambdas with Newton leaf values.
RankingModel train_lambdamart(const RankingDataset& data, const LtrHyperparams& hp,
                              const TrainingCallback& on_round = {});

struct Candidate {
    std::string doc_id;
    FeatureVector features;
};

/// Descending model score, ties by doc id.
std::vector<ScoredDoc> rerank(const RankingModel& model, std::span<const Candidate> candidates);

/// Mean NDCG@k of the model's ranking over every query of the dataset that
/// has a positive label.
double mean_ndcg(const RankingModel& model, const RankingDataset& data, std::size_t k);

}  // namespace semrank
