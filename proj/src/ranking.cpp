#include "semrank/ranking.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <set>

#include <json.hpp>

#include "semrank/releval.hpp"

namespace semrank {

namespace {

struct FeatureSpec {
    bool is_bm25;
    Field field;
};

FeatureSpec parse_feature(const std::string& name) {
    if (name == "bm25") return {true, Field::both};
    if (name.starts_with("sem_")) return {false, parse_field(name.substr(4))};
    throw Error("unknown feature '" + name + "'");
}

}  // namespace

FeatureVector extract_features(std::span<const std::string> query_tokens, const CorpusIndex& index,
                               DocOrdinal doc, const EmbeddingTable& table, const FeatureConfig& config) {
    FeatureVector fv;
    for (const auto& name : config.schema.names) {
        auto spec = parse_feature(name);
        if (spec.is_bm25) {
            fv.values.push_back(score_bm25(query_tokens, index, doc, config.bm25, spec.field));
        } else {
            fv.values.push_back(score_sem(query_tokens, index, doc, table, spec.field).score);
        }
    }
    return fv;
}

FeatureExtractor::FeatureExtractor(const CorpusIndex& index, const EmbeddingTable& table, FeatureConfig config)
    : index_(index), config_(std::move(config)), sem_(index, table) {
    for (const auto& name : config_.schema.names) {
        auto spec = parse_feature(name);
        slots_.push_back({spec.is_bm25 ? Kind::bm25 : Kind::sem, spec.field});
    }
}

void FeatureExtractor::set_query(std::span<const std::string> query_tokens) {
    query_.assign(query_tokens.begin(), query_tokens.end());
    prepared_ = sem_.prepare(query_);
}

FeatureVector FeatureExtractor::extract(DocOrdinal doc) const {
    if (!prepared_) throw Error("feature extractor used before set_query");
    FeatureVector fv;
    for (const auto& slot : slots_) {
        if (slot.kind == Kind::bm25) {
            fv.values.push_back(score_bm25(query_, index_, doc, config_.bm25, slot.field));
        } else {
            fv.values.push_back(sem_.score(*prepared_, doc, slot.field).score);
        }
    }
    return fv;
}

std::vector<std::pair<std::size_t, std::size_t>> RankingDataset::groups() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t begin = 0;
    for (std::size_t i = 1; i <= instances.size(); ++i) {
        if (i == instances.size() || instances[i].query_id != instances[begin].query_id) {
            out.emplace_back(begin, i);
            begin = i;
        }
    }
    return out;
}

void write_letor(std::ostream& out, const RankingDataset& data) {
    char buf[64];
    for (const auto& inst : data.instances) {
        out << std::string_view(buf, std::to_chars(buf, buf + sizeof(buf), inst.label).ptr) << " qid:" << inst.query_id;
        for (std::size_t f = 0; f < inst.features.values.size(); ++f) {
            const auto end = std::to_chars(buf, buf + sizeof(buf), inst.features.values[f]).ptr;
            out << ' ' << (f + 1) << ':' << std::string_view(buf, end);
        }
        if (!inst.doc_id.empty()) out << " # " << inst.doc_id;
        out << '\n';
    }
}

namespace {

double parse_double(std::string_view s, std::size_t line_no) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error("feature file line " + std::to_string(line_no) + ": bad number '" + std::string(s) + "'");
    }
    return v;
}

}  // namespace

RankingDataset read_letor(std::istream& in, const FeatureSchema& schema) {
    RankingDataset data;
    data.schema = schema;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string comment;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            comment = line.substr(hash + 1);
            line.resize(hash);
            auto first = comment.find_first_not_of(" \t");
            comment = first == std::string::npos ? "" : comment.substr(first);
            while (!comment.empty() && (comment.back() == ' ' || comment.back() == '\t')) comment.pop_back();
        }
        std::vector<std::string_view> cols;
        std::string_view rest(line);
        while (!rest.empty()) {
            auto start = rest.find_first_not_of(" \t");
            if (start == std::string_view::npos) break;
            rest.remove_prefix(start);
            auto end = rest.find_first_of(" \t");
            cols.push_back(rest.substr(0, end));
            rest.remove_prefix(end == std::string_view::npos ? rest.size() : end);
        }
        if (cols.empty()) continue;
        if (cols.size() < 2 || !cols[1].starts_with("qid:")) {
            throw Error("feature file line " + std::to_string(line_no) + ": expected '<label> qid:<id> ...'");
        }
        TrainingInstance inst;
        inst.label = parse_double(cols[0], line_no);
        inst.query_id = std::string(cols[1].substr(4));
        inst.doc_id = comment;
        inst.features.values.assign(schema.size(), 0.0);
        std::set<std::size_t> seen;
        for (std::size_t c = 2; c < cols.size(); ++c) {
            auto colon = cols[c].find(':');
            std::size_t idx = 0;
            auto key = cols[c].substr(0, colon);
            auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), idx);
            if (colon == std::string_view::npos || ec != std::errc() || ptr != key.data() + key.size() || idx == 0 ||
                idx > schema.size() || !seen.insert(idx).second) {
                throw Error("feature file line " + std::to_string(line_no) + ": bad feature '" + std::string(cols[c]) +
                            "' for a " + std::to_string(schema.size()) + "-feature schema");
            }
            inst.features.values[idx - 1] = parse_double(cols[c].substr(colon + 1), line_no);
        }
        data.instances.push_back(std::move(inst));
    }
    return data;
}

std::pair<RankingDataset, RankingDataset> split_by_query(const RankingDataset& data, double train_fraction,
                                                          std::uint64_t seed) {
    if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) throw Error("train fraction must lie in [0, 1]");
    auto groups = data.groups();
    std::vector<std::size_t> order(groups.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(groups.size())));
    std::vector<bool> to_train(groups.size(), false);
    for (std::size_t i = 0; i < n_train; ++i) to_train[order[i]] = true;

    std::pair<RankingDataset, RankingDataset> out;
    out.first.schema = out.second.schema = data.schema;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        auto& dst = to_train[g] ? out.first : out.second;
        for (std::size_t i = groups[g].first; i < groups[g].second; ++i) dst.instances.push_back(data.instances[i]);
    }
    return out;
}

double RegressionTree::evaluate(std::span<const double> x) const {
    std::size_t n = 0;
    while (nodes[n].feature >= 0) {
        n = static_cast<std::size_t>(x[static_cast<std::size_t>(nodes[n].feature)] <= nodes[n].threshold
                                         ? nodes[n].left
                                         : nodes[n].right);
    }
    return nodes[n].value;
}

double RankingModel::predict_prefix(std::span<const double> x, std::size_t n_trees) const {
    if (x.size() != schema.size()) {
        throw Error("feature vector has " + std::to_string(x.size()) + " values, model expects " +
                    std::to_string(schema.size()));
    }
    double sum = 0.0;
    for (std::size_t t = 0; t < n_trees && t < trees.size(); ++t) sum += trees[t].evaluate(x);
    return learning_rate * sum;
}

double RankingModel::predict(const FeatureVector& fv) const { return predict_prefix(fv.values, trees.size()); }

namespace {

nlohmann::json tree_to_json(const RegressionTree& tree, std::size_t n) {
    const auto& node = tree.nodes[n];
    if (node.feature < 0) return {{"leaf_value", node.value}};
    return {{"feature", node.feature},
            {"threshold", node.threshold},
            {"left", tree_to_json(tree, static_cast<std::size_t>(node.left))},
            {"right", tree_to_json(tree, static_cast<std::size_t>(node.right))}};
}

std::int32_t tree_from_json(const nlohmann::json& j, RegressionTree& tree, std::size_t n_features) {
    auto id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (j.contains("leaf_value")) {
        tree.nodes[static_cast<std::size_t>(id)].value = j.at("leaf_value").get<double>();
        return id;
    }
    const int feature = j.at("feature").get<int>();
    if (feature < 0 || static_cast<std::size_t>(feature) >= n_features) {
        throw Error("model split feature " + std::to_string(feature) + " outside schema");
    }
    const double threshold = j.at("threshold").get<double>();
    auto left = tree_from_json(j.at("left"), tree, n_features);
    auto right = tree_from_json(j.at("right"), tree, n_features);
    auto& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = feature;
    node.threshold = threshold;
    node.left = left;
    node.right = right;
    return id;
}

}  // namespace

std::string RankingModel::to_json() const {
    nlohmann::json j;
    j["schema"] = schema.names;
    j["learning_rate"] = learning_rate;
    j["hyperparameters"] = {{"num_trees", hyperparams.num_trees},
                            {"num_leaves", hyperparams.num_leaves},
                            {"learning_rate", hyperparams.learning_rate},
                            {"min_instances_per_leaf", hyperparams.min_instances_per_leaf},
                            {"ndcg_truncation", hyperparams.ndcg_truncation},
                            {"rng_seed", hyperparams.rng_seed}};
    j["trees"] = nlohmann::json::array();
    for (const auto& t : trees) j["trees"].push_back(tree_to_json(t, 0));
    return j.dump(1) + "\n";
}

RankingModel RankingModel::from_json(const std::string& text) {
    try {
        auto j = nlohmann::json::parse(text);
        RankingModel m;
        m.schema.names = j.at("schema").get<std::vector<std::string>>();
        m.learning_rate = j.at("learning_rate").get<double>();
        const auto& hp = j.at("hyperparameters");
        m.hyperparams.num_trees = hp.at("num_trees").get<std::size_t>();
        m.hyperparams.num_leaves = hp.at("num_leaves").get<std::size_t>();
        m.hyperparams.learning_rate = hp.at("learning_rate").get<double>();
        m.hyperparams.min_instances_per_leaf = hp.at("min_instances_per_leaf").get<std::size_t>();
        m.hyperparams.ndcg_truncation = hp.at("ndcg_truncation").get<std::size_t>();
        m.hyperparams.rng_seed = hp.at("rng_seed").get<std::uint64_t>();
        for (const auto& jt : j.at("trees")) {
            RegressionTree t;
            tree_from_json(jt, t, m.schema.size());
            m.trees.push_back(std::move(t));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed model file: ") + e.what());
    }
}

std::vector<ScoredDoc> rerank(const RankingModel& model, std::span<const Candidate> candidates) {
    std::vector<ScoredDoc> out;
    out.reserve(candidates.size());
    for (const auto& c : candidates) out.push_back({c.doc_id, model.predict(c.features), std::nullopt});
    std::sort(out.begin(), out.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
    return out;
}

double mean_ndcg(const RankingModel& model, const RankingDataset& data, std::size_t k) {
    double total = 0.0;
    std::size_t counted = 0;
    for (auto [begin, end] : data.groups()) {
        std::vector<std::pair<double, double>> scored;  // (score, label)
        std::vector<double> labels;
        for (std::size_t i = begin; i < end; ++i) {
            scored.emplace_back(model.predict(data.instances[i].features), data.instances[i].label);
            labels.push_back(data.instances[i].label);
        }
        std::stable_sort(scored.begin(), scored.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        std::sort(labels.begin(), labels.end(), std::greater<>());
        double dcg = 0.0, idcg = 0.0;
        for (std::size_t r = 0; r < scored.size() && r < k; ++r) {
            dcg += dcg_gain(scored[r].second) * dcg_discount(r + 1);
            idcg += dcg_gain(labels[r]) * dcg_discount(r + 1);
        }
        if (idcg <= 0.0) continue;
        total += dcg / idcg;
        ++counted;
    }
    return counted ? total / static_cast<double>(counted) : 0.0;
}

}  // namespace semrank
