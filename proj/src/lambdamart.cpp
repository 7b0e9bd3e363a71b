#include <algorithm>
#include <cmath>
#include <numeric>

#include "semrank/ranking.hpp"
#include "semrank/releval.hpp"

namespace semrank {

namespace {

struct Split {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

struct Leaf {
    std::size_t node;  // index into the tree under construction
    std::size_t count = 0;
    double sum = 0.0;
    Split best;
};

class TreeBuilder {
  public:
    TreeBuilder(const std::vector<std::vector<double>>& columns, const std::vector<std::vector<std::size_t>>& sorted,
                std::size_t max_leaves, std::size_t min_leaf)
        : columns_(columns), sorted_(sorted), max_leaves_(max_leaves), min_leaf_(min_leaf),
          leaf_of_(columns.empty() ? 0 : columns[0].size(), 0) {}

    RegressionTree fit(const std::vector<double>& targets, const std::vector<double>& hessians) {
        const std::size_t n = leaf_of_.size();
        RegressionTree tree;
        tree.nodes.emplace_back();
        std::fill(leaf_of_.begin(), leaf_of_.end(), 0);

        leaves_.clear();
        Leaf root{0, n, 0.0, {}};
        for (std::size_t i = 0; i < n; ++i) root.sum += targets[i];
        leaves_.push_back(root);
        find_splits({0}, targets);

        while (leaves_.size() < max_leaves_) {
            std::size_t pick = leaves_.size();
            for (std::size_t l = 0; l < leaves_.size(); ++l) {
                if (leaves_[l].best.feature >= 0 && (pick == leaves_.size() || leaves_[l].best.gain > leaves_[pick].best.gain)) {
                    pick = l;
                }
            }
            if (pick == leaves_.size()) break;

            const Split split = leaves_[pick].best;
            const auto parent_node = leaves_[pick].node;
            const auto left_node = tree.nodes.size();
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            tree.nodes[parent_node].feature = split.feature;
            tree.nodes[parent_node].threshold = split.threshold;
            tree.nodes[parent_node].left = static_cast<std::int32_t>(left_node);
            tree.nodes[parent_node].right = static_cast<std::int32_t>(left_node + 1);

            // the left child keeps the parent's slot, the right child is appended
            const std::size_t right_leaf = leaves_.size();
            Leaf left{left_node, 0, 0.0, {}}, right{left_node + 1, 0, 0.0, {}};
            const auto& col = columns_[static_cast<std::size_t>(split.feature)];
            for (std::size_t i = 0; i < n; ++i) {
                if (leaf_of_[i] != pick) continue;
                if (col[i] <= split.threshold) {
                    ++left.count;
                    left.sum += targets[i];
                } else {
                    leaf_of_[i] = right_leaf;
                    ++right.count;
                    right.sum += targets[i];
                }
            }
            leaves_[pick] = left;
            leaves_.push_back(right);
            find_splits({pick, right_leaf}, targets);
        }

        std::vector<double> num(leaves_.size(), 0.0), den(leaves_.size(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            num[leaf_of_[i]] += targets[i];
            den[leaf_of_[i]] += hessians[i];
        }
        for (std::size_t l = 0; l < leaves_.size(); ++l) {
            tree.nodes[leaves_[l].node].value = den[l] > 0.0 ? num[l] / den[l] : 0.0;
        }
        return tree;
    }

  private:
    // One pass per feature over the presorted order evaluates every
    // requested leaf at once.
    void find_splits(const std::vector<std::size_t>& which, const std::vector<double>& targets) {
        struct Scan {
            std::size_t count = 0;
            double sum = 0.0;
            double last = 0.0;
        };
        std::vector<int> slot(leaves_.size(), -1);
        for (std::size_t w = 0; w < which.size(); ++w) {
            slot[which[w]] = static_cast<int>(w);
            leaves_[which[w]].best = {};
        }
        for (std::size_t f = 0; f < columns_.size(); ++f) {
            std::vector<Scan> scans(which.size());
            const auto& col = columns_[f];
            for (std::size_t i : sorted_[f]) {
                const int s = slot[leaf_of_[i]];
                if (s < 0) continue;
                auto& scan = scans[static_cast<std::size_t>(s)];
                auto& leaf = leaves_[which[static_cast<std::size_t>(s)]];
                const double v = col[i];
                if (scan.count > 0 && v > scan.last && scan.count >= min_leaf_ && leaf.count - scan.count >= min_leaf_) {
                    const double nl = static_cast<double>(scan.count);
                    const double nr = static_cast<double>(leaf.count - scan.count);
                    const double sr = leaf.sum - scan.sum;
                    const double gain = scan.sum * scan.sum / nl + sr * sr / nr -
                                        leaf.sum * leaf.sum / static_cast<double>(leaf.count);
                    if (gain > leaf.best.gain + 1e-12) {
                        double mid = scan.last + (v - scan.last) / 2.0;
                        if (!(mid >= scan.last && mid < v)) mid = scan.last;
                        leaf.best = {gain, static_cast<int>(f), mid};
                    }
                }
                ++scan.count;
                scan.sum += targets[i];
                scan.last = v;
            }
        }
    }

    const std::vector<std::vector<double>>& columns_;
    const std::vector<std::vector<std::size_t>>& sorted_;
    std::size_t max_leaves_;
    std::size_t min_leaf_;
    std::vector<std::size_t> leaf_of_;
    std::vector<Leaf> leaves_;
};

double truncated_discount(std::size_t position, std::size_t k) {
    return position < k ? dcg_discount(position + 1) : 0.0;
}

}  // namespace

RankingModel train_lambdamart(const RankingDataset& data, const LtrHyperparams& hp, const TrainingCallback& on_round) {
    if (hp.num_leaves < 1 || hp.min_instances_per_leaf < 1 || hp.ndcg_truncation < 1 || !(hp.learning_rate > 0.0)) {
        throw Error("hyperparameters must be positive");
    }
    const std::size_t n = data.instances.size();
    const std::size_t n_features = data.schema.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& inst = data.instances[i];
        auto where = [&] { return "instance " + std::to_string(i) + " (qid " + inst.query_id + ", doc " + inst.doc_id + ")"; };
        if (inst.features.values.size() != n_features) throw Error(where() + ": feature count does not match schema");
        for (double v : inst.features.values) {
            if (!std::isfinite(v)) throw Error(where() + ": non-finite feature value");
        }
        if (!std::isfinite(inst.label) || inst.label < 0.0) throw Error(where() + ": label must be finite and >= 0");
    }

    const auto groups = data.groups();
    bool any_pair = false;
    std::vector<double> inverse_max_dcg(groups.size(), 0.0);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        auto [begin, end] = groups[g];
        std::vector<double> labels;
        for (std::size_t i = begin; i < end; ++i) labels.push_back(data.instances[i].label);
        std::sort(labels.begin(), labels.end(), std::greater<>());
        if (labels.front() != labels.back()) any_pair = true;
        double max_dcg = 0.0;
        for (std::size_t r = 0; r < labels.size() && r < hp.ndcg_truncation; ++r) {
            max_dcg += dcg_gain(labels[r]) * dcg_discount(r + 1);
        }
        inverse_max_dcg[g] = max_dcg > 0.0 ? 1.0 / max_dcg : 0.0;
    }
    if (!any_pair) throw Error("no preference pairs");

    std::vector<std::vector<double>> columns(n_features, std::vector<double>(n));
    std::vector<std::vector<std::size_t>> sorted(n_features, std::vector<std::size_t>(n));
    for (std::size_t f = 0; f < n_features; ++f) {
        for (std::size_t i = 0; i < n; ++i) columns[f][i] = data.instances[i].features.values[f];
        std::iota(sorted[f].begin(), sorted[f].end(), 0);
        std::stable_sort(sorted[f].begin(), sorted[f].end(),
                         [&](std::size_t a, std::size_t b) { return columns[f][a] < columns[f][b]; });
    }

    RankingModel model;
    model.schema = data.schema;
    model.hyperparams = hp;
    model.learning_rate = hp.learning_rate;

    TreeBuilder builder(columns, sorted, hp.num_leaves, hp.min_instances_per_leaf);
    std::vector<double> scores(n, 0.0), lambdas(n), hessians(n);
    std::vector<std::size_t> order;
    const std::size_t k = hp.ndcg_truncation;

    for (std::size_t t = 0; t < hp.num_trees; ++t) {
        std::fill(lambdas.begin(), lambdas.end(), 0.0);
        std::fill(hessians.begin(), hessians.end(), 0.0);
        for (std::size_t g = 0; g < groups.size(); ++g) {
            auto [begin, end] = groups[g];
            if (inverse_max_dcg[g] == 0.0) continue;
            order.resize(end - begin);
            std::iota(order.begin(), order.end(), begin);
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

            // every pair with at least one member inside the truncation window
            for (std::size_t p = 0; p < order.size() && p < k; ++p) {
                for (std::size_t q = p + 1; q < order.size(); ++q) {
                    std::size_t hi = order[p], lo = order[q];
                    std::size_t hi_pos = p, lo_pos = q;
                    const double y_hi = data.instances[hi].label, y_lo = data.instances[lo].label;
                    if (y_hi == y_lo) continue;
                    if (y_hi < y_lo) {
                        std::swap(hi, lo);
                        std::swap(hi_pos, lo_pos);
                    }
                    const double delta_ndcg =
                        std::abs(dcg_gain(data.instances[hi].label) - dcg_gain(data.instances[lo].label)) *
                        std::abs(truncated_discount(hi_pos, k) - truncated_discount(lo_pos, k)) * inverse_max_dcg[g];
                    const double rho = 1.0 / (1.0 + std::exp(scores[hi] - scores[lo]));
                    const double lambda = delta_ndcg * rho;
                    const double weight = delta_ndcg * rho * (1.0 - rho);
                    lambdas[hi] += lambda;
                    lambdas[lo] -= lambda;
                    hessians[hi] += weight;
                    hessians[lo] += weight;
                }
            }
        }

        auto tree = builder.fit(lambdas, hessians);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] += hp.learning_rate * tree.evaluate(data.instances[i].features.values);
        }
        model.trees.push_back(std::move(tree));
        if (on_round) on_round(model.trees.size(), model);
    }
    return model;
}

}  // namespace semrank
