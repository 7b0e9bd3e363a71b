#include <algorithm>
#include <cmath>
#include <limits>

#include "semrank/scoring.hpp"

namespace semrank {

double euclidean_distance(const EmbeddingTable& table, EmbeddingTable::Row a, EmbeddingTable::Row b) {
    auto x = table.vector(a);
    auto y = table.vector(b);
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double d = static_cast<double>(x[k]) - static_cast<double>(y[k]);
        s += d * d;
    }
    return std::sqrt(s);
}

namespace {

std::vector<EmbeddingTable::Row> rows_or_throw(const TermWeights& w, const EmbeddingTable& table) {
    std::vector<EmbeddingTable::Row> rows;
    for (const auto& e : w.entries) {
        auto r = table.row(e.term);
        if (!r) throw Error("out-of-vocabulary term: " + e.term);
        rows.push_back(*r);
    }
    return rows;
}

constexpr double kMassEps = 1e-15;

}  // namespace

WmdResult wmd_exact(const TermWeights& a, const TermWeights& b, const EmbeddingTable& table) {
    if (a.scheme != WeightScheme::uniform || b.scheme != WeightScheme::uniform) {
        throw Error("exact transport requires uniform (normalized) weights");
    }
    if (std::abs(a.sum() - b.sum()) > 1e-9) throw Error("unbalanced transport problem");
    const auto rows_a = rows_or_throw(a, table);
    const auto rows_b = rows_or_throw(b, table);
    const std::size_t n = rows_a.size(), m = rows_b.size();

    std::vector<double> cost(n * m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) cost[i * m + j] = euclidean_distance(table, rows_a[i], rows_b[j]);
    }
    std::vector<double> supply(n), demand(m), flow(n * m, 0.0);
    for (std::size_t i = 0; i < n; ++i) supply[i] = a.entries[i].weight;
    for (std::size_t j = 0; j < m; ++j) demand[j] = b.entries[j].weight;

    // Successive shortest paths on the residual graph: nodes 0..n-1 are
    // sources, n..n+m-1 sinks. Forward arcs i->j are uncapacitated; backward
    // arcs j->i exist while flow(i,j) > 0 and cost -c(i,j).
    const std::size_t V = n + m;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(V);
    std::vector<std::size_t> pred(V);
    const std::size_t max_rounds = 64 * (n + 1) * (m + 1);
    for (std::size_t round = 0;; ++round) {
        if (round > max_rounds) throw Error("transport solver did not converge");
        std::fill(dist.begin(), dist.end(), inf);
        bool any_supply = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (supply[i] > kMassEps) {
                dist[i] = 0.0;
                pred[i] = i;
                any_supply = true;
            }
        }
        if (!any_supply) break;

        for (std::size_t pass = 0; pass < V; ++pass) {
            bool changed = false;
            for (std::size_t i = 0; i < n; ++i) {
                if (dist[i] == inf) continue;
                for (std::size_t j = 0; j < m; ++j) {
                    const double d = dist[i] + cost[i * m + j];
                    if (d < dist[n + j] - 1e-14) {
                        dist[n + j] = d;
                        pred[n + j] = i;
                        changed = true;
                    }
                }
            }
            for (std::size_t j = 0; j < m; ++j) {
                if (dist[n + j] == inf) continue;
                for (std::size_t i = 0; i < n; ++i) {
                    if (flow[i * m + j] <= kMassEps) continue;
                    const double d = dist[n + j] - cost[i * m + j];
                    if (d < dist[i] - 1e-14) {
                        dist[i] = d;
                        pred[i] = n + j;
                        changed = true;
                    }
                }
            }
            if (!changed) break;
        }

        std::size_t target = V;
        for (std::size_t j = 0; j < m; ++j) {
            if (demand[j] > kMassEps && dist[n + j] < inf && (target == V || dist[n + j] < dist[target])) {
                target = n + j;
            }
        }
        if (target == V) break;

        // walk back to the originating source, bounding the push
        double delta = demand[target - n];
        std::size_t v = target;
        std::size_t steps = 0;
        while (!(v < n && pred[v] == v)) {
            if (++steps > 2 * V) throw Error("transport solver found a residual cycle");
            const std::size_t u = pred[v];
            if (v < n) delta = std::min(delta, flow[v * m + (u - n)]);  // backward arc u(sink)->v(source)
            v = u;
        }
        delta = std::min(delta, supply[v]);
        const std::size_t origin = v;

        v = target;
        while (!(v < n && pred[v] == v)) {
            const std::size_t u = pred[v];
            if (v >= n) {
                flow[u * m + (v - n)] += delta;
            } else {
                flow[v * m + (u - n)] -= delta;
                if (flow[v * m + (u - n)] < kMassEps) flow[v * m + (u - n)] = 0.0;
            }
            v = u;
        }
        supply[origin] -= delta;
        demand[target - n] -= delta;
    }

    WmdResult out;
    for (const auto& e : a.entries) out.flow.sources.push_back(e.term);
    for (const auto& e : b.entries) out.flow.sinks.push_back(e.term);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (flow[i * m + j] > 0.0) {
                out.flow.entries.push_back({i, j, flow[i * m + j]});
                out.distance += flow[i * m + j] * cost[i * m + j];
            }
        }
    }
    return out;
}

double wmd_relaxed(const TermWeights& a, const TermWeights& b, const EmbeddingTable& table) {
    const auto rows_a = rows_or_throw(a, table);
    const auto rows_b = rows_or_throw(b, table);
    if (rows_b.empty()) throw Error("empty target bag");
    double total = 0.0;
    for (std::size_t i = 0; i < rows_a.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (auto rb : rows_b) best = std::min(best, euclidean_distance(table, rows_a[i], rb));
        total += a.entries[i].weight * best;
    }
    return total;
}

}  // namespace semrank
