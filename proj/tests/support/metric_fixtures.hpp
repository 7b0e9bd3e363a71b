#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "semrank/releval.hpp"

namespace semrank::testing {

/// A ranking, its judgments and the value worked out by hand.
struct MetricFixture {
    std::string name;
    std::vector<std::string> ranked;
    std::map<std::string, double> grades;
    enum class Kind { ap, ndcg } kind;
    std::size_t k = 0;
    bool judged_only = false;
    std::optional<double> expected;
};

inline std::vector<MetricFixture> metric_fixtures() {
    using K = MetricFixture::Kind;
    const double l3 = std::log2(3.0);
    return {
        {"ap perfect", {"r1", "r2"}, {{"r1", 1}, {"r2", 1}}, K::ap, 0, false, 1.0},
        {"ap ranks 1 and 3", {"r1", "n", "r2"}, {{"r1", 1}, {"r2", 1}, {"n", 0}}, K::ap, 0, false, (1.0 + 2.0 / 3.0) / 2},
        {"ap second", {"n", "r1"}, {{"r1", 1}, {"n", 0}}, K::ap, 0, false, 0.5},
        {"ap condensed", {"u", "r1"}, {{"r1", 1}}, K::ap, 0, true, 1.0},
        {"ap unjudged kept", {"u", "r1"}, {{"r1", 1}}, K::ap, 0, false, 0.5},
        {"ap three relevant", {"r1", "n1", "n2", "r2", "r3"},
         {{"r1", 1}, {"r2", 1}, {"r3", 1}, {"n1", 0}, {"n2", 0}}, K::ap, 0, false, (1.0 + 2.0 / 4 + 3.0 / 5) / 3},
        {"ap missing relevant", {"r1", "n1"}, {{"r1", 1}, {"r2", 1}, {"n1", 0}}, K::ap, 0, false, 0.5},
        {"ap third", {"n1", "n2", "r1"}, {{"r1", 1}, {"n1", 0}, {"n2", 0}}, K::ap, 0, false, 1.0 / 3},
        {"ap graded is binary", {"r2", "n", "r1"}, {{"r1", 2.5}, {"r2", 0.3}, {"n", 0}}, K::ap, 0, false,
         (1.0 + 2.0 / 3) / 2},
        {"ap condensed mixed", {"u1", "n1", "u2", "r1", "u3", "r2"}, {{"r1", 1}, {"r2", 1}, {"n1", 0}}, K::ap, 0,
         true, (1.0 / 2 + 2.0 / 3) / 2},
        {"ap uncondensed mixed", {"u1", "n1", "u2", "r1", "u3", "r2"}, {{"r1", 1}, {"r2", 1}, {"n1", 0}}, K::ap, 0,
         false, (1.0 / 4 + 2.0 / 6) / 2},
        {"ap no relevant", {"a"}, {{"a", 0}}, K::ap, 0, false, std::nullopt},
        {"ap empty ranking", {}, {{"r1", 1}}, K::ap, 0, false, 0.0},
        {"ndcg swapped pair", {"d2", "d1"}, {{"d1", 3}, {"d2", 0}}, K::ndcg, 2, false, (7 / l3) / 7},
        {"ndcg ideal", {"a", "b", "c"}, {{"a", 3}, {"b", 2}, {"c", 1}}, K::ndcg, 3, false, 1.0},
        {"ndcg cut before hit", {"d2", "d1"}, {{"d1", 3}, {"d2", 0}}, K::ndcg, 1, false, 0.0},
        {"ndcg reversed pair", {"a", "b"}, {{"a", 1}, {"b", 2}}, K::ndcg, 2, false, (1 + 3 / l3) / (3 + 1 / l3)},
        {"ndcg short list", {"b"}, {{"a", 2}, {"b", 1}, {"c", 1}}, K::ndcg, 10, false, 1 / (3 + 1 / l3 + 0.5)},
        {"ndcg unjudged gain zero", {"u", "a"}, {{"a", 1}}, K::ndcg, 5, false, 1 / l3},
        {"ndcg zero ideal", {"a"}, {{"a", 0}}, K::ndcg, 3, false, 0.0},
        {"ndcg real grades", {"a", "b"}, {{"a", 0.5}, {"b", 1.5}}, K::ndcg, 2, false,
         ((std::sqrt(2.0) - 1) + (std::sqrt(8.0) - 1) / l3) / ((std::sqrt(8.0) - 1) + (std::sqrt(2.0) - 1) / l3)},
        {"ndcg condensed", {"u", "a"}, {{"a", 1}}, K::ndcg, 5, true, 1.0},
        {"ndcg reversed four", {"d", "c", "b", "a"}, {{"a", 3}, {"b", 2}, {"c", 1}, {"d", 0}}, K::ndcg, 3, false,
         (1 / l3 + 3.0 / 2) / (7 + 3 / l3 + 1.0 / 2)},
    };
}

inline JudgedQuery fixture_query(const MetricFixture& f) { return JudgedQuery{"q", "", f.grades}; }

/// Runs one fixture through the library.
inline std::optional<double> evaluate_fixture(const MetricFixture& f) {
    const auto jq = fixture_query(f);
    std::vector<std::string> list = f.ranked;
    if (f.kind == MetricFixture::Kind::ap) return average_precision(list, jq, f.judged_only);
    if (f.judged_only) {
        std::erase_if(list, [&](const std::string& d) { return !jq.judged(d); });
    }
    return ndcg_at_k(list, jq, f.k);
}

}  // namespace semrank::testing
