#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>
#include <sstream>

#include "semrank/releval.hpp"
#include "support/metric_fixtures.hpp"

using namespace semrank;

namespace {

ClickRecord rec(std::string q, std::string doc, std::uint64_t a, std::uint64_t f, bool ft = true,
                std::uint64_t occ = 50, std::uint64_t results = 100) {
    return {std::move(q), std::move(doc), a, f, ft, occ, results};
}

}  // namespace

TEST_CASE("relevance label") {
    CHECK(relevance_label(0, 0, true) == 0.0);
    CHECK(relevance_label(0, 0, false) == 0.0);
    CHECK(relevance_label(3, 2, true) == doctest::Approx(2.33).epsilon(1e-12));
    CHECK(relevance_label(15, 0, false) == doctest::Approx(5.95).epsilon(1e-12));
    CHECK_THROWS_AS(relevance_label(1, 1, false), Error);
    CHECK_THROWS_AS(relevance_label(1, 0, true, {1.5, 15}), Error);
    CHECK_THROWS_AS(relevance_label(1, 0, true, {0.3, 0}), Error);
    const LabelParams p;
    CHECK(p.mu == 0.33);
    CHECK(p.lambda_boost == 15.0);
}

TEST_CASE("relevance label is monotone") {
    for (std::uint64_t a = 0; a < 20; ++a) {
        for (std::uint64_t f = 0; f < 20; ++f) {
            const double y = relevance_label(a, f, true);
            CHECK(y >= 0.0);
            CHECK(relevance_label(a + 1, f, true) >= y);
            CHECK(relevance_label(a, f + 1, true) >= y);
        }
        CHECK(relevance_label(a, 0, false) >= relevance_label(a, 0, true));
    }
}

TEST_CASE("aggregate merges and filters") {
    const std::vector<ClickRecord> in = {
        rec("Wound  Therapy", "d1", 2, 1),
        rec("wound therapy", "d1", 3, 0, false),
        rec("wound therapy", "d2", 1, 0),
        rec("rare query", "d1", 5, 0, true, 9),
        rec("few results", "d1", 5, 0, true, 50, 19),
        rec("smith j", "d1", 5, 0),
        rec("nature", "d3", 1, 0),
    };
    const auto out = aggregate_and_filter(in);
    REQUIRE(out.size() == 2);
    CHECK(out[0].query == "wound therapy");
    CHECK(out[0].doc_id == "d1");
    CHECK(out[0].abstract_clicks == 5);
    CHECK(out[0].fulltext_clicks == 1);
    CHECK(out[0].has_fulltext);
    CHECK(out[1].doc_id == "d2");

    AggregateOptions keep_all;
    keep_all.noninformational = nullptr;
    keep_all.min_occurrences = 0;
    keep_all.min_results = 0;
    CHECK(aggregate_and_filter(in).size() < aggregate_and_filter(in, keep_all).size());
    CHECK(aggregate_and_filter(in, keep_all).size() == 6);
}

TEST_CASE("non-informational queries") {
    for (const char* q : {"smith j", "smith ja", "smith j, jones ab", "o'brien k", "nature", "j biol chem",
                          "am j physiol", "cancer[au]", "journal of virology"}) {
        CHECK_MESSAGE(is_noninformational_query(q), q);
    }
    for (const char* q : {"wound therapy", "role of mms2 in cancer", "brca1 mutations breast cancer",
                          "negative pressure wound therapy"}) {
        CHECK_MESSAGE(!is_noninformational_query(q), q);
    }
    CHECK(normalize_query("  Foo \t BAR  ") == "foo bar");
}

TEST_CASE("click log reader") {
    std::istringstream in("wound therapy\td1\t3\t2\t1\t40\t200\nq2\td2\t0\t0\t0\t10\t20\n");
    const auto r = read_click_log(in);
    REQUIRE(r.size() == 2);
    CHECK(r[0].fulltext_clicks == 2);
    CHECK(r[1].has_fulltext == false);
    std::istringstream bad("q\td\t1\t2\t0\t10\t20\n");
    CHECK_THROWS_AS(read_click_log(bad), Error);
    std::istringstream short_row("q\td\t1\n");
    CHECK_THROWS_AS(read_click_log(short_row), Error);
    std::istringstream negative("q\td\t-1\t0\t0\t10\t20\n");
    CHECK_THROWS_AS(read_click_log(negative), Error);
}

TEST_CASE("judgments from clicks and file round trips") {
    const auto agg = aggregate_and_filter({rec("b query", "d1", 3, 2), rec("a query", "d2", 15, 0, false),
                                           rec("a query", "d3", 0, 0)});
    const auto j = judgments_from_clicks(agg);
    REQUIRE(j.size() == 2);
    CHECK(j.at("q1").text == "a query");
    CHECK(j.at("q1").grade("d2") == doctest::Approx(5.95));
    CHECK(j.at("q1").judged("d3"));
    CHECK(j.at("q1").relevant_count() == 1);
    CHECK(j.at("q2").grade("d1") == doctest::Approx(2.33));

    std::stringstream qrels;
    write_qrels(qrels, j);
    CHECK(qrels.str().find("q1 0 d2 5.9500\n") != std::string::npos);
    const auto back = read_qrels(qrels);
    for (const auto& [qid, jq] : j) CHECK(back.at(qid).grades == jq.grades);

    std::stringstream queries;
    write_queries(queries, j);
    const auto qs = read_queries(queries);
    REQUIRE(qs.size() == 2);
    CHECK(qs[0] == std::pair<std::string, std::string>{"q1", "a query"});

    std::istringstream bad("q1 0 d1\n");
    CHECK_THROWS_AS(read_qrels(bad), Error);
    std::istringstream negative("q1 0 d1 -1\n");
    CHECK_THROWS_AS(read_qrels(negative), Error);
}

TEST_CASE("qrels round trip on random grades") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> grade(0, 99999);
    Judgments j;
    for (int q = 0; q < 10; ++q) {
        auto& jq = j["q" + std::to_string(q)];
        jq.query_id = "q" + std::to_string(q);
        // values with at most four decimals survive the fixed-point format
        for (int d = 0; d < 20; ++d) jq.grades["d" + std::to_string(d)] = grade(rng) / 10000.0;
    }
    std::stringstream s;
    write_qrels(s, j);
    const auto back = read_qrels(s);
    for (const auto& [qid, jq] : j) {
        for (const auto& [doc, g] : jq.grades) CHECK(back.at(qid).grade(doc) == g);
    }
}

TEST_CASE("run files") {
    Run run;
    run["q1"] = {{"d3", 2.5}, {"d1", 1.25}};
    run["q2"] = {{"d9", -0.5}};
    std::stringstream s;
    write_run(s, run, "bm25");
    CHECK(s.str() == "q1 Q0 d3 1 2.5 bm25\nq1 Q0 d1 2 1.25 bm25\nq2 Q0 d9 1 -0.5 bm25\n");
    const auto back = read_run(s);
    REQUIRE(back.at("q1").size() == 2);
    CHECK(back.at("q1")[0].doc_id == "d3");
    // rank column decides the order, not line order
    std::istringstream shuffled("q1 Q0 b 2 1 t\nq1 Q0 a 1 2 t\n");
    CHECK(read_run(shuffled).at("q1")[0].doc_id == "a");
    std::istringstream bad("q1 Q0 a one 2 t\n");
    CHECK_THROWS_AS(read_run(bad), Error);
}

TEST_CASE("metric fixtures") {
    for (const auto& f : testing::metric_fixtures()) {
        CAPTURE(f.name);
        const auto got = testing::evaluate_fixture(f);
        REQUIRE(got.has_value() == f.expected.has_value());
        if (f.expected) CHECK(std::abs(*got - *f.expected) < 1e-12);
    }
    CHECK(std::abs(*average_precision({"r1", "n", "r2"}, {"q", "", {{"r1", 1}, {"r2", 1}}}, false) - 0.8333) < 1e-4);
    CHECK(std::abs(ndcg_at_k({"d2", "d1"}, {"q", "", {{"d1", 3}, {"d2", 0}}}, 2) - 0.6309) < 1e-4);
    CHECK_THROWS_AS(ndcg_at_k({"a"}, {"q", "", {{"a", 1}}}, 0), Error);
}

TEST_CASE("metric properties on random rankings") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> g(0, 3);
    for (int trial = 0; trial < 300; ++trial) {
        JudgedQuery jq{"q", "", {}};
        std::vector<std::string> docs;
        for (int d = 0; d < 12; ++d) {
            docs.push_back("d" + std::to_string(d));
            if (d < 9) jq.grades[docs.back()] = g(rng);
        }
        std::shuffle(docs.begin(), docs.end(), rng);
        const std::size_t k = 1 + trial % 12;
        const double n = ndcg_at_k(docs, jq, k);
        CHECK(n >= 0.0);
        CHECK(n <= 1.0 + 1e-12);
        if (jq.relevant_count() > 0) {
            const double ap = *average_precision(docs, jq, trial % 2 == 0);
            CHECK(ap > 0.0);
            CHECK(ap <= 1.0 + 1e-12);
        }
        // swapping an adjacent inverted pair within the cutoff never hurts
        for (std::size_t r = 0; r + 1 < std::min(k, docs.size()); ++r) {
            if (jq.grade(docs[r]) < jq.grade(docs[r + 1])) {
                auto swapped = docs;
                std::swap(swapped[r], swapped[r + 1]);
                CHECK(ndcg_at_k(swapped, jq, k) >= n - 1e-12);
            }
        }
        // ideal ordering is exactly 1
        auto ideal = docs;
        std::stable_sort(ideal.begin(), ideal.end(),
                         [&](const auto& a, const auto& b) { return jq.grade(a) > jq.grade(b); });
        if (jq.relevant_count() > 0) {
            CHECK(ndcg_at_k(ideal, jq, k) == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(*average_precision(ideal, jq, false) == 1.0);
        }
    }
}

TEST_CASE("evaluate run") {
    Judgments j;
    j["q1"] = {"q1", "", {{"a", 1}, {"b", 0}}};
    j["q2"] = {"q2", "", {{"c", 1}, {"d", 0}}};
    j["q3"] = {"q3", "", {{"e", 0}}};
    const std::map<std::string, std::vector<std::string>> rankings = {
        {"q1", {"a", "b"}}, {"q2", {"d", "c"}}, {"q3", {"e"}}, {"q4", {"x"}}};
    const auto eval = evaluate_run(rankings, j, {Metric::parse("map"), Metric::parse("ndcg@10")}, false);
    CHECK(eval.per_query.size() == 2);
    CHECK(eval.skipped == std::vector<std::string>{"q3", "q4"});
    CHECK(eval.mean[0] == doctest::Approx(0.75));
    CHECK(eval.per_query.at("q1")[1] == 1.0);

    std::ostringstream report;
    write_report(report, eval);
    CHECK(report.str() == "qid\tmap\tndcg@10\nq1\t1.0000\t1.0000\nq2\t0.5000\t0.6309\nmean\t0.7500\t0.8155\n");

    const auto one = evaluate_run({{"q1", {"a"}}}, j, {Metric::parse("ndcg@5")}, true);
    CHECK(one.mean[0] == 1.0);
}

TEST_CASE("metric names") {
    CHECK(Metric::parse("map").kind == Metric::Kind::map);
    CHECK(Metric::parse("ndcg@20").k == 20);
    CHECK(Metric::parse("ndcg@20").name() == "ndcg@20");
    CHECK_THROWS_AS(Metric::parse("ndcg@0"), Error);
    CHECK_THROWS_AS(Metric::parse("p@10"), Error);
    CHECK_THROWS_AS(Metric::parse("ndcg@x"), Error);
}
