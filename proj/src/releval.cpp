#include "semrank/releval.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <regex>
#include <sstream>

namespace semrank {

std::string normalize_query(std::string_view query) {
    std::string out;
    bool pending_space = false;
    for (char ch : query) {
        auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

bool is_noninformational_query(std::string_view normalized_query) {
    static const std::regex field_tag(R"(\[(au|fau|ta|jour|journal|author)\])");
    static const std::regex author(R"(^[a-z][a-z'\-]+ [a-z]{1,2}(, ?[a-z][a-z'\-]+ [a-z]{1,2})*$)");
    static const std::regex journal_abbrev(R"(^(j|ann|arch|am j|br j|eur j|int j|clin) [a-z]+( [a-z]+){0,4}$)");
    static const std::set<std::string, std::less<>> journals = {
        "nature",   "science",  "cell",       "lancet", "jama",        "bmj",
        "plos one", "n engl j med", "nucleic acids res", "proc natl acad sci u s a",
        "j biol chem", "pediatrics", "circulation", "neuron", "new england journal of medicine",
    };
    const std::string q(normalized_query);
    if (journals.contains(q)) return true;
    if (q.find("journal of") != std::string::npos) return true;
    return std::regex_search(q, field_tag) || std::regex_match(q, author) || std::regex_match(q, journal_abbrev);
}

std::vector<ClickRecord> aggregate_and_filter(const std::vector<ClickRecord>& records,
                                              const AggregateOptions& options) {
    std::map<std::pair<std::string, std::string>, ClickRecord> merged;
    struct QueryStats {
        std::uint64_t occurrences = 0;
        std::uint64_t results = 0;
    };
    std::map<std::string, QueryStats> stats;

    for (const auto& r : records) {
        auto q = normalize_query(r.query);
        auto& s = stats[q];
        s.occurrences = std::max(s.occurrences, r.query_occurrences);
        s.results = std::max(s.results, r.results_returned);

        auto [it, fresh] = merged.try_emplace({q, r.doc_id}, r);
        auto& m = it->second;
        if (fresh) {
            m.query = q;
            continue;
        }
        m.abstract_clicks += r.abstract_clicks;
        m.fulltext_clicks += r.fulltext_clicks;
        m.has_fulltext = m.has_fulltext || r.has_fulltext;
    }

    std::vector<ClickRecord> out;
    for (auto& [key, rec] : merged) {
        const auto& s = stats.at(key.first);
        if (s.occurrences < options.min_occurrences || s.results < options.min_results) continue;
        if (options.noninformational && options.noninformational(key.first)) continue;
        rec.query_occurrences = s.occurrences;
        rec.results_returned = s.results;
        out.push_back(std::move(rec));
    }
    return out;
}

double relevance_label(std::uint64_t abstract_clicks, std::uint64_t fulltext_clicks, bool has_fulltext,
                       const LabelParams& params) {
    if (fulltext_clicks > 0 && !has_fulltext) throw Error("full-text clicks on a document without full text");
    if (!(params.mu >= 0.0 && params.mu <= 1.0)) throw Error("mu must lie in [0, 1]");
    if (!(params.lambda_boost > 0.0)) throw Error("lambda must be positive");
    const double a = static_cast<double>(abstract_clicks);
    const double f = static_cast<double>(fulltext_clicks);
    return params.mu * a + (1.0 - params.mu) * f + (a / params.lambda_boost) * (has_fulltext ? 0.0 : 1.0);
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

template <typename T>
T parse_or_throw(std::string_view s, const char* what, std::size_t line_no) {
    T value{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error(std::string("line ") + std::to_string(line_no) + ": bad " + what + " '" + std::string(s) + "'");
    }
    return value;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

std::vector<ClickRecord> read_click_log(std::istream& in) {
    std::vector<ClickRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        auto cols = split(line, '\t');
        if (cols.size() != 7) {
            throw Error("click log line " + std::to_string(line_no) + ": expected 7 tab-separated columns");
        }
        ClickRecord r;
        r.query = std::string(cols[0]);
        r.doc_id = std::string(cols[1]);
        r.abstract_clicks = parse_or_throw<std::uint64_t>(cols[2], "abstract_clicks", line_no);
        r.fulltext_clicks = parse_or_throw<std::uint64_t>(cols[3], "fulltext_clicks", line_no);
        if (cols[4] != "0" && cols[4] != "1") {
            throw Error("click log line " + std::to_string(line_no) + ": has_fulltext must be 0 or 1");
        }
        r.has_fulltext = cols[4] == "1";
        r.query_occurrences = parse_or_throw<std::uint64_t>(cols[5], "query_occurrences", line_no);
        r.results_returned = parse_or_throw<std::uint64_t>(cols[6], "results_returned", line_no);
        if (r.fulltext_clicks > 0 && !r.has_fulltext) {
            throw Error("click log line " + std::to_string(line_no) + ": full-text clicks without full-text link");
        }
        out.push_back(std::move(r));
    }
    return out;
}

double JudgedQuery::grade(const std::string& doc_id) const {
    auto it = grades.find(doc_id);
    return it == grades.end() ? 0.0 : it->second;
}

std::size_t JudgedQuery::relevant_count() const {
    return static_cast<std::size_t>(
        std::count_if(grades.begin(), grades.end(), [](const auto& g) { return g.second > 0.0; }));
}

Judgments judgments_from_clicks(const std::vector<ClickRecord>& aggregated, const LabelParams& params) {
    Judgments out;
    std::map<std::string, std::string> ids;
    for (const auto& r : aggregated) {
        auto [it, fresh] = ids.try_emplace(r.query, "");
        if (fresh) it->second = "q" + std::to_string(ids.size());
        auto& jq = out[it->second];
        jq.query_id = it->second;
        jq.text = r.query;
        jq.grades[r.doc_id] = relevance_label(r.abstract_clicks, r.fulltext_clicks, r.has_fulltext, params);
    }
    return out;
}

void write_qrels(std::ostream& out, const Judgments& judgments) {
    char buf[64];
    for (const auto& [qid, jq] : judgments) {
        for (const auto& [doc, grade] : jq.grades) {
            std::snprintf(buf, sizeof(buf), "%.4f", grade);
            out << qid << " 0 " << doc << ' ' << buf << '\n';
        }
    }
}

Judgments read_qrels(std::istream& in) {
    Judgments out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto cols = split_whitespace(line);
        if (cols.empty()) continue;
        if (cols.size() != 4) throw Error("qrels line " + std::to_string(line_no) + ": expected 4 columns");
        const double grade = parse_or_throw<double>(cols[3], "grade", line_no);
        if (!(grade >= 0.0) || !std::isfinite(grade)) {
            throw Error("qrels line " + std::to_string(line_no) + ": grade must be finite and >= 0");
        }
        auto& jq = out[std::string(cols[0])];
        jq.query_id = std::string(cols[0]);
        jq.grades[std::string(cols[2])] = grade;
    }
    return out;
}

void write_queries(std::ostream& out, const Judgments& judgments) {
    for (const auto& [qid, jq] : judgments) out << qid << '\t' << jq.text << '\n';
}

std::vector<std::pair<std::string, std::string>> read_queries(std::istream& in) {
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw Error("queries line " + std::to_string(line_no) + ": expected qid<TAB>text");
        out.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    return out;
}

void write_run(std::ostream& out, const Run& run, std::string_view tag) {
    char buf[64];
    for (const auto& [qid, entries] : run) {
        for (std::size_t r = 0; r < entries.size(); ++r) {
            std::snprintf(buf, sizeof(buf), "%.10g", entries[r].score);
            out << qid << " Q0 " << entries[r].doc_id << ' ' << (r + 1) << ' ' << buf << ' ' << tag << '\n';
        }
    }
}

Run read_run(std::istream& in) {
    std::map<std::string, std::vector<std::pair<std::size_t, RunEntry>>> ranked;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto cols = split_whitespace(line);
        if (cols.empty()) continue;
        if (cols.size() != 6) throw Error("run line " + std::to_string(line_no) + ": expected 6 columns");
        auto rank = parse_or_throw<std::size_t>(cols[3], "rank", line_no);
        auto score = parse_or_throw<double>(cols[4], "score", line_no);
        ranked[std::string(cols[0])].push_back({rank, {std::string(cols[2]), score}});
    }
    Run out;
    for (auto& [qid, entries] : ranked) {
        std::stable_sort(entries.begin(), entries.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        auto& dst = out[qid];
        for (auto& e : entries) dst.push_back(std::move(e.second));
    }
    return out;
}

double dcg_gain(double grade) { return std::exp2(grade) - 1.0; }

double dcg_discount(std::size_t rank) { return 1.0 / std::log2(static_cast<double>(rank) + 1.0); }

std::optional<double> average_precision(const std::vector<std::string>& ranked, const JudgedQuery& judged,
                                        bool judged_only) {
    const std::size_t relevant = judged.relevant_count();
    if (relevant == 0) return std::nullopt;
    double sum = 0.0;
    std::size_t rank = 0, hits = 0;
    for (const auto& doc : ranked) {
        if (judged_only && !judged.judged(doc)) continue;
        ++rank;
        if (judged.grade(doc) > 0.0) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(rank);
        }
    }
    return sum / static_cast<double>(relevant);
}

double ndcg_at_k(const std::vector<std::string>& ranked, const JudgedQuery& judged, std::size_t k) {
    if (k == 0) throw Error("ndcg cutoff must be >= 1");
    double dcg = 0.0;
    for (std::size_t r = 0; r < ranked.size() && r < k; ++r) dcg += dcg_gain(judged.grade(ranked[r])) * dcg_discount(r + 1);

    std::vector<double> ideal;
    for (const auto& [doc, g] : judged.grades) ideal.push_back(g);
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t r = 0; r < ideal.size() && r < k; ++r) idcg += dcg_gain(ideal[r]) * dcg_discount(r + 1);
    return idcg > 0.0 ? dcg / idcg : 0.0;
}

std::string Metric::name() const { return kind == Kind::map ? "map" : "ndcg@" + std::to_string(k); }

Metric Metric::parse(std::string_view spec) {
    if (spec == "map") return {Kind::map, 0};
    if (spec.starts_with("ndcg@")) {
        auto digits = spec.substr(5);
        std::size_t k = 0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
        if (ec == std::errc() && ptr == digits.data() + digits.size() && k >= 1) return {Kind::ndcg, k};
    }
    throw Error("unknown metric '" + std::string(spec) + "' (expected map or ndcg@<k>)");
}

Evaluation evaluate_run(const std::map<std::string, std::vector<std::string>>& rankings,
                        const Judgments& judgments, const std::vector<Metric>& metrics, bool judged_only) {
    Evaluation eval;
    eval.metrics = metrics;
    eval.mean.assign(metrics.size(), 0.0);
    for (const auto& [qid, ranked] : rankings) {
        auto it = judgments.find(qid);
        if (it == judgments.end() || it->second.relevant_count() == 0) {
            eval.skipped.push_back(qid);
            continue;
        }
        const auto& jq = it->second;
        std::vector<std::string> condensed;
        const std::vector<std::string>* list = &ranked;
        if (judged_only) {
            std::copy_if(ranked.begin(), ranked.end(), std::back_inserter(condensed),
                         [&](const std::string& d) { return jq.judged(d); });
            list = &condensed;
        }
        auto& values = eval.per_query[qid];
        for (const auto& m : metrics) {
            values.push_back(m.kind == Metric::Kind::map ? *average_precision(*list, jq, false)
                                                         : ndcg_at_k(*list, jq, m.k));
        }
    }
    if (!eval.per_query.empty()) {
        for (const auto& [qid, values] : eval.per_query) {
            for (std::size_t i = 0; i < values.size(); ++i) eval.mean[i] += values[i];
        }
        for (auto& m : eval.mean) m /= static_cast<double>(eval.per_query.size());
    }
    return eval;
}

void write_report(std::ostream& out, const Evaluation& eval) {
    char buf[64];
    out << "qid";
    for (const auto& m : eval.metrics) out << '\t' << m.name();
    out << '\n';
    auto row = [&](const std::string& label, const std::vector<double>& values) {
        out << label;
        for (double v : values) {
            std::snprintf(buf, sizeof(buf), "%.4f", v);
            out << '\t' << buf;
        }
        out << '\n';
    };
    for (const auto& [qid, values] : eval.per_query) row(qid, values);
    row("mean", eval.mean);
}

}  // namespace semrank
