#include "support/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace semrank::testing {

std::vector<double> random_unit(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(dim);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (auto& x : v) {
            x = normal(rng);
            norm += x * x;
        }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
}

EmbeddingTable random_table(const std::vector<std::string>& words, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    EmbeddingTable table(dim);
    for (const auto& w : words) table.add(w, random_unit(rng, dim));
    return table;
}

namespace {

std::string concept_form(std::size_t concept_id, bool query_side) {
    return "c" + std::to_string(concept_id) + (query_side ? "q" : "d");
}

std::string join(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out += ' ';
        out += w;
    }
    return out;
}

struct Generator {
    const SynonymCorpusOptions& opt;
    std::mt19937_64 rng;
    std::discrete_distribution<std::size_t> zipf;

    explicit Generator(const SynonymCorpusOptions& o) : opt(o), rng(o.seed) {
        std::vector<double> w(o.background_words);
        for (std::size_t r = 0; r < w.size(); ++r) w[r] = 1.0 / static_cast<double>(r + 1);
        zipf = std::discrete_distribution<std::size_t>(w.begin(), w.end());
    }

    std::size_t uniform(std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    }
    bool coin(double p) { return std::bernoulli_distribution(p)(rng); }

    void background(std::vector<std::string>& out, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) out.push_back("w" + std::to_string(zipf(rng)));
    }

    Document finish(std::vector<std::string> title, std::vector<std::string> abstract) {
        std::shuffle(title.begin(), title.end(), rng);
        std::shuffle(abstract.begin(), abstract.end(), rng);
        return {"", join(title), join(abstract)};
    }
};

}  // namespace

SynonymCorpus make_synonym_corpus(const SynonymCorpusOptions& opt) {
    Generator g(opt);
    const std::size_t cpq = opt.concepts_per_query;
    const std::size_t query_concepts = opt.num_queries * cpq;
    const std::size_t n_concepts = query_concepts + opt.extra_concepts;

    SynonymCorpus out;
    out.table = EmbeddingTable(opt.dim);
    for (std::size_t w = 0; w < opt.background_words; ++w) {
        out.table.add("w" + std::to_string(w), random_unit(g.rng, opt.dim));
    }
    for (std::size_t c = 0; c < n_concepts; ++c) {
        const auto base = random_unit(g.rng, opt.dim);
        for (bool query_side : {true, false}) {
            const auto noise = random_unit(g.rng, opt.dim);
            std::vector<double> v(opt.dim);
            for (std::size_t i = 0; i < opt.dim; ++i) v[i] = base[i] + opt.synonym_noise * noise[i];
            out.table.add(concept_form(c, query_side), v);
        }
    }

    // (document, owning query or -1, grade)
    struct Pending {
        Document doc;
        long query;
        double grade;
    };
    std::vector<Pending> pending;

    for (std::size_t q = 0; q < opt.num_queries; ++q) {
        std::vector<std::size_t> concepts(cpq);
        for (std::size_t i = 0; i < cpq; ++i) concepts[i] = q * cpq + i;

        for (std::size_t r = 0; r < opt.relevant_per_query; ++r) {
            const bool zero_literal = r < opt.zero_literal_per_query;
            // query-side spelling allowed only for literal documents; at least one is forced
            std::vector<bool> literal(cpq, false);
            if (!zero_literal) {
                for (std::size_t i = 0; i < cpq; ++i) literal[i] = g.coin(0.5);
                literal[g.uniform(0, cpq - 1)] = true;
            }
            std::vector<std::size_t> order = concepts;
            std::shuffle(order.begin(), order.end(), g.rng);
            const std::size_t in_title = g.uniform(cpq - 1, cpq);
            std::vector<std::string> title, abstract;
            for (std::size_t i = 0; i < in_title; ++i) {
                const std::size_t c = order[i];
                title.push_back(concept_form(c, literal[c - q * cpq]));
            }
            g.background(title, g.uniform(4, 8));
            for (std::size_t c : concepts) {
                const std::size_t reps = g.uniform(1, 3);
                for (std::size_t k = 0; k < reps; ++k) abstract.push_back(concept_form(c, literal[c - q * cpq]));
            }
            g.background(abstract, g.uniform(60, 100));
            pending.push_back({g.finish(std::move(title), std::move(abstract)), static_cast<long>(q),
                               in_title == cpq ? 2.0 : 1.0});
        }

        for (std::size_t r = 0; r < opt.distractors_per_query; ++r) {
            // literal mentions of at most cpq-1 concepts, repeated, plus off-topic concepts
            std::vector<std::size_t> order = concepts;
            std::shuffle(order.begin(), order.end(), g.rng);
            const std::size_t mentioned = g.uniform(1, cpq - 1);
            std::vector<std::string> title, abstract;
            if (g.coin(0.5)) title.push_back(concept_form(order[0], true));
            title.push_back(concept_form(query_concepts + g.uniform(0, opt.extra_concepts - 1), g.coin(0.5)));
            g.background(title, g.uniform(4, 8));
            for (std::size_t i = 0; i < mentioned; ++i) {
                const std::size_t reps = g.uniform(2, 4);
                for (std::size_t k = 0; k < reps; ++k) abstract.push_back(concept_form(order[i], true));
            }
            for (std::size_t k = 0; k < 3; ++k) {
                abstract.push_back(concept_form(query_concepts + g.uniform(0, opt.extra_concepts - 1), g.coin(0.5)));
            }
            g.background(abstract, g.uniform(60, 100));
            pending.push_back({g.finish(std::move(title), std::move(abstract)), static_cast<long>(q), 0.0});
        }

        for (std::size_t r = 0; r < opt.near_misses_per_query; ++r) {
            std::vector<std::string> title, abstract;
            if (g.coin(0.5)) title.push_back(concept_form(concepts[g.uniform(0, cpq - 1)], g.coin(0.5)));
            title.push_back(concept_form(query_concepts + g.uniform(0, opt.extra_concepts - 1), g.coin(0.5)));
            g.background(title, g.uniform(4, 8));
            for (std::size_t c : concepts) {
                const std::size_t reps = g.uniform(1, 3);
                for (std::size_t k = 0; k < reps; ++k) abstract.push_back(concept_form(c, g.coin(0.3)));
            }
            for (std::size_t k = 0; k < 4; ++k) {
                abstract.push_back(concept_form(query_concepts + g.uniform(0, opt.extra_concepts - 1), g.coin(0.5)));
            }
            g.background(abstract, g.uniform(60, 100));
            pending.push_back({g.finish(std::move(title), std::move(abstract)), static_cast<long>(q), 0.0});
        }
    }

    while (pending.size() < opt.num_docs) {
        std::vector<std::string> title, abstract;
        title.push_back(concept_form(query_concepts + g.uniform(0, opt.extra_concepts - 1), g.coin(0.5)));
        g.background(title, g.uniform(4, 8));
        for (std::size_t k = 0; k < 4; ++k) {
            abstract.push_back(concept_form(query_concepts + g.uniform(0, opt.extra_concepts - 1), g.coin(0.5)));
        }
        g.background(abstract, g.uniform(60, 100));
        pending.push_back({g.finish(std::move(title), std::move(abstract)), -1, 0.0});
    }

    // ids are assigned after shuffling so id order carries no signal
    std::shuffle(pending.begin(), pending.end(), g.rng);
    for (std::size_t q = 0; q < opt.num_queries; ++q) {
        std::vector<std::string> words;
        for (std::size_t i = 0; i < cpq; ++i) words.push_back(concept_form(q * cpq + i, true));
        const std::string qid = "q" + std::to_string(q + 1);
        out.queries.emplace_back(qid, join(words));
        out.judgments[qid] = JudgedQuery{qid, join(words), {}};
    }
    out.docs.reserve(pending.size());
    for (std::size_t i = 0; i < pending.size(); ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "d%05zu", i);
        pending[i].doc.id = id;
        if (pending[i].query >= 0) {
            out.judgments["q" + std::to_string(pending[i].query + 1)].grades[id] = pending[i].grade;
        }
        out.docs.push_back(std::move(pending[i].doc));
    }
    return out;
}

double zero_literal_fraction(const SynonymCorpus& corpus, const TokenConfig& cfg) {
    std::map<std::string, const Document*> by_id;
    for (const auto& d : corpus.docs) by_id[d.id] = &d;
    std::size_t relevant = 0, zero = 0;
    for (const auto& [qid, jq] : corpus.judgments) {
        const auto q = tokenize(jq.text, cfg);
        const std::set<std::string> qset(q.begin(), q.end());
        for (const auto& [doc_id, grade] : jq.grades) {
            if (grade <= 0) continue;
            ++relevant;
            const Document& d = *by_id.at(doc_id);
            bool hit = false;
            for (const auto* text : {&d.title, &d.abstract}) {
                for (const auto& t : tokenize(*text, cfg)) hit = hit || qset.contains(t);
            }
            if (!hit) ++zero;
        }
    }
    return relevant == 0 ? 0.0 : static_cast<double>(zero) / static_cast<double>(relevant);
}

}  // namespace semrank::testing
