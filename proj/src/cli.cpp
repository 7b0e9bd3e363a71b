#include "semrank/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "semrank/corpus.hpp"
#include "semrank/embeddings.hpp"
#include "semrank/ranking.hpp"
#include "semrank/releval.hpp"
#include "semrank/search.hpp"

namespace semrank {

namespace {

std::ifstream open_in(const std::string& path, bool binary = false) {
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) throw Error("cannot open " + path);
    return in;
}

std::ofstream open_out(const std::string& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    return out;
}

CorpusIndex load_index(const std::string& path) {
    auto in = open_in(path, true);
    return CorpusIndex::load(in);
}

EmbeddingTable load_table(const std::string& path, const std::string& format, std::ostream& err) {
    auto in = open_in(path, true);
    auto table = load_embeddings(in, parse_embedding_format(format));
    if (table.dropped() > 0) err << "warning: dropped " << table.dropped() << " zero-norm vectors from " << path << '\n';
    return table;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

struct IndexArgs {
    std::string corpus, out, stopwords;
    bool no_stopwords = false, keep_case = false;
    std::size_t min_token_length = 1;
};

int run_index(const IndexArgs& a, std::ostream& out) {
    TokenConfig cfg;
    cfg.lowercase = !a.keep_case;
    cfg.min_token_length = a.min_token_length;
    if (!a.no_stopwords) {
        if (a.stopwords.empty()) {
            cfg.stopwords = default_stopwords();
        } else {
            auto in = open_in(a.stopwords);
            cfg.stopwords = read_stopwords(in);
        }
    }
    auto in = open_in(a.corpus);
    const auto docs = read_corpus_jsonl(in);
    const auto index = build_index(docs, cfg);
    auto o = open_out(a.out, true);
    index.save(o);
    out << "indexed " << index.size() << " documents, " << index.vocabulary_size() << " terms\n";
    return 0;
}

struct EmbedCheckArgs {
    std::string embeddings, format = "text";
};

int run_embed_check(const EmbedCheckArgs& a, std::ostream& out, std::ostream& err) {
    const auto table = load_table(a.embeddings, a.format, err);
    double worst = 0.0;
    for (EmbeddingTable::Row r = 0; r < table.size(); ++r) worst = std::max(worst, std::abs(std::sqrt(table.dot(r, r)) - 1.0));
    out << "words\t" << table.size() << "\ndim\t" << table.dim() << "\ndropped\t" << table.dropped()
        << "\nmax_norm_deviation\t" << worst << '\n';
    return 0;
}

struct SearchArgs {
    std::string index, embeddings, format = "text", model;
    std::string scorer = "bm25", field = "both";
    std::string query, qid = "1", queries, out, explain, tag;
    long candidates = -1;
    std::size_t top_k = 1000, threads = 1;
    double k = 1.9, b = 1.0;
    bool clamp_idf = false;
};

int run_search(const SearchArgs& a, std::ostream& out, std::ostream& err) {
    if (a.query.empty() == a.queries.empty()) throw CLI::ValidationError("search", "give exactly one of --query or --queries");
    SearchConfig cfg;
    cfg.scorer = parse_scorer(a.scorer);
    cfg.field = parse_field(a.field);
    cfg.top_k = a.top_k;
    cfg.threads = a.threads;
    cfg.bm25 = {a.k, a.b, a.clamp_idf};
    cfg.candidates = a.candidates >= 0 ? static_cast<std::size_t>(a.candidates)
                                       : (cfg.scorer == ScorerKind::ltr ? 500 : 0);

    const auto index = load_index(a.index);
    std::optional<EmbeddingTable> table;
    if (!a.embeddings.empty()) table = load_table(a.embeddings, a.format, err);
    std::optional<RankingModel> model;
    if (!a.model.empty()) {
        auto in = open_in(a.model);
        model = RankingModel::from_json(std::string(std::istreambuf_iterator<char>(in), {}));
    }
    if ((cfg.scorer == ScorerKind::sem || cfg.scorer == ScorerKind::centroid || cfg.scorer == ScorerKind::ltr) &&
        !table) {
        throw Error("scorer " + a.scorer + " requires --embeddings");
    }
    if (cfg.scorer == ScorerKind::ltr && !model) throw Error("scorer ltr requires --model");

    std::vector<std::pair<std::string, std::string>> queries;
    if (!a.query.empty()) {
        queries.emplace_back(a.qid, a.query);
    } else {
        auto in = open_in(a.queries);
        queries = read_queries(in);
    }

    Searcher searcher(index, table ? &*table : nullptr, model ? &*model : nullptr);
    Run run;
    std::unique_ptr<std::ofstream> explain;
    if (!a.explain.empty()) explain = std::make_unique<std::ofstream>(open_out(a.explain));
    for (const auto& [qid, text] : queries) {
        auto results = searcher.search(text, cfg);
        auto& entries = run[qid];
        for (auto& r : results) {
            entries.push_back({r.doc_id, r.score});
            if (explain && r.matches) {
                for (const auto& m : *r.matches) {
                    nlohmann::json j = {{"qid", qid}, {"doc_id", r.doc_id}, {"qterm", m.query_term},
                                        {"dterm", m.doc_term}, {"cos", m.cosine}};
                    *explain << j.dump() << '\n';
                }
            }
        }
    }
    const std::string tag = a.tag.empty() ? std::string(to_string(cfg.scorer)) : a.tag;
    if (a.out.empty()) {
        write_run(out, run, tag);
    } else {
        auto o = open_out(a.out);
        write_run(o, run, tag);
    }
    return 0;
}

struct FeaturesArgs {
    std::string index, embeddings, format = "text", queries, qrels, out;
    std::string schema = "bm25,sem_title";
    std::size_t candidates = 500, threads = 1;
    bool no_judged = false;
    double k = 1.9, b = 1.0;
};

int run_features(const FeaturesArgs& a, std::ostream& out, std::ostream& err) {
    const auto index = load_index(a.index);
    const auto table = load_table(a.embeddings, a.format, err);
    auto qin = open_in(a.queries);
    const auto queries = read_queries(qin);
    auto jin = open_in(a.qrels);
    const auto judgments = read_qrels(jin);

    FeatureConfig fc{{split_list(a.schema)}, {a.k, a.b, false}};
    FeatureExtractor extractor(index, table, fc);
    Searcher searcher(index, &table);
    RankingDataset data;
    data.schema = fc.schema;
    std::size_t skipped = 0;
    for (const auto& [qid, text] : queries) {
        auto jq = judgments.find(qid);
        if (jq == judgments.end()) {
            ++skipped;
            continue;
        }
        const auto tokens = tokenize(text, index.token_config());
        if (tokens.empty()) {
            ++skipped;
            continue;
        }
        std::vector<DocOrdinal> docs;
        std::set<DocOrdinal> seen;
        for (const auto& sd : searcher.bm25_ranking(tokens, fc.bm25, Field::both, a.candidates, a.threads)) {
            auto d = *index.ordinal(sd.doc_id);
            if (seen.insert(d).second) docs.push_back(d);
        }
        if (!a.no_judged) {
            for (const auto& [doc_id, grade] : jq->second.grades) {
                auto d = index.ordinal(doc_id);
                if (d && seen.insert(*d).second) docs.push_back(*d);
            }
        }
        extractor.set_query(tokens);
        for (auto d : docs) {
            const auto& doc_id = index.doc(d).id;
            data.instances.push_back({qid, doc_id, extractor.extract(d), jq->second.grade(doc_id)});
        }
    }
    if (skipped > 0) err << "warning: skipped " << skipped << " queries without judgments or terms\n";
    auto o = open_out(a.out);
    write_letor(o, data);
    out << "wrote " << data.instances.size() << " instances\n";
    return 0;
}

struct LabelArgs {
    std::string clicks, qrels, queries;
    double mu = 0.33, lambda = 15.0;
    std::uint64_t min_occurrences = 10, min_results = 20;
    bool no_query_filter = false;
};

int run_label(const LabelArgs& a, std::ostream& out) {
    auto in = open_in(a.clicks);
    const auto records = read_click_log(in);
    AggregateOptions opts;
    opts.min_occurrences = a.min_occurrences;
    opts.min_results = a.min_results;
    if (a.no_query_filter) opts.noninformational = nullptr;
    const auto aggregated = aggregate_and_filter(records, opts);
    const auto judgments = judgments_from_clicks(aggregated, {a.mu, a.lambda});
    auto qo = open_out(a.qrels);
    write_qrels(qo, judgments);
    if (!a.queries.empty()) {
        auto o = open_out(a.queries);
        write_queries(o, judgments);
    }
    out << "labeled " << aggregated.size() << " query-document pairs over " << judgments.size() << " queries\n";
    return 0;
}

struct TrainArgs {
    std::string features, model, test_out, schema = "bm25,sem_title";
    LtrHyperparams hp;
    double train_fraction = 1.0;
};

int run_train(const TrainArgs& a, std::ostream& out) {
    auto in = open_in(a.features);
    auto data = read_letor(in, {split_list(a.schema)});
    if (a.train_fraction < 1.0) {
        auto [train, test] = split_by_query(data, a.train_fraction, a.hp.rng_seed);
        if (!a.test_out.empty()) {
            auto o = open_out(a.test_out);
            write_letor(o, test);
        }
        data = std::move(train);
    }
    const auto model = train_lambdamart(data, a.hp);
    auto o = open_out(a.model);
    o << model.to_json();
    out << "trained " << model.trees.size() << " trees; training ndcg@" << a.hp.ndcg_truncation << " = "
        << mean_ndcg(model, data, a.hp.ndcg_truncation) << '\n';
    return 0;
}

struct EvalArgs {
    std::string run, qrels, out;
    std::vector<std::string> metrics;
    bool judged_only = false;
};

int run_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
    std::vector<Metric> metrics;
    for (const auto& spec : a.metrics) {
        for (const auto& m : split_list(spec)) metrics.push_back(Metric::parse(m));
    }
    if (metrics.empty()) metrics.push_back(Metric::parse("map"));
    auto rin = open_in(a.run);
    const auto run = read_run(rin);
    auto qin = open_in(a.qrels);
    const auto judgments = read_qrels(qin);
    std::map<std::string, std::vector<std::string>> rankings;
    for (const auto& [qid, entries] : run) {
        auto& list = rankings[qid];
        for (const auto& e : entries) list.push_back(e.doc_id);
    }
    const auto eval = evaluate_run(rankings, judgments, metrics, a.judged_only);
    for (const auto& qid : eval.skipped) err << "warning: query " << qid << " has no relevant judgments; excluded\n";
    if (a.out.empty()) {
        write_report(out, eval);
    } else {
        auto o = open_out(a.out);
        write_report(o, eval);
    }
    return 0;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Semantic document ranking toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "INI/TOML file mirroring command-line flags (flags take precedence)");
    app.option_defaults()->always_capture_default();

    IndexArgs ia;
    auto* index_cmd = app.add_subcommand("index", "Tokenize a JSONL corpus and write a binary index");
    index_cmd->add_option("--corpus", ia.corpus, "JSONL corpus (id, title, abstract)")->required();
    index_cmd->add_option("--out", ia.out, "Index output path")->required();
    index_cmd->add_option("--stopwords", ia.stopwords, "Stopword file, one term per line (default: bundled English list)");
    index_cmd->add_flag("--no-stopwords", ia.no_stopwords, "Keep stopwords");
    index_cmd->add_flag("--keep-case", ia.keep_case, "Do not lowercase tokens");
    index_cmd->add_option("--min-token-length", ia.min_token_length, "Drop shorter tokens")->check(CLI::PositiveNumber);

    EmbedCheckArgs ea;
    auto* embed_cmd = app.add_subcommand("embed-check", "Load an embedding file and report its shape");
    embed_cmd->add_option("--embeddings", ea.embeddings, "word2vec-format file")->required();
    embed_cmd->add_option("--format", ea.format, "text or binary")->check(CLI::IsMember({"text", "binary"}));

    SearchArgs sa;
    auto* search_cmd = app.add_subcommand("search", "Rank documents for one query or a query file");
    search_cmd->add_option("--index", sa.index, "Index file")->required();
    search_cmd->add_option("--embeddings", sa.embeddings, "word2vec-format file (centroid, sem, ltr)");
    search_cmd->add_option("--format", sa.format, "Embedding format")->check(CLI::IsMember({"text", "binary"}));
    search_cmd->add_option("--model", sa.model, "Ranking model JSON (ltr)");
    search_cmd->add_option("--scorer", sa.scorer, "tfidf|bm25|centroid|sem|ltr")
        ->check(CLI::IsMember({"tfidf", "bm25", "centroid", "sem", "ltr"}));
    search_cmd->add_option("--field", sa.field, "title|abstract|both")->check(CLI::IsMember({"title", "abstract", "both"}));
    search_cmd->add_option("--top-k", sa.top_k, "Results per query (0 = all)");
    search_cmd->add_option("--candidates", sa.candidates,
                           "BM25 candidate depth for centroid/sem/ltr; 0 = every document (default: 500 for ltr, 0 otherwise)");
    search_cmd->add_option("--k", sa.k, "BM25 k")->check(CLI::PositiveNumber);
    search_cmd->add_option("--b", sa.b, "BM25 b")->check(CLI::Range(0.0, 1.0));
    search_cmd->add_flag("--clamp-idf", sa.clamp_idf, "Floor negative idf at 0 in BM25");
    search_cmd->add_option("--threads", sa.threads, "Worker threads")->check(CLI::PositiveNumber);
    search_cmd->add_option("--query", sa.query, "Query text");
    search_cmd->add_option("--qid", sa.qid, "Query id used with --query");
    search_cmd->add_option("--queries", sa.queries, "File of qid<TAB>query lines");
    search_cmd->add_option("--out", sa.out, "Run file (default: stdout)");
    search_cmd->add_option("--tag", sa.tag, "Run tag (default: scorer name)");
    search_cmd->add_option("--explain", sa.explain, "Write semantic matches as JSON lines");

    FeaturesArgs fa;
    auto* features_cmd = app.add_subcommand("features", "Write LETOR feature vectors for judged queries");
    features_cmd->add_option("--index", fa.index, "Index file")->required();
    features_cmd->add_option("--embeddings", fa.embeddings, "word2vec-format file")->required();
    features_cmd->add_option("--format", fa.format, "Embedding format")->check(CLI::IsMember({"text", "binary"}));
    features_cmd->add_option("--queries", fa.queries, "qid<TAB>query file")->required();
    features_cmd->add_option("--qrels", fa.qrels, "Qrels with grades")->required();
    features_cmd->add_option("--schema", fa.schema, "Comma-separated features: bm25, sem_title, sem_abstract, sem_both");
    features_cmd->add_option("--candidates", fa.candidates, "BM25 candidate depth per query (0 = all matching)");
    features_cmd->add_flag("--no-judged", fa.no_judged, "Do not add judged documents missing from the candidates");
    features_cmd->add_option("--k", fa.k, "BM25 k")->check(CLI::PositiveNumber);
    features_cmd->add_option("--b", fa.b, "BM25 b")->check(CLI::Range(0.0, 1.0));
    features_cmd->add_option("--threads", fa.threads, "Worker threads")->check(CLI::PositiveNumber);
    features_cmd->add_option("--out", fa.out, "LETOR output")->required();

    LabelArgs la;
    auto* label_cmd = app.add_subcommand("label", "Turn a click log into graded relevance judgments");
    label_cmd->add_option("--clicks", la.clicks, "Click log TSV")->required();
    label_cmd->add_option("--mu", la.mu, "Abstract vs full-text click trade-off")->check(CLI::Range(0.0, 1.0));
    label_cmd->add_option("--lambda", la.lambda, "Boost divisor for documents without full text")
        ->check(CLI::PositiveNumber);
    label_cmd->add_option("--min-occurrences", la.min_occurrences, "Drop queries seen fewer times");
    label_cmd->add_option("--min-results", la.min_results, "Drop queries returning fewer documents");
    label_cmd->add_flag("--no-query-filter", la.no_query_filter, "Keep author/journal-name queries");
    label_cmd->add_option("--qrels", la.qrels, "Qrels output")->required();
    label_cmd->add_option("--queries", la.queries, "qid<TAB>query output");

    TrainArgs ta;
    auto* train_cmd = app.add_subcommand("train", "Train a LambdaMART model from a LETOR file");
    train_cmd->add_option("--features", ta.features, "LETOR training file")->required();
    train_cmd->add_option("--schema", ta.schema, "Comma-separated feature names, in file order");
    train_cmd->add_option("--trees", ta.hp.num_trees, "Boosting rounds");
    train_cmd->add_option("--leaves", ta.hp.num_leaves, "Leaves per tree")->check(CLI::PositiveNumber);
    train_cmd->add_option("--learning-rate", ta.hp.learning_rate, "Shrinkage")->check(CLI::PositiveNumber);
    train_cmd->add_option("--min-leaf", ta.hp.min_instances_per_leaf, "Minimum instances per leaf")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--ndcg-k", ta.hp.ndcg_truncation, "NDCG truncation for lambdas")->check(CLI::PositiveNumber);
    train_cmd->add_option("--seed", ta.hp.rng_seed, "Seed for the query split (recorded in the model)");
    train_cmd->add_option("--train-fraction", ta.train_fraction, "Fraction of queries used for training")
        ->check(CLI::Range(0.0, 1.0));
    train_cmd->add_option("--test-out", ta.test_out, "Write held-out queries here when --train-fraction < 1");
    train_cmd->add_option("--model", ta.model, "Model JSON output")->required();

    EvalArgs va;
    auto* eval_cmd = app.add_subcommand("eval", "Score a TREC run against qrels");
    eval_cmd->add_option("--run", va.run, "TREC run file")->required();
    eval_cmd->add_option("--qrels", va.qrels, "Qrels file")->required();
    eval_cmd->add_option("--metric", va.metrics, "map or ndcg@<k>; repeat or comma-separate (default: map)");
    eval_cmd->add_flag("--judged-only", va.judged_only, "Drop unjudged documents before scoring");
    eval_cmd->add_option("--out", va.out, "Report output (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*index_cmd) return run_index(ia, out);
        if (*embed_cmd) return run_embed_check(ea, out, err);
        if (*search_cmd) return run_search(sa, out, err);
        if (*features_cmd) return run_features(fa, out, err);
        if (*label_cmd) return run_label(la, out);
        if (*train_cmd) return run_train(ta, out);
        if (*eval_cmd) return run_eval(va, out, err);
    } catch (const CLI::ValidationError& e) {
        err << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("semrank");
    for (const auto& a : args) argv.push_back(a.c_str());
    return dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace semrank
