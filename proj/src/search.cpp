#include "semrank/search.hpp"

#include <algorithm>

#include "semrank/parallel.hpp"

namespace semrank {

ScorerKind parse_scorer(std::string_view name) {
    if (name == "tfidf") return ScorerKind::tfidf;
    if (name == "bm25") return ScorerKind::bm25;
    if (name == "centroid") return ScorerKind::centroid;
    if (name == "sem") return ScorerKind::sem;
    if (name == "ltr") return ScorerKind::ltr;
    throw Error("unknown scorer: " + std::string(name));
}

std::string_view to_string(ScorerKind kind) {
    switch (kind) {
    case ScorerKind::tfidf: return "tfidf";
    case ScorerKind::bm25: return "bm25";
    case ScorerKind::centroid: return "centroid";
    case ScorerKind::sem: return "sem";
    default: return "ltr";
    }
}

void sort_and_truncate(std::vector<ScoredDoc>& docs, std::size_t k) {
    auto better = [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    };
    if (k > 0 && k < docs.size()) {
        std::partial_sort(docs.begin(), docs.begin() + static_cast<std::ptrdiff_t>(k), docs.end(), better);
        docs.resize(k);
    } else {
        std::sort(docs.begin(), docs.end(), better);
    }
}

Searcher::Searcher(const CorpusIndex& index, const EmbeddingTable* table, const RankingModel* model)
    : index_(index), table_(table), model_(model) {
    if (table_) sem_.emplace(index_, *table_);
}

std::vector<ScoredDoc> Searcher::search(std::string_view query_text, const SearchConfig& cfg) const {
    const auto tokens = tokenize(query_text, index_.token_config());
    return search_tokens(tokens, cfg);
}

namespace {

std::vector<DocOrdinal> matching_docs(const CorpusIndex& index, std::span<const std::string> tokens, Field field) {
    std::vector<DocOrdinal> docs;
    for (const auto& t : tokens) {
        auto id = index.term_id(t);
        if (!id) continue;
        for (const auto& p : index.postings(*id)) {
            if (p.tf(field) > 0) docs.push_back(p.doc);
        }
    }
    std::sort(docs.begin(), docs.end());
    docs.erase(std::unique(docs.begin(), docs.end()), docs.end());
    return docs;
}

}  // namespace

std::vector<ScoredDoc> Searcher::bm25_ranking(std::span<const std::string> tokens, const Bm25Params& params,
                                              Field field, std::size_t limit, std::size_t threads) const {
    const auto docs = matching_docs(index_, tokens, field);
    std::vector<ScoredDoc> out(docs.size());
    parallel_for(docs.size(), threads, [&](std::size_t i) {
        out[i] = {index_.doc(docs[i]).id, score_bm25(tokens, index_, docs[i], params, field), std::nullopt};
    });
    sort_and_truncate(out, limit);
    return out;
}

std::vector<DocOrdinal> Searcher::candidate_set(std::span<const std::string> tokens, const SearchConfig& cfg) const {
    std::vector<DocOrdinal> out;
    if (cfg.candidates == 0) {
        out.resize(index_.size());
        for (DocOrdinal d = 0; d < index_.size(); ++d) out[d] = d;
        return out;
    }
    for (const auto& sd : bm25_ranking(tokens, cfg.bm25, Field::both, cfg.candidates, cfg.threads)) {
        out.push_back(*index_.ordinal(sd.doc_id));
    }
    return out;
}

std::vector<ScoredDoc> Searcher::search_tokens(std::span<const std::string> tokens, const SearchConfig& cfg) const {
    if (tokens.empty()) throw Error("empty query after preprocessing");
    if ((cfg.scorer == ScorerKind::sem || cfg.scorer == ScorerKind::centroid || cfg.scorer == ScorerKind::ltr) &&
        !table_) {
        throw Error(std::string(to_string(cfg.scorer)) + " scorer needs embeddings");
    }

    std::vector<ScoredDoc> out;
    switch (cfg.scorer) {
    case ScorerKind::bm25:
        return bm25_ranking(tokens, cfg.bm25, cfg.field, cfg.top_k, cfg.threads);

    case ScorerKind::tfidf: {
        const auto docs = matching_docs(index_, tokens, cfg.field);
        out.resize(docs.size());
        parallel_for(docs.size(), cfg.threads, [&](std::size_t i) {
            out[i] = {index_.doc(docs[i]).id, score_tfidf(tokens, index_, docs[i], cfg.field), std::nullopt};
        });
        break;
    }

    case ScorerKind::centroid: {
        bool any = std::any_of(tokens.begin(), tokens.end(), [&](const std::string& t) { return table_->contains(t); });
        if (!any) return {};
        const auto docs = candidate_set(tokens, cfg);
        std::vector<std::optional<double>> scores(docs.size());
        parallel_for(docs.size(), cfg.threads, [&](std::size_t i) {
            try {
                scores[i] = score_centroid(tokens, index_, docs[i], *table_, cfg.field);
            } catch (const Error&) {
                // field has no embeddable token; the document is not ranked
            }
        });
        for (std::size_t i = 0; i < docs.size(); ++i) {
            if (scores[i]) out.push_back({index_.doc(docs[i]).id, *scores[i], std::nullopt});
        }
        break;
    }

    case ScorerKind::sem: {
        const auto docs = candidate_set(tokens, cfg);
        const auto query = sem_->prepare(tokens);
        out.resize(docs.size());
        parallel_for(docs.size(), cfg.threads, [&](std::size_t i) {
            auto r = sem_->score(query, docs[i], cfg.field);
            out[i] = {index_.doc(docs[i]).id, r.score, std::move(r.matches)};
        });
        break;
    }

    case ScorerKind::ltr: {
        if (!model_) throw Error("ltr scorer needs a model");
        const auto docs = candidate_set(tokens, cfg);
        FeatureExtractor extractor(index_, *table_, {model_->schema, cfg.bm25});
        extractor.set_query(tokens);
        out.resize(docs.size());
        parallel_for(docs.size(), cfg.threads, [&](std::size_t i) {
            out[i] = {index_.doc(docs[i]).id, model_->predict(extractor.extract(docs[i])), std::nullopt};
        });
        break;
    }
    }
    sort_and_truncate(out, cfg.top_k);
    return out;
}

}  // namespace semrank
