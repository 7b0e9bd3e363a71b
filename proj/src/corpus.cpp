#include "semrank/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstring>
#include <numeric>

#include <json.hpp>

namespace semrank {

std::string_view to_string(Field f) {
    switch (f) {
    case Field::title: return "title";
    case Field::abstract: return "abstract";
    default: return "both";
    }
}

Field parse_field(std::string_view name) {
    if (name == "title") return Field::title;
    if (name == "abstract") return Field::abstract;
    if (name == "both") return Field::both;
    throw Error("unknown field: " + std::string(name));
}

std::set<std::string> read_stopwords(std::istream& in) {
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        auto first = line.find_first_not_of(" \t\r\n");
        if (first == std::string::npos) continue;
        auto last = line.find_last_not_of(" \t\r\n");
        words.insert(line.substr(first, last - first + 1));
    }
    return words;
}

namespace {

bool is_word_byte(unsigned char c) { return c >= 0x80 || std::isalnum(c) != 0; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text, const TokenConfig& cfg) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
        if (start == i) break;
        std::string token(text.substr(start, i - start));
        if (cfg.lowercase) {
            for (auto& c : token) {
                c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            }
        }
        if (token.size() < cfg.min_token_length) continue;
        if (cfg.stopwords.contains(token)) continue;
        tokens.push_back(std::move(token));
    }
    return tokens;
}

std::uint32_t FieldTerms::tf(TermId t) const {
    auto it = std::lower_bound(terms.begin(), terms.end(), t);
    if (it == terms.end() || *it != t) return 0;
    return tfs[static_cast<std::size_t>(it - terms.begin())];
}

namespace {

FieldTerms bag_of_terms(std::vector<TermId> ids) {
    FieldTerms out;
    out.length = static_cast<std::uint32_t>(ids.size());
    std::sort(ids.begin(), ids.end());
    for (std::size_t i = 0; i < ids.size();) {
        std::size_t j = i;
        while (j < ids.size() && ids[j] == ids[i]) ++j;
        out.terms.push_back(ids[i]);
        out.tfs.push_back(static_cast<std::uint32_t>(j - i));
        i = j;
    }
    return out;
}

FieldTerms merge_fields(const FieldTerms& a, const FieldTerms& b) {
    FieldTerms out;
    out.length = a.length + b.length;
    std::size_t i = 0, j = 0;
    while (i < a.terms.size() || j < b.terms.size()) {
        if (j == b.terms.size() || (i < a.terms.size() && a.terms[i] < b.terms[j])) {
            out.terms.push_back(a.terms[i]);
            out.tfs.push_back(a.tfs[i++]);
        } else if (i == a.terms.size() || b.terms[j] < a.terms[i]) {
            out.terms.push_back(b.terms[j]);
            out.tfs.push_back(b.tfs[j++]);
        } else {
            out.terms.push_back(a.terms[i]);
            out.tfs.push_back(a.tfs[i++] + b.tfs[j++]);
        }
    }
    return out;
}

}  // namespace

std::optional<TermId> CorpusIndex::term_id(std::string_view term) const {
    auto it = term_lookup_.find(std::string(term));
    if (it == term_lookup_.end()) return std::nullopt;
    return it->second;
}

std::uint32_t CorpusIndex::df(std::string_view term, Field f) const {
    auto id = term_id(term);
    return id ? df(*id, f) : 0;
}

std::optional<DocOrdinal> CorpusIndex::ordinal(std::string_view doc_id) const {
    auto it = doc_lookup_.find(std::string(doc_id));
    if (it == doc_lookup_.end()) return std::nullopt;
    return it->second;
}

void CorpusIndex::finalize() {
    term_lookup_.clear();
    term_lookup_.reserve(terms_.size());
    for (TermId t = 0; t < terms_.size(); ++t) term_lookup_.emplace(terms_[t], t);

    doc_lookup_.clear();
    doc_lookup_.reserve(docs_.size());
    for (auto& f : df_) f.assign(terms_.size(), 0);
    postings_.assign(terms_.size(), {});
    std::array<double, 3> total_length{0.0, 0.0, 0.0};

    for (DocOrdinal d = 0; d < docs_.size(); ++d) {
        auto& doc = docs_[d];
        doc_lookup_.emplace(doc.id, d);
        doc.combined = merge_fields(doc.title, doc.abstract);
        for (std::size_t k = 0; k < doc.combined.terms.size(); ++k) {
            TermId t = doc.combined.terms[k];
            std::uint32_t tf_title = doc.title.tf(t);
            std::uint32_t tf_abstract = doc.combined.tfs[k] - tf_title;
            if (tf_title > 0) ++df_[0][t];
            if (tf_abstract > 0) ++df_[1][t];
            ++df_[2][t];
            postings_[t].push_back({d, tf_title, tf_abstract});
        }
        total_length[0] += doc.title.length;
        total_length[1] += doc.abstract.length;
        total_length[2] += doc.combined.length;
    }
    for (int f = 0; f < 3; ++f) {
        avg_length_[f] = docs_.empty() ? 0.0 : total_length[f] / static_cast<double>(docs_.size());
    }
}

CorpusIndex build_index(std::span<const Document> docs, const TokenConfig& cfg) {
    CorpusIndex index;
    index.config_ = cfg;

    std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> tokenized;
    tokenized.reserve(docs.size());
    std::set<std::string_view> seen_ids;
    std::vector<std::string> vocabulary;
    for (const auto& doc : docs) {
        if (doc.id.empty()) throw Error("document with empty id");
        if (!seen_ids.insert(doc.id).second) throw DuplicateDocumentError(doc.id);
        if (doc.title.empty() && doc.abstract.empty()) {
            throw Error("document " + doc.id + " has neither title nor abstract");
        }
        auto title = tokenize(doc.title, cfg);
        auto abstract = tokenize(doc.abstract, cfg);
        vocabulary.insert(vocabulary.end(), title.begin(), title.end());
        vocabulary.insert(vocabulary.end(), abstract.begin(), abstract.end());
        tokenized.emplace_back(std::move(title), std::move(abstract));
    }
    std::sort(vocabulary.begin(), vocabulary.end());
    vocabulary.erase(std::unique(vocabulary.begin(), vocabulary.end()), vocabulary.end());
    index.terms_ = std::move(vocabulary);

    auto to_ids = [&](const std::vector<std::string>& tokens) {
        std::vector<TermId> ids;
        ids.reserve(tokens.size());
        for (const auto& t : tokens) {
            auto it = std::lower_bound(index.terms_.begin(), index.terms_.end(), t);
            ids.push_back(static_cast<TermId>(it - index.terms_.begin()));
        }
        return ids;
    };

    index.docs_.reserve(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        IndexedDoc entry;
        entry.id = docs[i].id;
        entry.title = bag_of_terms(to_ids(tokenized[i].first));
        entry.abstract = bag_of_terms(to_ids(tokenized[i].second));
        index.docs_.push_back(std::move(entry));
    }
    index.finalize();
    return index;
}

// Index file layout, all integers little-endian:
//   "SEMRKIX1"
//   u8 lowercase, u64 min_token_length, u64 n_stop, n_stop strings
//   u64 n_terms, n_terms strings (sorted)
//   u64 n_docs, per doc: string id, title bag, abstract bag
// string = u64 byte length + bytes; bag = u32 length, u64 n, n * (u32 term, u32 tf)
namespace {

constexpr char kIndexMagic[8] = {'S', 'E', 'M', 'R', 'K', 'I', 'X', '1'};

template <typename T>
void put_le(std::ostream& out, T value) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff);
    }
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

void put_string(std::ostream& out, const std::string& s) {
    put_le<std::uint64_t>(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void put_bag(std::ostream& out, const FieldTerms& bag) {
    put_le<std::uint32_t>(out, bag.length);
    put_le<std::uint64_t>(out, bag.terms.size());
    for (std::size_t i = 0; i < bag.terms.size(); ++i) {
        put_le<std::uint32_t>(out, bag.terms[i]);
        put_le<std::uint32_t>(out, bag.tfs[i]);
    }
}

class Reader {
  public:
    explicit Reader(std::istream& in) : in_(in) {}

    template <typename T>
    T get() {
        unsigned char buf[sizeof(T)];
        read(reinterpret_cast<char*>(buf), sizeof(T));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
        return static_cast<T>(v);
    }

    std::string get_string() {
        auto n = get<std::uint64_t>();
        if (n > (std::uint64_t{1} << 32)) fail("implausible string length");
        std::string s(n, '\0');
        read(s.data(), n);
        return s;
    }

    void read(char* dst, std::size_t n) {
        in_.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            offset_ += static_cast<std::size_t>(in_.gcount());
            fail("truncated index file");
        }
        offset_ += n;
    }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, offset_); }

  private:
    std::istream& in_;
    std::size_t offset_ = 0;
};

FieldTerms get_bag(Reader& r, std::size_t n_terms) {
    FieldTerms bag;
    bag.length = r.get<std::uint32_t>();
    auto n = r.get<std::uint64_t>();
    if (n > n_terms) r.fail("bag larger than vocabulary");
    std::uint64_t total = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        auto t = r.get<std::uint32_t>();
        auto tf = r.get<std::uint32_t>();
        if (t >= n_terms) r.fail("term id out of range");
        if (!bag.terms.empty() && t <= bag.terms.back()) r.fail("bag terms not strictly increasing");
        if (tf == 0) r.fail("zero term frequency");
        bag.terms.push_back(t);
        bag.tfs.push_back(tf);
        total += tf;
    }
    if (total != bag.length) r.fail("field length does not match term frequencies");
    return bag;
}

}  // namespace

void CorpusIndex::save(std::ostream& out) const {
    out.write(kIndexMagic, sizeof(kIndexMagic));
    put_le<std::uint8_t>(out, config_.lowercase ? 1 : 0);
    put_le<std::uint64_t>(out, config_.min_token_length);
    put_le<std::uint64_t>(out, config_.stopwords.size());
    for (const auto& w : config_.stopwords) put_string(out, w);
    put_le<std::uint64_t>(out, terms_.size());
    for (const auto& t : terms_) put_string(out, t);
    put_le<std::uint64_t>(out, docs_.size());
    for (const auto& d : docs_) {
        put_string(out, d.id);
        put_bag(out, d.title);
        put_bag(out, d.abstract);
    }
    if (!out) throw Error("failed to write index");
}

CorpusIndex CorpusIndex::load(std::istream& in) {
    Reader r(in);
    char magic[sizeof(kIndexMagic)];
    r.read(magic, sizeof(magic));
    if (std::memcmp(magic, kIndexMagic, sizeof(magic)) != 0) throw ParseError("not an index file", 0);

    CorpusIndex index;
    index.config_.lowercase = r.get<std::uint8_t>() != 0;
    index.config_.min_token_length = r.get<std::uint64_t>();
    auto n_stop = r.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < n_stop; ++i) index.config_.stopwords.insert(r.get_string());

    auto n_terms = r.get<std::uint64_t>();
    index.terms_.reserve(n_terms);
    for (std::uint64_t i = 0; i < n_terms; ++i) {
        auto t = r.get_string();
        if (!index.terms_.empty() && t <= index.terms_.back()) r.fail("terms not sorted");
        index.terms_.push_back(std::move(t));
    }

    auto n_docs = r.get<std::uint64_t>();
    std::set<std::string> ids;
    for (std::uint64_t i = 0; i < n_docs; ++i) {
        IndexedDoc d;
        d.id = r.get_string();
        if (d.id.empty() || !ids.insert(d.id).second) r.fail("empty or duplicate document id");
        d.title = get_bag(r, n_terms);
        d.abstract = get_bag(r, n_terms);
        index.docs_.push_back(std::move(d));
    }
    index.finalize();
    return index;
}

std::vector<Document> read_corpus_jsonl(std::istream& in) {
    std::vector<Document> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = nlohmann::json::parse(line);
            Document d;
            d.id = j.at("id").get<std::string>();
            if (j.contains("title")) d.title = j["title"].get<std::string>();
            if (j.contains("abstract")) d.abstract = j["abstract"].get<std::string>();
            docs.push_back(std::move(d));
        } catch (const nlohmann::json::exception& e) {
            throw Error("corpus line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return docs;
}

double idf_from_counts(std::size_t collection_size, std::size_t doc_freq) {
    if (collection_size == 0) throw Error("idf undefined: empty collection");
    const double K = static_cast<double>(collection_size);
    const double k = static_cast<double>(doc_freq);
    return std::log((K - k + 0.5) / (k + 0.5));
}

double idf(const CorpusIndex& index, std::string_view term, Field df_field) {
    return idf_from_counts(index.size(), index.df(term, df_field));
}

double TermWeights::sum() const {
    double s = 0.0;
    for (const auto& e : entries) s += e.weight;
    return s;
}

std::optional<double> TermWeights::weight(std::string_view term) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), term,
                               [](const TermWeight& e, std::string_view t) { return e.term < t; });
    if (it == entries.end() || it->term != term) return std::nullopt;
    return it->weight;
}

TermWeights term_weights(std::span<const std::string> tokens, const CorpusIndex& index,
                         WeightScheme scheme, Field df_field) {
    if (tokens.empty()) throw Error("empty text after preprocessing");
    std::map<std::string, std::size_t> counts;
    for (const auto& t : tokens) ++counts[t];

    TermWeights out;
    out.scheme = scheme;
    const double total = static_cast<double>(tokens.size());
    for (const auto& [term, tf] : counts) {
        double w = static_cast<double>(tf) / total;
        if (scheme == WeightScheme::idf) w *= idf(index, term, df_field);
        out.entries.push_back({term, w});
    }
    return out;
}

}  // namespace semrank
