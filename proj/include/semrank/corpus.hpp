#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "semrank/error.hpp"

namespace semrank {

/// A retrievable unit. Only the two text fields the ranker looks at are kept.
struct Document {
    std::string id;
    std::string title;
    std::string abstract;
};

enum class Field : std::uint8_t { title = 0, abstract = 1, both = 2 };

std::string_view to_string(Field f);
Field parse_field(std::string_view name);

struct TokenConfig {
    bool lowercase = true;
    std::set<std::string> stopwords;
    std::size_t min_token_length = 1;
};

/// Bundled English stopword list.
const std::set<std::string>& default_stopwords();

/// Reads one stopword per line; blank lines and surrounding whitespace ignored.
std::set<std::string> read_stopwords(std::istream& in);

/// Lowercases (per config), splits on non-alphanumeric bytes, drops stopwords
/// and short tokens. Bytes >= 0x80 count as alphanumeric so UTF-8 words stay
/// intact.
std::vector<std::string> tokenize(std::string_view text, const TokenConfig& cfg);

using TermId = std::uint32_t;
using DocOrdinal = std::uint32_t;

/// Sparse bag of words for one field of one document, sorted by term id.
struct FieldTerms {
    std::vector<TermId> terms;
    std::vector<std::uint32_t> tfs;
    std::uint32_t length = 0;

    std::uint32_t tf(TermId t) const;
};

struct Posting {
    DocOrdinal doc;
    std::uint32_t tf_title;
    std::uint32_t tf_abstract;

    std::uint32_t tf(Field f) const {
        switch (f) {
        case Field::title: return tf_title;
        case Field::abstract: return tf_abstract;
        default: return tf_title + tf_abstract;
        }
    }
};

struct IndexedDoc {
    std::string id;
    FieldTerms title;
    FieldTerms abstract;
    FieldTerms combined;

    const FieldTerms& field(Field f) const {
        switch (f) {
        case Field::title: return title;
        case Field::abstract: return abstract;
        default: return combined;
        }
    }
};

/// Immutable collection statistics. Term ids are assigned in lexicographic
/// order of the term strings, so comparing ids compares terms.
class CorpusIndex {
  public:
    CorpusIndex() = default;

    std::size_t size() const { return docs_.size(); }
    std::size_t vocabulary_size() const { return terms_.size(); }
    const TokenConfig& token_config() const { return config_; }

    std::optional<TermId> term_id(std::string_view term) const;
    const std::string& term(TermId id) const { return terms_[id]; }

    /// Number of documents containing the term in the given field (both = any field).
    std::uint32_t df(std::string_view term, Field f = Field::both) const;
    std::uint32_t df(TermId id, Field f = Field::both) const {
        return df_[static_cast<int>(f)][id];
    }

    const std::vector<Posting>& postings(TermId id) const { return postings_[id]; }

    const IndexedDoc& doc(DocOrdinal d) const { return docs_[d]; }
    std::optional<DocOrdinal> ordinal(std::string_view doc_id) const;

    double avg_field_length(Field f) const { return avg_length_[static_cast<int>(f)]; }

    void save(std::ostream& out) const;
    static CorpusIndex load(std::istream& in);

    friend CorpusIndex build_index(std::span<const Document> docs, const TokenConfig& cfg);

  private:
    void finalize();

    TokenConfig config_;
    std::vector<std::string> terms_;
    std::vector<IndexedDoc> docs_;

    // derived on build and on load
    std::unordered_map<std::string, TermId> term_lookup_;
    std::unordered_map<std::string, DocOrdinal> doc_lookup_;
    std::vector<std::uint32_t> df_[3];
    std::vector<std::vector<Posting>> postings_;
    double avg_length_[3] = {0.0, 0.0, 0.0};
};

/// Throws DuplicateDocumentError naming the repeated id.
CorpusIndex build_index(std::span<const Document> docs, const TokenConfig& cfg);

/// One JSON object per line with string fields "id", "title", "abstract".
std::vector<Document> read_corpus_jsonl(std::istream& in);

/// ln((K - k + 0.5) / (k + 0.5)), k taken from the chosen field's document
/// frequency. Unknown terms have k = 0. Throws if the index is empty.
double idf(const CorpusIndex& index, std::string_view term, Field df_field = Field::both);
double idf_from_counts(std::size_t collection_size, std::size_t doc_freq);

enum class WeightScheme { uniform, idf };

struct TermWeight {
    std::string term;
    double weight;
};

struct TermWeights {
    WeightScheme scheme = WeightScheme::uniform;
    /// Sorted by term.
    std::vector<TermWeight> entries;

    double sum() const;
    std::optional<double> weight(std::string_view term) const;
};

/// Normalized bag of words; the idf scheme multiplies each share by the
/// collection idf. Throws on an empty token list.
TermWeights term_weights(std::span<const std::string> tokens, const CorpusIndex& index,
                         WeightScheme scheme, Field df_field = Field::both);

}  // namespace semrank
