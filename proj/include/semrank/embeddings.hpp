#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "semrank/error.hpp"

namespace semrank {

enum class EmbeddingFormat { text, binary };

EmbeddingFormat parse_embedding_format(std::string_view name);

/// Word -> unit vector table. Rows are normalized once at load, so the
/// cosine between two words is a plain dot product.
class EmbeddingTable {
  public:
    using Row = std::uint32_t;

    EmbeddingTable() = default;
    explicit EmbeddingTable(std::size_t dim);

    /// Normalizes and appends. Returns false (and stores nothing) for a
    /// zero-norm vector. Throws on a dimension mismatch or repeated word.
    bool add(std::string word, std::span<const double> vector);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return words_.size(); }
    /// Zero-norm vectors skipped while loading.
    std::size_t dropped() const { return dropped_; }

    std::optional<Row> row(std::string_view word) const;
    bool contains(std::string_view word) const { return row(word).has_value(); }
    const std::string& word(Row r) const { return words_[r]; }
    std::span<const float> vector(Row r) const {
        return {data_.data() + static_cast<std::size_t>(r) * dim_, dim_};
    }

    /// Dot product of two stored rows, accumulated in double.
    double dot(Row a, Row b) const { return dot(vector(a), vector(b)); }
    static double dot(std::span<const float> a, std::span<const float> b);

    void write(std::ostream& out, EmbeddingFormat format) const;

  private:
    friend EmbeddingTable load_embeddings(std::istream& in, EmbeddingFormat format);

    std::size_t dim_ = 0;
    std::size_t dropped_ = 0;
    std::vector<std::string> words_;
    std::vector<float> data_;
    std::unordered_map<std::string, Row> lookup_;
};

/// word2vec text or binary layout. Errors carry the byte offset.
EmbeddingTable load_embeddings(std::istream& in, EmbeddingFormat format);

/// Cosine of two words; nullopt when either word is out of vocabulary.
std::optional<double> cosine(const EmbeddingTable& table, std::string_view a, std::string_view b);

/// Mean of the unit vectors of the in-vocabulary tokens. Repeated tokens are
/// counted with multiplicity unless `unique_tokens` is set. Not re-normalized.
std::vector<double> centroid(const EmbeddingTable& table, std::span<const std::string> tokens,
                             bool unique_tokens = false);

double cosine(std::span<const double> a, std::span<const double> b);

}  // namespace semrank
