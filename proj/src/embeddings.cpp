#include "semrank/embeddings.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <iterator>
#include <set>
#include <sstream>

namespace semrank {

EmbeddingFormat parse_embedding_format(std::string_view name) {
    if (name == "text") return EmbeddingFormat::text;
    if (name == "binary") return EmbeddingFormat::binary;
    throw Error("unknown embedding format: " + std::string(name));
}

EmbeddingTable::EmbeddingTable(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw Error("embedding dimension must be positive");
}

bool EmbeddingTable::add(std::string word, std::span<const double> vector) {
    if (vector.size() != dim_) throw Error("vector for '" + word + "' has wrong dimension");
    if (lookup_.contains(word)) throw Error("duplicate embedding for '" + word + "'");
    double norm = 0.0;
    for (double v : vector) norm += v * v;
    norm = std::sqrt(norm);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        ++dropped_;
        return false;
    }
    for (double v : vector) data_.push_back(static_cast<float>(v / norm));
    lookup_.emplace(word, static_cast<Row>(words_.size()));
    words_.push_back(std::move(word));
    return true;
}

std::optional<EmbeddingTable::Row> EmbeddingTable::row(std::string_view word) const {
    auto it = lookup_.find(std::string(word));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
}

double EmbeddingTable::dot(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += static_cast<double>(a[k]) * b[k];
    return s;
}

void EmbeddingTable::write(std::ostream& out, EmbeddingFormat format) const {
    out << words_.size() << ' ' << dim_ << '\n';
    for (Row r = 0; r < words_.size(); ++r) {
        auto v = vector(r);
        if (format == EmbeddingFormat::text) {
            out << words_[r];
            for (float x : v) out << ' ' << std::setprecision(9) << x;
            out << '\n';
        } else {
            out << words_[r] << ' ';
            for (float x : v) {
                std::uint32_t bits;
                std::memcpy(&bits, &x, sizeof(bits));
                char buf[4];
                for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
                out.write(buf, 4);
            }
            out << '\n';
        }
    }
}

namespace {

class Cursor {
  public:
    explicit Cursor(std::string data) : data_(std::move(data)) {}

    bool at_end() const { return pos_ >= data_.size(); }
    std::size_t offset() const { return pos_; }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

    std::string_view line() {
        auto end = data_.find('\n', pos_);
        if (end == std::string::npos) end = data_.size();
        std::string_view out(data_.data() + pos_, end - pos_);
        pos_ = end < data_.size() ? end + 1 : end;
        return out;
    }

    void skip_whitespace() {
        while (pos_ < data_.size() && (data_[pos_] == '\n' || data_[pos_] == ' ' || data_[pos_] == '\r' ||
                                       data_[pos_] == '\t')) {
            ++pos_;
        }
    }

    std::string word_until_space() {
        auto end = data_.find(' ', pos_);
        if (end == std::string::npos) fail("truncated stream: word without vector");
        std::string w = data_.substr(pos_, end - pos_);
        pos_ = end + 1;
        return w;
    }

    float little_endian_float() {
        if (data_.size() - pos_ < 4) fail("truncated stream: incomplete vector");
        std::uint32_t bits = 0;
        for (int i = 0; i < 4; ++i) {
            bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        }
        pos_ += 4;
        float f;
        std::memcpy(&f, &bits, sizeof(f));
        return f;
    }

  private:
    std::string data_;
    std::size_t pos_ = 0;
};

std::vector<std::string_view> split_spaces(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
        std::size_t start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

EmbeddingTable load_embeddings(std::istream& in, EmbeddingFormat format) {
    Cursor cur(std::string(std::istreambuf_iterator<char>(in), {}));
    if (cur.at_end()) cur.fail("malformed header: empty stream");

    auto header = split_spaces(cur.line());
    std::size_t vocab = 0, dim = 0;
    if (header.size() != 2 || !parse_number(header[0], vocab) || !parse_number(header[1], dim) || dim == 0) {
        throw ParseError("malformed header: expected '<vocab_size> <dim>'", 0);
    }

    EmbeddingTable table(dim);
    std::vector<double> values(dim);
    for (std::size_t n = 0; n < vocab; ++n) {
        if (format == EmbeddingFormat::text) {
            std::size_t start = cur.offset();
            std::vector<std::string_view> parts;
            while (parts.empty() && !cur.at_end()) {
                start = cur.offset();
                parts = split_spaces(cur.line());
            }
            if (parts.empty()) {
                cur.fail("truncated stream: expected " + std::to_string(vocab) + " rows, got " +
                         std::to_string(n));
            }
            if (parts.size() != dim + 1) {
                throw ParseError("dimension mismatch for '" + std::string(parts[0]) + "': expected " +
                                     std::to_string(dim) + " values, got " + std::to_string(parts.size() - 1),
                                 start);
            }
            for (std::size_t k = 0; k < dim; ++k) {
                if (!parse_number(parts[k + 1], values[k]) || !std::isfinite(values[k])) {
                    throw ParseError("bad number '" + std::string(parts[k + 1]) + "'", start);
                }
            }
            std::string word(parts[0]);
            if (table.contains(word)) throw ParseError("duplicate word '" + word + "'", start);
            table.add(std::move(word), values);
        } else {
            cur.skip_whitespace();
            if (cur.at_end()) {
                cur.fail("truncated stream: expected " + std::to_string(vocab) + " rows, got " +
                         std::to_string(n));
            }
            auto start = cur.offset();
            std::string word = cur.word_until_space();
            if (word.empty()) throw ParseError("empty word", start);
            for (std::size_t k = 0; k < dim; ++k) {
                float f = cur.little_endian_float();
                if (!std::isfinite(f)) throw ParseError("non-finite value for '" + word + "'", start);
                values[k] = f;
            }
            if (table.contains(word)) throw ParseError("duplicate word '" + word + "'", start);
            table.add(std::move(word), values);
        }
    }
    return table;
}

std::optional<double> cosine(const EmbeddingTable& table, std::string_view a, std::string_view b) {
    auto ra = table.row(a);
    auto rb = table.row(b);
    if (!ra || !rb) return std::nullopt;
    return table.dot(*ra, *rb);
}

std::vector<double> centroid(const EmbeddingTable& table, std::span<const std::string> tokens,
                             bool unique_tokens) {
    std::vector<double> sum(table.dim(), 0.0);
    std::size_t count = 0;
    std::set<std::string_view> seen;
    for (const auto& t : tokens) {
        if (unique_tokens && !seen.insert(t).second) continue;
        auto r = table.row(t);
        if (!r) continue;
        auto v = table.vector(*r);
        for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += v[k];
        ++count;
    }
    if (count == 0) throw Error("no embeddable tokens");
    for (auto& x : sum) x /= static_cast<double>(count);
    return sum;
}

double cosine(std::span<const double> a, std::span<const double> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        dot += a[k] * b[k];
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace semrank
