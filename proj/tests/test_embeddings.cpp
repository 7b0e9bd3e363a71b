#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <sstream>

#include "semrank/embeddings.hpp"
#include "support/synthetic.hpp"

using namespace semrank;

namespace {

EmbeddingTable load_text(const std::string& s) {
    std::istringstream in(s);
    return load_embeddings(in, EmbeddingFormat::text);
}

EmbeddingTable load_binary(const std::string& s) {
    std::istringstream in(s);
    return load_embeddings(in, EmbeddingFormat::binary);
}

std::string le_floats(std::initializer_list<float> xs) {
    std::string out;
    for (float x : xs) {
        std::uint32_t bits;
        std::memcpy(&bits, &x, 4);
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
    }
    return out;
}

std::size_t parse_offset(const std::string& text, EmbeddingFormat f) {
    std::istringstream in(text);
    try {
        load_embeddings(in, f);
    } catch (const ParseError& e) {
        return e.offset();
    }
    FAIL("expected a parse error");
    return 0;
}

}  // namespace

TEST_CASE("text loader normalizes rows") {
    const auto t = load_text("2 3\napple 1 0 0\nbanana 0 2 0\n");
    CHECK(t.dim() == 3);
    CHECK(t.size() == 2);
    const auto b = t.vector(*t.row("banana"));
    CHECK(b[0] == 0.0f);
    CHECK(b[1] == 1.0f);
    CHECK(*cosine(t, "apple", "banana") == 0.0);
    CHECK(*cosine(t, "apple", "apple") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(cosine(t, "apple", "cherry"));
}

TEST_CASE("binary loader reads little-endian floats") {
    const std::string data = "1 2\nw " + le_floats({3.0f, 4.0f});
    const auto t = load_binary(data);
    const auto v = t.vector(*t.row("w"));
    CHECK(v[0] == doctest::Approx(0.6).epsilon(1e-7));
    CHECK(v[1] == doctest::Approx(0.8).epsilon(1e-7));
    // newline or space between records
    const auto two = load_binary("2 2\na " + le_floats({1, 0}) + "\nb " + le_floats({0, 1}) + " ");
    CHECK(two.size() == 2);
    CHECK(*cosine(two, "a", "b") == 0.0);
}

TEST_CASE("zero vectors are dropped") {
    const auto t = load_text("2 2\nz 0 0\na 1 1\n");
    CHECK(t.size() == 1);
    CHECK(t.dropped() == 1);
    CHECK_FALSE(t.contains("z"));
}

TEST_CASE("malformed inputs raise parse errors with offsets") {
    CHECK_THROWS_AS(load_text("1 3\napple 1 0\n"), ParseError);
    CHECK(parse_offset("1 3\napple 1 0\n", EmbeddingFormat::text) == 4);
    CHECK(parse_offset("", EmbeddingFormat::text) == 0);
    CHECK(parse_offset("three 2\n", EmbeddingFormat::text) == 0);
    CHECK(parse_offset("2 2\na 1 0\n", EmbeddingFormat::text) == 10);
    CHECK(parse_offset("1 2\na 1 x\n", EmbeddingFormat::text) == 4);
    CHECK(parse_offset("2 2\na 1 0\na 0 1\n", EmbeddingFormat::text) == 10);
    // four bytes of the second float missing
    const std::string cut = "1 2\nw " + le_floats({3.0f});
    CHECK(parse_offset(cut, EmbeddingFormat::binary) == 10);
    CHECK(parse_offset("1 2\nw", EmbeddingFormat::binary) == 4);
    try {
        load_text("1 3\napple 1 0\n");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("byte offset 4") != std::string::npos);
    }
}

TEST_CASE("cosine examples") {
    EmbeddingTable t(3);
    t.add("u", std::vector<double>{0.6, 0.8, 0.0});
    t.add("v", std::vector<double>{1.0, 0.0, 0.0});
    CHECK(*cosine(t, "u", "v") == doctest::Approx(0.6).epsilon(1e-7));
    CHECK(*cosine(t, "u", "v") == *cosine(t, "v", "u"));
    CHECK_THROWS_AS(t.add("u", std::vector<double>{1, 0, 0}), Error);
    CHECK_THROWS_AS(t.add("w", std::vector<double>{1, 0}), Error);
}

TEST_CASE("centroid") {
    const auto t = load_text("2 3\napple 1 0 0\nbanana 0 2 0\n");
    const std::vector<std::string> one = {"apple"};
    CHECK(centroid(t, one) == std::vector<double>{1, 0, 0});
    const std::vector<std::string> two = {"apple", "banana"};
    CHECK(centroid(t, two) == std::vector<double>{0.5, 0.5, 0});
    const std::vector<std::string> oov = {"apple", "OOVWORD"};
    CHECK(centroid(t, oov) == std::vector<double>{1, 0, 0});
    const std::vector<std::string> none = {"OOVWORD"};
    CHECK_THROWS_WITH_AS(centroid(t, none), "no embeddable tokens", Error);
    const std::vector<std::string> rep = {"apple", "apple", "banana"};
    const auto c = centroid(t, rep);
    CHECK(c[0] == doctest::Approx(2.0 / 3.0));
    const auto u = centroid(t, rep, true);
    CHECK(u[0] == doctest::Approx(0.5));
}

TEST_CASE("random tables: unit rows, symmetric cosine, format agreement") {
    std::vector<std::string> words;
    for (int i = 0; i < 200; ++i) words.push_back("w" + std::to_string(i));
    const auto t = testing::random_table(words, 17, 3);
    for (EmbeddingTable::Row r = 0; r < t.size(); ++r) {
        CHECK(std::abs(std::sqrt(EmbeddingTable::dot(t.vector(r), t.vector(r))) - 1.0) < 1e-6);
    }
    CHECK(t.dot(3, 9) == t.dot(9, 3));

    // k copies of the same token
    const std::vector<std::string> copies(5, "w7");
    const auto c = centroid(t, copies);
    const auto v = t.vector(*t.row("w7"));
    for (std::size_t k = 0; k < c.size(); ++k) CHECK(c[k] == doctest::Approx(v[k]).epsilon(1e-12));

    std::stringstream text, bin;
    t.write(text, EmbeddingFormat::text);
    t.write(bin, EmbeddingFormat::binary);
    const auto a = load_embeddings(text, EmbeddingFormat::text);
    const auto b = load_embeddings(bin, EmbeddingFormat::binary);
    REQUIRE(a.size() == t.size());
    REQUIRE(b.size() == t.size());
    for (int i = 0; i < 200; i += 7) {
        for (int j = 0; j < 200; j += 11) {
            const auto wi = "w" + std::to_string(i), wj = "w" + std::to_string(j);
            CHECK(std::abs(*cosine(a, wi, wj) - *cosine(b, wi, wj)) < 1e-5);
            CHECK(std::abs(*cosine(t, wi, wj) - *cosine(b, wi, wj)) < 1e-6);
        }
    }
}

TEST_CASE("format names") {
    CHECK(parse_embedding_format("text") == EmbeddingFormat::text);
    CHECK(parse_embedding_format("binary") == EmbeddingFormat::binary);
    CHECK_THROWS_AS(parse_embedding_format("glove"), Error);
}
