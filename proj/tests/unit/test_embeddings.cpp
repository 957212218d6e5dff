#include "cohort/embeddings.hpp"
#include "cohort/error.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

using namespace cohort;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::Config;
}

// cos(ketoacidosis, dka) = 0.9 by construction.
EmbeddingTable fixture() {
    EmbeddingTable t(3);
    t.add("ketoacidosis", {1.0f, 0.0f, 0.0f});
    t.add("dka", {0.9f, static_cast<float>(std::sqrt(1.0 - 0.81)), 0.0f});
    t.add("renal", {0.0f, 0.0f, 1.0f});
    t.add("failure", {0.0f, 1.0f, 0.0f});
    return t;
}

}  // namespace

TEST(Embeddings, TextFormat) {
    const auto t = parse_text_embeddings("3 4\nalpha 1 0 0 0\nbeta 0 2 0 0\ngamma 0 0 0 -3\n");
    EXPECT_EQ(t.size(), 3u);
    EXPECT_EQ(t.dim(), 4u);
    const auto* beta = t.find("beta");
    ASSERT_NE(beta, nullptr);
    EXPECT_FLOAT_EQ((*beta)[1], 1.0f);
}

TEST(Embeddings, BinaryFormatMatchesText) {
    std::string bin = "2 3\n";
    auto row = [&](const std::string& token, std::vector<float> v) {
        bin += token + " ";
        for (float f : v) bin.append(reinterpret_cast<const char*>(&f), 4);
        bin += "\n";
    };
    row("dka", {0.5f, 0.25f, -1.0f});
    row("keto", {3.0f, 0.0f, 4.0f});
    const auto b = parse_binary_embeddings(bin);
    const auto t = parse_text_embeddings("2 3\ndka 0.5 0.25 -1\nketo 3 0 4\n");
    ASSERT_EQ(b.size(), 2u);
    for (const std::string tok : {"dka", "keto"}) {
        for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR((*b.find(tok))[i], (*t.find(tok))[i], 1e-7);
    }
    EXPECT_FLOAT_EQ((*b.find("keto"))[0], 0.6f);
}

TEST(Embeddings, Errors) {
    EXPECT_EQ(kind_of([] { parse_text_embeddings("1 4\nalpha 1 0 0\n"); }), ErrorKind::DimensionMismatch);
    EXPECT_EQ(kind_of([] { parse_text_embeddings("1 2\nalpha 0 0\n"); }), ErrorKind::ZeroVector);
    EXPECT_EQ(kind_of([] { parse_text_embeddings("3 2\nalpha 0 1\n"); }), ErrorKind::TruncatedFile);
    EXPECT_EQ(kind_of([] { parse_binary_embeddings("1 2\nalpha abc"); }), ErrorKind::TruncatedFile);
}

TEST(Embeddings, FormatGuess) {
    EXPECT_EQ(guess_embedding_format("vectors.bin"), EmbeddingFormat::Binary);
    EXPECT_EQ(guess_embedding_format("vectors.txt"), EmbeddingFormat::Text);
}

TEST(Embeddings, LoadFromFile) {
    cohort::testing::TempDir dir("emb");
    cohort::testing::write_file(dir / "v.txt", "2 2\na 1 0\nb 0 1\n");
    EXPECT_EQ(load_embeddings(dir / "v.txt", EmbeddingFormat::Text).size(), 2u);
}

TEST(VectorFor, DirectJoinedAndFallback) {
    auto t = fixture();
    ASSERT_TRUE(t.vector_for("ketoacidosis").has_value());
    EXPECT_FLOAT_EQ((*t.vector_for("ketoacidosis"))[0], 1.0f);
    const auto mean = t.vector_for("renal failure");
    ASSERT_TRUE(mean.has_value());
    EXPECT_NEAR((*mean)[1], 1.0 / std::sqrt(2.0), 1e-6);
    EXPECT_NEAR((*mean)[2], 1.0 / std::sqrt(2.0), 1e-6);
    t.add("renal_failure", {1.0f, 1.0f, 1.0f});
    EXPECT_NEAR((*t.vector_for("renal failure"))[0], 1.0 / std::sqrt(3.0), 1e-6);
    EXPECT_FALSE(t.vector_for("zzzz").has_value());
}

TEST(Neighbors, ThresholdAndOrder) {
    const auto t = fixture();
    const auto n = t.neighbors("ketoacidosis", 0.6);
    ASSERT_EQ(n.size(), 1u);
    EXPECT_EQ(n[0].first, "dka");
    EXPECT_NEAR(n[0].second, 0.9, 1e-6);
    EXPECT_TRUE(t.neighbors("ketoacidosis", 0.95).empty());
    EXPECT_EQ(kind_of([&] { t.neighbors("zzzz", 0.5); }), ErrorKind::UnknownTerm);
}

TEST(Neighbors, KMaxAndTies) {
    EmbeddingTable t(2);
    t.add("seed", {1.0f, 0.0f});
    t.add("b", {1.0f, 0.1f});
    t.add("a", {1.0f, -0.1f});
    t.add("c", {1.0f, 0.5f});
    const auto n = t.neighbors("seed", 0.1, 2);
    ASSERT_EQ(n.size(), 2u);
    EXPECT_EQ(n[0].first, "a");
    EXPECT_EQ(n[1].first, "b");
}

TEST(Cosine, UnitVectors) {
    EXPECT_NEAR(cosine({1, 0}, {0, 1}), 0.0, 1e-12);
    EXPECT_NEAR(cosine({1, 1}, {2, 2}), 1.0, 1e-6);
}
